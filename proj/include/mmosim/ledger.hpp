#pragma once

#include <map>
#include <vector>

#include "mmosim/domain.hpp"

namespace mmosim {

/// Integer double-entry ledger over player accounts, the system reserve and
/// the burn account. Every balance change is a Transfer; the sum of all
/// balances never changes after construction.
class Ledger {
 public:
  Ledger() = default;
  Ledger(Currency initial_reserve, const std::map<Uid, Currency>& initial_players);

  /// Moves `amount` between accounts. Throws InsufficientFunds if `from`
  /// would go negative and InvalidValue on a structurally invalid transfer.
  const Transfer& transfer(SimTime step, Account from, Account to, Currency amount,
                           TransferKind kind);

  Currency balance(const Account& a) const;
  Currency player_balance(Uid uid) const { return balance(Account::player(uid)); }
  Currency reserve() const { return reserve_; }
  Currency burn() const { return burn_; }
  Currency players_total() const;
  Currency initial_total() const { return initial_total_; }
  bool has_player(Uid uid) const { return players_.contains(uid); }

  const std::vector<Transfer>& transfers() const { return transfers_; }
  const std::map<Uid, Currency>& player_balances() const { return players_; }

  /// Restores the raw balances (snapshot restore). The transfer journal is
  /// not carried across snapshots; `next_seq` continues numbering.
  static Ledger restore(Currency reserve, Currency burn, std::map<Uid, Currency> players,
                        Currency initial_total, Seq next_seq);
  Seq next_seq() const { return next_seq_; }

 private:
  Currency& slot(const Account& a);

  Currency reserve_ = 0;
  Currency burn_ = 0;
  std::map<Uid, Currency> players_;
  Currency initial_total_ = 0;
  std::vector<Transfer> transfers_;
  Seq next_seq_ = 1;
};

}  // namespace mmosim
