#include "mmosim/ledger.hpp"

#include <numeric>

namespace mmosim {

Ledger::Ledger(Currency initial_reserve, const std::map<Uid, Currency>& initial_players)
    : reserve_(initial_reserve), players_(initial_players) {
  if (initial_reserve < 0) throw SimError(ErrorCode::InvalidValue, "negative initial reserve");
  for (const auto& [uid, bal] : players_)
    if (bal < 0)
      throw SimError(ErrorCode::InvalidValue, "negative initial balance for " + std::to_string(uid));
  initial_total_ = reserve_ + players_total();
}

Ledger Ledger::restore(Currency reserve, Currency burn, std::map<Uid, Currency> players,
                       Currency initial_total, Seq next_seq) {
  Ledger l;
  l.reserve_ = reserve;
  l.burn_ = burn;
  l.players_ = std::move(players);
  l.initial_total_ = initial_total;
  l.next_seq_ = next_seq;
  if (l.reserve_ + l.burn_ + l.players_total() != initial_total)
    throw SimError(ErrorCode::CorruptSnapshot, "ledger balances do not sum to the initial total");
  return l;
}

Currency& Ledger::slot(const Account& a) {
  switch (a.kind) {
    case AccountKind::SystemReserve: return reserve_;
    case AccountKind::Burn: return burn_;
    case AccountKind::Player: {
      auto it = players_.find(a.uid);
      if (it == players_.end())
        throw SimError(ErrorCode::InvalidValue, "unknown account " + to_string(a));
      return it->second;
    }
  }
  throw SimError(ErrorCode::InvalidValue, "bad account kind");
}

Currency Ledger::balance(const Account& a) const {
  return const_cast<Ledger*>(this)->slot(a);
}

Currency Ledger::players_total() const {
  return std::accumulate(players_.begin(), players_.end(), Currency{0},
                         [](Currency acc, const auto& kv) { return acc + kv.second; });
}

const Transfer& Ledger::transfer(SimTime step, Account from, Account to, Currency amount,
                                 TransferKind kind) {
  if (amount <= 0) throw SimError(ErrorCode::InvalidValue, "transfer amount must be > 0");
  if (from == to) throw SimError(ErrorCode::InvalidValue, "transfer to self");
  if (from.kind == AccountKind::Burn)
    throw SimError(ErrorCode::InvalidValue, "burned currency cannot be spent");
  if (kind == TransferKind::BattleReward && from.kind != AccountKind::SystemReserve)
    throw SimError(ErrorCode::InvalidValue, "battle reward must come from the reserve");
  if (kind == TransferKind::Tax && to.kind != AccountKind::Burn)
    throw SimError(ErrorCode::InvalidValue, "tax must go to burn");
  if (kind == TransferKind::NpcPurchase && to.kind != AccountKind::SystemReserve)
    throw SimError(ErrorCode::InvalidValue, "npc purchase must go to the reserve");

  Currency& src = slot(from);
  Currency& dst = slot(to);
  if (src < amount)
    throw SimError(ErrorCode::InsufficientFunds, to_string(from) + " has " + std::to_string(src) +
                                                     ", needs " + std::to_string(amount));
  src -= amount;
  dst += amount;
  transfers_.push_back(Transfer{next_seq_++, step, from, to, amount, kind});
  return transfers_.back();
}

}  // namespace mmosim
