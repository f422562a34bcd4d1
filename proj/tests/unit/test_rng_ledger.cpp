#include <cmath>

#include "helpers.hpp"
#include "mmosim/ledger.hpp"
#include "mmosim/rng.hpp"

using namespace mmosim;

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible and keyed") {
  RngStream a(42, 7, StreamPurpose::Policy), b(42, 7, StreamPurpose::Policy);
  RngStream c(42, 8, StreamPurpose::Policy), d(42, 7, StreamPurpose::Battle), e(43, 7, StreamPurpose::Policy);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
    CHECK(x != e.next_u64());
  }
}

TEST_CASE("counter restore resumes the sequence") {
  RngStream a(1, 2, StreamPurpose::Economy);
  for (int i = 0; i < 17; ++i) a.uniform();
  RngStream b(1, 2, StreamPurpose::Economy, a.counter());
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform moments") {
  RngStream r(5, 0, StreamPurpose::Generator);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
}

TEST_CASE("uniform_int covers the closed range") {
  RngStream r(9, 1, StreamPurpose::Session);
  std::array<int, 5> seen{};
  for (int i = 0; i < 5000; ++i) {
    const auto v = r.uniform_int(3, 7);
    REQUIRE(v >= 3);
    REQUIRE(v <= 7);
    ++seen[v - 3];
  }
  for (int c : seen) CHECK(c > 800);
}

TEST_CASE("normal moments") {
  RngStream r(11, 3, StreamPurpose::Battle);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

}  // TEST_SUITE

TEST_SUITE("ledger") {

TEST_CASE("double entry closure under random transfers") {
  std::map<Uid, Currency> players;
  for (Uid u = 0; u < 20; ++u) players[u] = 1000;
  Ledger l(1'000'000, players);
  const Currency total = l.initial_total();
  CHECK(total == 1'020'000);
  RngStream r(3, 0, StreamPurpose::Economy);
  for (int i = 0; i < 5000; ++i) {
    const Uid a = static_cast<Uid>(r.uniform_int(0, 19));
    const Uid b = static_cast<Uid>(r.uniform_int(0, 19));
    const Currency amt = r.uniform_int(1, 200);
    const auto t = SimTime::from_abs(i, 24);
    try {
      switch (r.uniform_int(0, 3)) {
        case 0: l.transfer(t, Account::reserve(), Account::player(a), amt, TransferKind::BattleReward); break;
        case 1: l.transfer(t, Account::player(a), Account::reserve(), amt, TransferKind::NpcPurchase); break;
        case 2: l.transfer(t, Account::player(a), Account::burn(), amt, TransferKind::Tax); break;
        default:
          if (a != b) l.transfer(t, Account::player(a), Account::player(b), amt, TransferKind::MarketTrade);
      }
    } catch (const SimError& e) {
      REQUIRE(e.code() == ErrorCode::InsufficientFunds);
    }
    REQUIRE(l.players_total() + l.reserve() + l.burn() == total);
  }
  Currency burned = 0;
  for (const auto& t : l.transfers())
    if (t.kind == TransferKind::Tax) burned += t.amount;
  CHECK(burned == l.burn());
}

TEST_CASE("insufficient funds leaves balances unchanged") {
  Ledger l(100, {{1, 50}});
  CHECK_THROWS_AS(l.transfer({}, Account::player(1), Account::reserve(), 51, TransferKind::NpcPurchase), SimError);
  CHECK(l.player_balance(1) == 50);
  CHECK(l.reserve() == 100);
}

TEST_CASE("structural rules") {
  Ledger l(100, {{1, 50}, {2, 50}});
  auto code = [&](auto f) {
    try {
      f();
    } catch (const SimError& e) {
      return e.code();
    }
    return ErrorCode::RunFinished;
  };
  CHECK(code([&] { l.transfer({}, Account::player(1), Account::player(2), 0, TransferKind::MarketTrade); }) ==
        ErrorCode::InvalidValue);
  CHECK(code([&] { l.transfer({}, Account::player(1), Account::player(1), 5, TransferKind::MarketTrade); }) ==
        ErrorCode::InvalidValue);
  CHECK(code([&] { l.transfer({}, Account::player(1), Account::player(2), 5, TransferKind::BattleReward); }) ==
        ErrorCode::InvalidValue);
  CHECK(code([&] { l.transfer({}, Account::player(1), Account::player(2), 5, TransferKind::Tax); }) ==
        ErrorCode::InvalidValue);
  CHECK(code([&] { l.transfer({}, Account::burn(), Account::player(2), 5, TransferKind::Adjustment); }) ==
        ErrorCode::InvalidValue);
  CHECK(code([&] { l.transfer({}, Account::player(9), Account::reserve(), 5, TransferKind::NpcPurchase); }) !=
        ErrorCode::RunFinished);
}

TEST_CASE("transfer seqs are gapless") {
  Ledger l(1000, {{1, 0}});
  for (int i = 0; i < 10; ++i) l.transfer({}, Account::reserve(), Account::player(1), 1, TransferKind::BattleReward);
  for (std::size_t i = 0; i < l.transfers().size(); ++i) CHECK(l.transfers()[i].seq == i + 1);
}

}  // TEST_SUITE
