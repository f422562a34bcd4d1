#pragma once

// Counter-based random streams. A stream is keyed by (run seed, uid, purpose)
// and its whole state is the draw counter, so an agent's draws do not depend
// on population size or scheduling order, and snapshots only store counters.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mmosim {

enum class StreamPurpose : std::uint64_t {
  Session = 1,
  Policy = 2,
  Battle = 3,
  Economy = 4,
  Generator = 5,
  Fraud = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t id, StreamPurpose purpose, std::uint64_t counter = 0)
      : key_(splitmix64(splitmix64(seed ^ 0x6a09e667f3bcc909ULL) ^
                        splitmix64(id * 0x100000001b3ULL + static_cast<std::uint64_t>(purpose)))),
        counter_(counter) {}

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  /// Standard normal via Box-Muller (consumes two draws).
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace mmosim
