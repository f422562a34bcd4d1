#pragma once

#include <condition_variable>
#include <cstddef>
#include <mutex>

namespace mmosim {

/// Caps the number of concurrent outbound calls (remote policies, bridge
/// publishes). Callers beyond the cap block until a lease is released.
class OutboundPool {
 public:
  explicit OutboundPool(std::size_t cap);
  OutboundPool(const OutboundPool&) = delete;
  OutboundPool& operator=(const OutboundPool&) = delete;

  class Lease {
   public:
    Lease() = default;
    explicit Lease(OutboundPool* pool) : pool_(pool) {}
    Lease(Lease&& o) noexcept : pool_(o.pool_) { o.pool_ = nullptr; }
    Lease& operator=(Lease&& o) noexcept {
      if (this != &o) {
        release();
        pool_ = o.pool_;
        o.pool_ = nullptr;
      }
      return *this;
    }
    ~Lease() { release(); }
    void release();
    bool held() const { return pool_ != nullptr; }

   private:
    OutboundPool* pool_ = nullptr;
  };

  /// Throws PoolClosed if the pool is (or becomes) closed while waiting.
  Lease acquire();
  void close();

  std::size_t cap() const { return cap_; }
  std::size_t in_flight() const;
  std::size_t max_in_flight() const;
  std::size_t total_acquired() const;

 private:
  void release_one();

  const std::size_t cap_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t max_in_flight_ = 0;
  std::size_t total_ = 0;
  bool closed_ = false;
};

}  // namespace mmosim
