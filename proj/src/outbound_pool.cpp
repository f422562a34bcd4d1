#include "mmosim/outbound_pool.hpp"

#include <algorithm>

#include "mmosim/domain.hpp"

namespace mmosim {

OutboundPool::OutboundPool(std::size_t cap) : cap_(cap) {
  if (cap == 0) throw SimError(ErrorCode::InvalidConfig, "max_outbound_inflight must be >= 1");
}

void OutboundPool::Lease::release() {
  if (pool_) {
    pool_->release_one();
    pool_ = nullptr;
  }
}

OutboundPool::Lease OutboundPool::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_ || in_flight_ < cap_; });
  if (closed_) throw SimError(ErrorCode::PoolClosed, "outbound pool is shut down");
  ++in_flight_;
  ++total_;
  max_in_flight_ = std::max(max_in_flight_, in_flight_);
  return Lease(this);
}

void OutboundPool::release_one() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

void OutboundPool::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t OutboundPool::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

std::size_t OutboundPool::max_in_flight() const {
  std::lock_guard lock(mu_);
  return max_in_flight_;
}

std::size_t OutboundPool::total_acquired() const {
  std::lock_guard lock(mu_);
  return total_;
}

}  // namespace mmosim
