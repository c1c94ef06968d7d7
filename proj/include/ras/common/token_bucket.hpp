#pragma once

#include <algorithm>
#include <chrono>
#include <mutex>
#include <thread>

namespace ras {

/// Thread-safe token bucket. `rate` tokens per second, at most `burst` saved.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double rate, double burst)
      : rate_(rate), burst_(std::max(burst, 1.0)), tokens_(burst_), last_(Clock::now()) {}

  /// Takes one token if available.
  bool try_acquire() {
    std::lock_guard lock(mutex_);
    refill(Clock::now());
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
  }

  /// Blocks until a token is available. Waiters are served in arrival order
  /// of their reservations.
  void acquire() {
    Clock::time_point ready;
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      refill(now);
      tokens_ -= 1.0;
      if (tokens_ >= 0.0) return;
      ready = now + std::chrono::duration_cast<Clock::duration>(
                        std::chrono::duration<double>(-tokens_ / rate_));
    }
    std::this_thread::sleep_until(ready);
  }

 private:
  void refill(Clock::time_point now) {
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    last_ = now;
  }

  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

}  // namespace ras
