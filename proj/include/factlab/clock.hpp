#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <thread>

namespace factlab {

// Millisecond time source used for latency and wall-time stamps. The frozen
// clock makes traces byte-reproducible.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

class SteadyClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
  }
};

class FrozenClock final : public Clock {
 public:
  explicit FrozenClock(std::int64_t at = 0) : at_(at) {}
  std::int64_t now_ms() const override { return at_; }

 private:
  std::int64_t at_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace factlab
