#pragma once

#include <chrono>

namespace ulab {

// Monotonic stopwatch that can be paused around bookkeeping (evaluation
// passes) that should not count towards a measured run time.
class Stopwatch {
 public:
  using Clock = std::chrono::steady_clock;

  void start() {
    elapsed_ = Clock::duration::zero();
    resume();
  }
  void pause() {
    if (running_) elapsed_ += Clock::now() - since_;
    running_ = false;
  }
  void resume() {
    if (!running_) since_ = Clock::now();
    running_ = true;
  }
  double seconds() const {
    auto total = elapsed_;
    if (running_) total += Clock::now() - since_;
    return std::chrono::duration<double>(total).count();
  }

 private:
  Clock::duration elapsed_{};
  Clock::time_point since_{};
  bool running_ = false;
};

}  // namespace ulab
