#pragma once

#include <chrono>
#include <optional>
#include <string_view>

namespace hq {

/// While at least one TaintGuard is alive, every fit-phase entry point
/// throws TaintError when handed data derived from a test split.
class TaintGuard {
 public:
  TaintGuard();
  ~TaintGuard();
  TaintGuard(const TaintGuard&) = delete;
  TaintGuard& operator=(const TaintGuard&) = delete;

  static bool active();
};

/// Called at the top of every fit routine.
void check_fit_input(bool from_test, std::string_view where);

/// Optional wall-clock limit checked cooperatively between units of work.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  static Deadline after_seconds(double seconds);

  bool expired() const { return limit_ && Clock::now() >= *limit_; }
  /// Throws TimeoutError if expired.
  void check(std::string_view where) const;

 private:
  std::optional<Clock::time_point> limit_;
};

/// Accumulates elapsed seconds into a target on destruction.
class ScopedTimer {
 public:
  explicit ScopedTimer(double& target) : target_(target), start_(Deadline::Clock::now()) {}
  ~ScopedTimer() {
    target_ += std::chrono::duration<double>(Deadline::Clock::now() - start_).count();
  }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  double& target_;
  Deadline::Clock::time_point start_;
};

}  // namespace hq
