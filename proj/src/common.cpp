#include "hq/common.hpp"
#include "hq/parallel.hpp"
#include "hq/run_control.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace hq {

Labels row_argmax(const Matrix& m) {
  Labels out(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size()) throw ConfigError("accuracy: length mismatch");
  if (pred.empty()) throw ConfigError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

std::size_t default_threads() {
  if (const char* env = std::getenv("HQ_NUM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> value{default_threads()};
  return value;
}

std::atomic<int> taint_guards{0};

}  // namespace

std::size_t num_threads() { return thread_setting().load(); }

void set_num_threads(std::size_t n) { thread_setting().store(n == 0 ? default_threads() : n); }

TaintGuard::TaintGuard() { ++taint_guards; }
TaintGuard::~TaintGuard() { --taint_guards; }
bool TaintGuard::active() { return taint_guards.load() > 0; }

void check_fit_input(bool from_test, std::string_view where) {
  if (from_test && TaintGuard::active()) {
    throw TaintError("test-split data reached fit phase: " + std::string(where));
  }
}

Deadline Deadline::after_seconds(double seconds) {
  Deadline d;
  d.limit_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
  return d;
}

void Deadline::check(std::string_view where) const {
  if (expired()) throw TimeoutError("wall-clock timeout exceeded during " + std::string(where));
}

}  // namespace hq
