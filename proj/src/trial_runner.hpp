#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace fhash::detail {

// Evaluates trial k with seed base_seed + k for k in [0, trials). Workers get
// disjoint contiguous seed ranges and write into a pre-sized result vector,
// so the output does not depend on `jobs`. make_worker() is called once per
// worker and returns a callable T(std::uint64_t seed) owning its scratch.
template <class T, class MakeWorker>
std::vector<T> run_trials(std::uint64_t trials, std::uint64_t base_seed, unsigned jobs,
                          MakeWorker&& make_worker) {
  std::vector<T> out(trials);
  if (trials == 0) return out;
  const std::uint64_t workers =
      std::clamp<std::uint64_t>(jobs == 0 ? 1 : jobs, 1, trials);

  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    auto worker = make_worker();
    for (std::uint64_t k = begin; k < end; ++k) out[k] = worker(base_seed + k);
  };

  if (workers == 1) {
    work(0, trials);
    return out;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::uint64_t w = 0; w < workers; ++w) {
    const std::uint64_t begin = trials * w / workers;
    const std::uint64_t end = trials * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Sparse accumulator over m buckets with O(touched) reset.
class BucketAccumulator {
 public:
  explicit BucketAccumulator(std::uint32_t m) : values_(m, 0.0), stamp_(m, 0) {}

  void add(std::uint32_t k, double v) {
    if (stamp_[k] != epoch_) {
      stamp_[k] = epoch_;
      values_[k] = 0.0;
      touched_.push_back(k);
    }
    values_[k] += v;
  }

  bool contains(std::uint32_t k) const { return stamp_[k] == epoch_; }
  double value(std::uint32_t k) const { return contains(k) ? values_[k] : 0.0; }
  const std::vector<std::uint32_t>& touched() const { return touched_; }

  double squared_norm() const {
    double s = 0.0;
    for (auto k : touched_) s += values_[k] * values_[k];
    return s;
  }

  double max_abs() const {
    double s = 0.0;
    for (auto k : touched_) s = std::max(s, values_[k] < 0 ? -values_[k] : values_[k]);
    return s;
  }

  void reset() {
    touched_.clear();
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0u);
      epoch_ = 1;
    }
  }

 private:
  std::vector<double> values_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint32_t> touched_;
  std::uint32_t epoch_ = 1;
};

}  // namespace fhash::detail
