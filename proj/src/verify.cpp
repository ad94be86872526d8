#include "fhash/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fhash/errors.hpp"
#include "fhash/feature_map.hpp"
#include "fhash/murmur3.hpp"
#include "fhash/stats.hpp"
#include "trial_runner.hpp"

namespace fhash::verify {
namespace {

using detail::BucketAccumulator;
using detail::run_trials;
using Flat = std::vector<std::pair<std::string, double>>;

Flat flatten(const SparseVector& x) { return {x.entries().begin(), x.entries().end()}; }

void accumulate(const Flat& x, const HashConfig& cfg, BucketAccumulator& acc) {
  for (const auto& [token, value] : x) {
    const HashSlot s = hash_token_unchecked(token, cfg);
    acc.add(s.bucket, s.sign * value);
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

class Hypotheses {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) violations_.push_back(what);
  }

  // Throws under `enforce`; otherwise copies the violations into the report.
  void apply(HypothesisMode mode, TailReport& report) const {
    if (violations_.empty()) return;
    if (mode == HypothesisMode::enforce) {
      std::string msg = report.kind + ": hypothesis violated: " + violations_.front();
      for (std::size_t i = 1; i < violations_.size(); ++i) msg += "; " + violations_[i];
      throw PreconditionError(msg);
    }
    report.hypotheses_met = false;
    report.violations = violations_;
  }

 private:
  std::vector<std::string> violations_;
};

void check_unit_norm(Hypotheses& h, const SparseVector& x, const std::string& name) {
  h.require(std::abs(x.l2() - 1.0) <= kUnitNormTolerance,
            "|" + name + "|_2 = 1 (got " + fmt(x.l2()) + ")");
}

void finalize(TailReport& r, std::uint64_t events, std::uint64_t trials, double bound) {
  r.events = events;
  r.trials_used = trials;
  r.bound = bound;
  r.bound_vacuous = bound >= 1.0;
  r.observed_frequency = trials ? static_cast<double>(events) / static_cast<double>(trials) : 0.0;
  r.empirical_tail = stats::wilson_upper(events, trials, kWilsonConfidence);
  r.pass = r.empirical_tail <= bound;
  r.low_power = bound * static_cast<double>(trials) < kMinExpectedEvents;
  if (r.low_power) {
    r.status = Status::low_power;
  } else {
    r.status = r.pass ? Status::pass : Status::fail;
  }
}

// A statistic that is identically zero: the tail is exactly zero, no sampling.
void finalize_degenerate(TailReport& r, double bound, const std::string& why) {
  r.events = 0;
  r.trials_used = 0;
  r.bound = bound;
  r.bound_vacuous = bound >= 1.0;
  r.observed_frequency = 0.0;
  r.empirical_tail = 0.0;
  r.pass = true;
  r.status = Status::pass;
  r.details["degenerate"] = why;
}

std::uint64_t count_events(const std::vector<char>& flags) {
  return static_cast<std::uint64_t>(std::count(flags.begin(), flags.end(), char{1}));
}

}  // namespace

TailExperiment::TailExperiment(int bits_, double eps_, double delta_, std::uint64_t trials_,
                               std::uint64_t base_seed_)
    : bits(bits_), eps(eps_), delta(delta_), trials(trials_), base_seed(base_seed_) {
  if (bits < kMinBits || bits > kMaxBits) throw InputError("bits out of range");
  if (!(eps > 0 && eps < 1)) throw InputError("eps must lie in (0, 1)");
  if (!(delta > 0 && delta < 1)) throw InputError("delta must lie in (0, 1)");
  const auto min_trials = static_cast<std::uint64_t>(std::ceil(100.0 / delta - 1e-9));
  if (trials < min_trials) {
    throw InputError("trials must be >= ceil(100/delta) = " + std::to_string(min_trials) +
                     ", got " + std::to_string(trials));
  }
}

nlohmann::json TailExperiment::to_json() const {
  return {{"bits", bits},   {"m", m()},           {"eps", eps},
          {"delta", delta}, {"trials", trials}, {"base_seed", base_seed}};
}

std::string to_string(Status s) {
  switch (s) {
    case Status::pass:
      return "pass";
    case Status::fail:
      return "fail";
    case Status::low_power:
      return "low-power";
    case Status::precondition_error:
      return "precondition-error";
  }
  return "unknown";
}

nlohmann::json TailReport::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["status"] = to_string(status);
  j["pass"] = pass;
  j["empirical_tail"] = empirical_tail;
  j["observed_frequency"] = observed_frequency;
  j["events"] = events;
  j["trials_used"] = trials_used;
  j["bound"] = bound;
  j["bound_vacuous"] = bound_vacuous;
  j["low_power"] = low_power;
  j["hypotheses_met"] = hypotheses_met;
  j["violations"] = violations;
  j["config"] = config;
  j["details"] = details.is_null() ? nlohmann::json::object() : details;
  return j;
}

DistortionParams distortion_params(const SparseVector& x, const SparseVector& x2, std::uint64_t m) {
  const SparseVector diff = x - x2;
  double eta = 0.0;
  for (const SparseVector* v : {&x, &x2, &diff})
    if (v->l2() > 0) eta = std::max(eta, v->linf() / v->l2());
  const double sigma = std::sqrt(std::max({variance_closed_form(x, x, m),
                                           variance_closed_form(x2, x2, m),
                                           variance_closed_form(diff, diff, m)}));
  return {eta, sigma, x.squared_l2() + x2.squared_l2() + diff.squared_l2()};
}

TailReport check_norm_concentration(const TailExperiment& exp, const SparseVector& x,
                                    const RunOptions& opts) {
  TailReport r;
  r.kind = "norm_concentration";
  r.config = exp.to_json();
  const double m = static_cast<double>(exp.m());
  const double m_min = kDimensionConstant * std::log(1.0 / exp.delta) / (exp.eps * exp.eps);
  const double linf_max =
      exp.eps / (kLinfConstant * std::sqrt(std::log(1.0 / exp.delta) * std::log(m / exp.delta)));

  Hypotheses h;
  check_unit_norm(h, x, "x");
  h.require(m >= m_min, "m >= 72 log(1/delta)/eps^2 (m = " + fmt(m) + ", need " + fmt(m_min) + ")");
  h.require(x.linf() <= linf_max, "|x|_inf <= eps/(18 sqrt(log(1/delta) log(m/delta))) (|x|_inf = " +
                                      fmt(x.linf()) + ", limit " + fmt(linf_max) + ")");
  h.apply(opts.hypotheses, r);
  r.details = {{"x_l2", x.l2()}, {"x_linf", x.linf()}, {"nnz", x.nnz()},
               {"m_min", m_min}, {"linf_limit", linf_max}};

  const Flat flat = flatten(x);
  const double target = x.squared_l2();
  const auto flags = run_trials<char>(exp.trials, exp.base_seed, opts.jobs, [&] {
    return [&, acc = BucketAccumulator(static_cast<std::uint32_t>(exp.m()))](
               std::uint64_t seed) mutable -> char {
      acc.reset();
      accumulate(flat, HashConfig::for_trial(exp.bits, seed), acc);
      return std::abs(acc.squared_norm() - target) >= exp.eps ? 1 : 0;
    };
  });
  finalize(r, count_events(flags), exp.trials, 2.0 * exp.delta);
  return r;
}

TailReport check_inner_concentration(const TailExperiment& exp, const SparseVector& x,
                                     const SparseVector& x2, const RunOptions& opts) {
  TailReport r;
  r.kind = "inner_concentration";
  r.config = exp.to_json();
  const double m = static_cast<double>(exp.m());
  const DistortionParams dp = distortion_params(x, x2, exp.m());
  const double eta_max = exp.eps / std::log(m / exp.delta);
  const double m_min = kDimensionConstant / (exp.eps * exp.eps) * std::log(1.0 / exp.delta);

  Hypotheses h;
  h.require(dp.eta <= eta_max,
            "eta <= eps/log(m/delta) (eta = " + fmt(dp.eta) + ", limit " + fmt(eta_max) + ")");
  h.require(m >= m_min, "m >= (72/eps^2) log(1/delta) (m = " + fmt(m) + ", need " + fmt(m_min) + ")");
  h.apply(opts.hypotheses, r);

  const double exact = x.dot(x2);
  const double threshold = exp.eps * dp.delta_cap / 2.0;
  r.details = {{"eta", dp.eta},     {"sigma", dp.sigma_max}, {"Delta", dp.delta_cap},
               {"exact_inner", exact}, {"threshold", threshold}, {"eta_limit", eta_max},
               {"m_min", m_min}};

  const Flat fx = flatten(x);
  const Flat fx2 = flatten(x2);
  const auto flags = run_trials<char>(exp.trials, exp.base_seed, opts.jobs, [&] {
    const auto mm = static_cast<std::uint32_t>(exp.m());
    return [&, a = BucketAccumulator(mm), b = BucketAccumulator(mm)](
               std::uint64_t seed) mutable -> char {
      a.reset();
      b.reset();
      const HashConfig cfg = HashConfig::for_trial(exp.bits, seed);
      accumulate(fx, cfg, a);
      accumulate(fx2, cfg, b);
      double s = 0.0;
      for (auto k : a.touched()) s += a.value(k) * b.value(k);
      return std::abs(s - exact) > threshold ? 1 : 0;
    };
  });
  finalize(r, count_events(flags), exp.trials, exp.delta);
  return r;
}

TailReport check_union_bound(const TailExperiment& exp, const std::vector<SparseVector>& xs,
                             const RunOptions& opts) {
  TailReport r;
  r.kind = "union_bound";
  r.config = exp.to_json();
  r.config["n"] = xs.size();
  const double m = static_cast<double>(exp.m());
  const double n = static_cast<double>(xs.size());

  struct Pair {
    std::size_t i, j;
    double dist2;
  };
  std::vector<Pair> pairs;
  double eta = 0.0;
  const double eta_max = exp.eps / std::log(m / exp.delta);
  Hypotheses h;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const SparseVector d = xs[i] - xs[j];
      if (d.empty()) continue;  // identical vectors: distance 0 is always preserved
      const double ratio = d.linf() / d.l2();
      eta = std::max(eta, ratio);
      h.require(ratio <= eta_max, "pair (" + std::to_string(i) + "," + std::to_string(j) +
                                      "): |xi-xj|_inf <= eta |xi-xj|_2 with eta = " +
                                      fmt(eta_max) + " (ratio " + fmt(ratio) + ")");
      pairs.push_back({i, j, d.squared_l2()});
    }
  }
  if (pairs.empty()) {
    finalize_degenerate(r, exp.delta, "no pairs");
    return r;
  }
  const double m_min = kDimensionConstant / (exp.eps * exp.eps) * std::log(n / exp.delta);
  h.require(m >= m_min,
            "m >= (72/eps^2) log(n/delta) (m = " + fmt(m) + ", need " + fmt(m_min) + ")");
  h.apply(opts.hypotheses, r);
  r.details = {{"pairs", pairs.size()}, {"eta", eta}, {"eta_limit", eta_max}, {"m_min", m_min}};

  std::vector<Flat> flats;
  for (const auto& x : xs) flats.push_back(flatten(x));
  const auto flags = run_trials<char>(exp.trials, exp.base_seed, opts.jobs, [&] {
    std::vector<BucketAccumulator> accs(xs.size(),
                                        BucketAccumulator(static_cast<std::uint32_t>(exp.m())));
    return [&, accs = std::move(accs)](std::uint64_t seed) mutable -> char {
      const HashConfig cfg = HashConfig::for_trial(exp.bits, seed);
      for (std::size_t i = 0; i < accs.size(); ++i) {
        accs[i].reset();
        accumulate(flats[i], cfg, accs[i]);
      }
      for (const Pair& p : pairs) {
        const auto& a = accs[p.i];
        const auto& b = accs[p.j];
        double s = 0.0;
        for (auto k : a.touched()) {
          const double d = a.value(k) - b.value(k);
          s += d * d;
        }
        for (auto k : b.touched())
          if (!a.contains(k)) s += b.value(k) * b.value(k);
        if (std::abs(s - p.dist2) / p.dist2 > exp.eps) return 1;
      }
      return 0;
    };
  });
  finalize(r, count_events(flags), exp.trials, exp.delta);
  return r;
}

std::vector<TaskWeights> random_task_weights(std::size_t n_tasks, std::size_t support,
                                             const std::vector<std::string>& vocab,
                                             std::uint64_t seed) {
  if (support == 0 || support > vocab.size())
    throw InputError("task support must lie in [1, vocab size]");
  std::mt19937_64 rng(seed);
  std::vector<TaskWeights> out;
  const double v = 1.0 / std::sqrt(static_cast<double>(support));
  std::vector<std::size_t> idx(vocab.size());
  for (std::size_t k = 0; k < n_tasks; ++k) {
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    SparseVector::Map w;
    // Partial Fisher-Yates: first `support` entries are a uniform sample.
    for (std::size_t i = 0; i < support; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      w[vocab[idx[i]]] = (rng() & 1u) ? v : -v;
    }
    out.push_back({"task" + std::to_string(k), SparseVector(std::move(w))});
  }
  return out;
}

TailReport check_interference(const TailExperiment& exp, const std::vector<TaskWeights>& others,
                              const SparseVector& x, const std::string& task,
                              const RunOptions& opts) {
  TailReport r;
  r.kind = "interference";
  r.config = exp.to_json();
  r.config["task"] = task;
  r.config["other_tasks"] = others.size();
  if (task.empty()) throw InputError("interference: empty task");
  for (const auto& o : others) {
    if (o.task == task)
      throw PreconditionError("interference: task '" + task + "' appears in the construction of w");
  }
  if (x.empty()) {
    finalize_degenerate(r, 0.0, "x = 0: <w, phi_u(x)> is identically zero");
    return r;
  }

  // Personalized token strings do not depend on the trial; build them once.
  Flat w_tokens;
  for (const auto& o : others)
    for (const auto& [t, v] : o.weights.entries()) w_tokens.emplace_back(personalize(t, o.task), v);
  Flat x_tokens;
  for (const auto& [t, v] : x.entries()) x_tokens.emplace_back(personalize(t, task), v);

  struct Trial {
    char event;
    double bound;
    double w_l2;
  };
  const auto mm = static_cast<std::uint32_t>(exp.m());
  const auto results = run_trials<Trial>(exp.trials, exp.base_seed, opts.jobs, [&] {
    return [&, w = BucketAccumulator(mm)](std::uint64_t seed) mutable -> Trial {
      w.reset();
      const HashConfig cfg = HashConfig::for_trial(exp.bits, seed);
      accumulate(w_tokens, cfg, w);
      double s = 0.0;
      for (const auto& [token, value] : x_tokens) {
        const HashSlot slot = hash_token_unchecked(token, cfg);
        s += slot.sign * value * w.value(slot.bucket);
      }
      const double w_l2 = std::sqrt(w.squared_norm());
      const double b =
          bernstein_interference_bound(w_l2, w.max_abs(), x.l2(), x.linf(), exp.m(), exp.eps).raw;
      return {static_cast<char>(std::abs(s) > exp.eps ? 1 : 0), b, w_l2};
    };
  });

  std::uint64_t events = 0;
  double bound_sum = 0.0;
  double bound_min = results.empty() ? 0.0 : results.front().bound;
  double bound_max = bound_min;
  double wl2_sum = 0.0;
  for (const Trial& t : results) {
    events += static_cast<std::uint64_t>(t.event);
    bound_sum += t.bound;
    bound_min = std::min(bound_min, t.bound);
    bound_max = std::max(bound_max, t.bound);
    wl2_sum += t.w_l2;
  }
  const double n = static_cast<double>(results.size());
  // P(event) = E_w[P(event | w)] <= E_w[bound(w)], so the mean realized bound is the gate.
  const double bound = std::min(1.0, bound_sum / n);
  r.details = {{"bound_mean", bound_sum / n}, {"bound_min", bound_min}, {"bound_max", bound_max},
               {"mean_w_l2", wl2_sum / n},   {"x_l2", x.l2()},         {"x_linf", x.linf()}};
  finalize(r, events, exp.trials, bound);
  return r;
}

double max_bucket_mass(const SparseVector& x, const HashConfig& cfg) {
  if (std::abs(x.l2() - 1.0) > kUnitNormTolerance)
    throw PreconditionError("max_bucket_mass: x must have unit l2 norm");
  BucketAccumulator acc(cfg.m());
  for (const auto& [token, value] : x.entries())
    acc.add(murmur3_32(token, cfg.bucket_seed()) & cfg.mask(), value * value);
  double best = 0.0;
  for (auto k : acc.touched()) best = std::max(best, acc.value(k));
  return best;
}

TailReport check_balls_and_bins(const TailExperiment& exp, const SparseVector& x,
                                const RunOptions& opts) {
  TailReport r;
  r.kind = "balls_and_bins";
  r.config = exp.to_json();
  r.config.erase("eps");
  const double m = static_cast<double>(exp.m());
  const double eta = 1.0 / (2.0 * std::sqrt(m * std::log(m / exp.delta)));
  Hypotheses h;
  check_unit_norm(h, x, "x");
  h.require(x.linf() <= eta, "|x|_inf <= 1/(2 sqrt(m log(m/delta))) (|x|_inf = " + fmt(x.linf()) +
                                 ", limit " + fmt(eta) + ")");
  h.apply(opts.hypotheses, r);
  const double limit = 2.0 / m;
  r.details = {{"eta", eta}, {"x_linf", x.linf()}, {"mass_limit", limit}};

  std::vector<std::pair<std::string, double>> sq;
  for (const auto& [t, v] : x.entries()) sq.emplace_back(t, v * v);
  const auto masses = run_trials<double>(exp.trials, exp.base_seed, opts.jobs, [&] {
    return [&, acc = BucketAccumulator(static_cast<std::uint32_t>(exp.m()))](
               std::uint64_t seed) mutable -> double {
      acc.reset();
      const HashConfig cfg = HashConfig::for_trial(exp.bits, seed);
      for (const auto& [token, w] : sq) acc.add(murmur3_32(token, cfg.bucket_seed()) & cfg.mask(), w);
      double best = 0.0;
      for (auto k : acc.touched()) best = std::max(best, acc.value(k));
      return best;
    };
  });
  std::uint64_t events = 0;
  double worst = 0.0;
  for (double s : masses) {
    if (s > limit) ++events;
    worst = std::max(worst, s);
  }
  r.details["max_mass_seen"] = worst;
  finalize(r, events, exp.trials, exp.delta);
  return r;
}

}  // namespace fhash::verify
