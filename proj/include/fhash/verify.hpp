#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "fhash/hash_config.hpp"
#include "fhash/sparse_vector.hpp"

namespace fhash::verify {

// Theorem constants used as the concrete gate for the O()/Omega() conditions.
inline constexpr double kDimensionConstant = 72.0;
inline constexpr double kLinfConstant = 18.0;
inline constexpr double kUnitNormTolerance = 1e-9;
inline constexpr double kWilsonConfidence = 0.99;
// Below this many expected tail events (bound * trials) a report is low-power.
inline constexpr double kMinExpectedEvents = 10.0;

struct TailExperiment {
  // Throws InputError unless eps, delta lie in (0, 1) and trials >= ceil(100 / delta).
  TailExperiment(int bits, double eps, double delta, std::uint64_t trials, std::uint64_t base_seed);

  std::uint64_t m() const noexcept { return std::uint64_t{1} << bits; }
  nlohmann::json to_json() const;

  int bits;
  double eps;
  double delta;
  std::uint64_t trials;
  std::uint64_t base_seed;
};

enum class Status { pass, fail, low_power, precondition_error };
std::string to_string(Status s);

// Precondition handling. `record` runs the experiment anyway and lists the
// violated hypotheses in the report.
enum class HypothesisMode { enforce, record };

struct RunOptions {
  unsigned jobs = 1;
  HypothesisMode hypotheses = HypothesisMode::enforce;
};

struct TailReport {
  std::string kind;
  Status status = Status::fail;
  bool pass = false;               // empirical_tail <= bound
  double empirical_tail = 0.0;     // Wilson 99% upper confidence limit
  double observed_frequency = 0.0;
  std::uint64_t events = 0;
  std::uint64_t trials_used = 0;
  double bound = 0.0;
  bool bound_vacuous = false;      // bound >= 1
  bool low_power = false;
  bool hypotheses_met = true;
  std::vector<std::string> violations;
  nlohmann::json config;           // experiment parameters echoed back
  nlohmann::json details;          // kind-specific diagnostics

  nlohmann::json to_json() const;
};

struct DistortionParams {
  double eta;        // max linf/l2 over {x, x2, x - x2}, zero vectors skipped
  double sigma_max;  // max of sigma_{x,x}, sigma_{x2,x2}, sigma_{x-x2,x-x2}
  double delta_cap;  // |x|^2 + |x2|^2 + |x - x2|^2
};

DistortionParams distortion_params(const SparseVector& x, const SparseVector& x2, std::uint64_t m);

// Pr[ | |phi(x)|^2 - 1 | >= eps ] against 2 delta.
TailReport check_norm_concentration(const TailExperiment& exp, const SparseVector& x,
                                    const RunOptions& opts = {});

// Pr[ |<x,x2>_phi - <x,x2>| > eps * Delta / 2 ] against delta.
TailReport check_inner_concentration(const TailExperiment& exp, const SparseVector& x,
                                     const SparseVector& x2, const RunOptions& opts = {});

// Pr[ some pair has relative squared-distance distortion > eps ] against delta.
TailReport check_union_bound(const TailExperiment& exp, const std::vector<SparseVector>& xs,
                             const RunOptions& opts = {});

struct TaskWeights {
  std::string task;
  SparseVector weights;  // un-hashed weights, hashed with pair_hash(., task)
};

// Pr[ |<w, phi_task(x)>| > eps ] where w = sum over `others` of phi_v(w_v),
// against the mean over trials of the Bernstein bound at the realized norms.
TailReport check_interference(const TailExperiment& exp, const std::vector<TaskWeights>& others,
                              const SparseVector& x, const std::string& task,
                              const RunOptions& opts = {});

// n_tasks weight vectors over `vocab`, each supported on `support` tokens with
// values +-1/sqrt(support) (unit norm); tasks are named "task<k>".
std::vector<TaskWeights> random_task_weights(std::size_t n_tasks, std::size_t support,
                                             const std::vector<std::string>& vocab,
                                             std::uint64_t seed);

// sigma_*^2 = max over buckets of the sum of x_j^2 hashed into it. x must be
// unit norm (PreconditionError otherwise).
double max_bucket_mass(const SparseVector& x, const HashConfig& cfg);

// Pr[ sigma_*^2 > 2/m ] against delta, under |x|_inf <= 1/(2 sqrt(m log(m/delta))).
// exp.eps is not used.
TailReport check_balls_and_bins(const TailExperiment& exp, const SparseVector& x,
                                const RunOptions& opts = {});

// ---- suites --------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

// Runs every experiment of a suite config. Precondition failures are recorded
// in the report, never thrown. Output is a pure function of (suite, seeds);
// `jobs` only changes wall time.
nlohmann::json run_suite(const nlohmann::json& suite, unsigned jobs = 1);

// Reads a suite config, writes the JSON report. Returns the report.
nlohmann::json run_report(const std::filesystem::path& suite_path,
                          const std::filesystem::path& report_path, unsigned jobs = 1);

// The suite the acceptance run uses.
nlohmann::json default_suite();

// Builds a vector from a JSON recipe:
//   {"type": "uniform", "n": N, "prefix": "p", "scale": s}
//   {"type": "replicated", "token": "t", "c": C, "scale": s}
//   {"type": "explicit", "entries": {"tok": value, ...}}
//   {"type": "zero"}
SparseVector vector_from_recipe(const nlohmann::json& recipe);

}  // namespace fhash::verify
