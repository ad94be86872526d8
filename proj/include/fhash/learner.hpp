#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fhash/corpus.hpp"
#include "fhash/hash_config.hpp"
#include "fhash/hashed_vector.hpp"
#include "fhash/sparse_vector.hpp"

namespace fhash::learn {

using Example = corpus::CorpusLine;

// Global bias feature, value 1, only in the global (non-personalized) copy.
inline constexpr std::string_view kBiasToken = "__BIAS__";
inline constexpr double kDefaultLr0 = 0.5;
inline constexpr double kDefaultFpRate = 0.01;
// Oracle mode bound on vocab * (|U| + 1).
inline constexpr std::size_t kOracleParameterLimit = 1'000'000;

struct FeatureOptions {
  bool personalized = false;
  bool bias = false;
  bool binary = false;  // presence instead of term frequency
};

// Raw term-frequency vector x of an example, plus the bias token if asked.
SparseVector token_vector(const Example& ex, bool bias = false, bool binary = false);

// The user-individualized copy: every token t becomes user + 0x1F + t.
SparseVector personalized_tokens(const Example& ex, bool binary = false);

// phi_0(x), or phi_0(x) + phi_u(x) when personalized: each token hashed once
// as-is and once individualized, all through the same hash function.
HashedVector featurize(const Example& ex, const HashConfig& cfg, const FeatureOptions& opts = {});

// The single weight vector w_h in R^m that holds the global and every
// per-user predictor. Weights are stored as 32-bit floats; arithmetic on them
// is done in double.
class HashedModel {
 public:
  explicit HashedModel(const HashConfig& cfg, double lr0 = kDefaultLr0);

  const HashConfig& config() const noexcept { return cfg_; }
  std::uint64_t examples_seen() const noexcept { return examples_seen_; }
  double lr0() const noexcept { return lr0_; }

  std::span<const float> weights() const noexcept { return weights_; }
  std::span<float> mutable_weights() noexcept { return weights_; }
  std::size_t nonzero_weights() const noexcept;

  void set_examples_seen(std::uint64_t n) noexcept { examples_seen_ = n; }

  friend bool operator==(const HashedModel&, const HashedModel&) = default;

 private:
  HashConfig cfg_;
  std::vector<float> weights_;
  std::uint64_t examples_seen_ = 0;
  double lr0_;
};

struct UpdateOptions {
  // Caps the step at 1/|phi|^2 so one update never overshoots the target on
  // the example it was computed from. Without it, early steps with
  // lr0/sqrt(t) * |phi|^2 > 2 make the recursion unstable on long emails.
  bool cap_step = true;
};

// Raw score <phi, w_h>. Throws DimensionError on a dimension mismatch.
double predict(const HashedModel& model, const HashedVector& phi);

// One square-loss SGD step: w_h += lambda_t (label - yhat) phi, with
// lambda_t = lr0 / sqrt(t) and t = examples_seen + 1. Only phi's nonzero
// buckets are touched. Throws DivergenceError on a non-finite score or weight.
void sgd_update(HashedModel& model, const HashedVector& phi, int label, const UpdateOptions& opts = {});

struct TrainOptions {
  FeatureOptions features{.personalized = false, .bias = true, .binary = false};
  int epochs = 1;
  UpdateOptions update;
};

// Sorts by timestamp (stable) and runs `epochs` passes of sgd_update.
// Throws InputError on an example without tokens.
void train(HashedModel& model, std::vector<Example> examples, const TrainOptions& opts = {});

std::vector<double> score_all(const HashedModel& model, const std::vector<Example>& examples,
                              const FeatureOptions& features);

// Smallest threshold theta with |{s > theta}| / N <= fp_rate: the
// (floor(fp_rate * N) + 1)-th largest score.
double calibrate_threshold(std::span<const double> ham_scores, double fp_rate = kDefaultFpRate);

// ---- bucketed evaluation --------------------------------------------------

// Users by number of training emails: [0], [1], [2,3], [4,7], [8,15], ...
int bucket_index(std::uint64_t training_emails) noexcept;
std::string bucket_label(int index);

using UserActivity = std::unordered_map<std::string, std::uint64_t>;
UserActivity count_training_emails(const std::vector<Example>& train);

struct BucketStats {
  std::string label;
  std::uint64_t users = 0;
  std::uint64_t spam = 0;
  std::uint64_t uncaught = 0;  // spam with score <= threshold
  std::uint64_t ham = 0;
  std::uint64_t false_positives = 0;
  double uncaught_rate() const noexcept;
};

struct EvalReport {
  double threshold = 0.0;
  double fp_rate = kDefaultFpRate;
  BucketStats overall;
  std::vector<BucketStats> buckets;  // ascending bucket index, only non-empty buckets

  const BucketStats* find(std::string_view label) const;
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_csv(const EvalReport* baseline = nullptr) const;
};

// Scores are parallel to `test`. Users absent from `activity` have 0 training emails.
EvalReport evaluate(std::span<const double> scores, const std::vector<Example>& test, double threshold,
                    const UserActivity& activity, double fp_rate = kDefaultFpRate);

// Calibrates on the test ham, then evaluates.
EvalReport evaluate_model(const HashedModel& model, const std::vector<Example>& test,
                          const UserActivity& activity, const FeatureOptions& features,
                          double fp_rate = kDefaultFpRate);

// uncaught_rate(run) / uncaught_rate(baseline), overall and per bucket. Equal
// zero rates give 1; a zero baseline with nonzero run gives null.
nlohmann::json ratio_report(const EvalReport& run, const EvalReport& baseline);

// ---- model file -------------------------------------------------------------

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Little-endian: "FHMT", u32 version, u32 bits, u32 bucket_seed, u32 sign_seed,
// u64 examples_seen, f32 lr0, then m f32 weights.
void save_model(const HashedModel& model, const std::filesystem::path& path);
HashedModel load_model(const std::filesystem::path& path);

// ---- un-hashed oracle ---------------------------------------------------------

// Explicit w_0 and every w_u, keyed by raw token.
struct ReferenceWeights {
  SparseVector global;
  std::map<std::string, SparseVector, std::less<>> per_task;

  std::size_t vocab_size() const;
  std::size_t parameter_count() const;  // vocab * (|U| + 1)
};

// The same SGD as HashedModel, in the raw feature space: global weights over
// tokens, and with personalization a separate weight vector per user.
class ExactModel {
 public:
  explicit ExactModel(double lr0 = kDefaultLr0, FeatureOptions features = {.bias = true});

  double predict(const Example& ex) const;
  void update(const Example& ex, const UpdateOptions& opts = {});
  void train(std::vector<Example> examples, int epochs = 1, const UpdateOptions& opts = {});
  std::vector<double> score_all(const std::vector<Example>& examples) const;

  std::uint64_t examples_seen() const noexcept { return examples_seen_; }
  const FeatureOptions& features() const noexcept { return features_; }
  ReferenceWeights reference() const;

 private:
  double lr0_;
  FeatureOptions features_;
  std::uint64_t examples_seen_ = 0;
  std::unordered_map<std::string, double> global_;
  std::unordered_map<std::string, std::unordered_map<std::string, double>> per_user_;
};

// w_h = phi_0(w_0) + sum_u phi_u(w_u), in double precision.
std::vector<double> hash_reference(const ReferenceWeights& ref, const HashConfig& cfg,
                                   bool personalized);

struct ErrorDecomposition {
  double hashed_score = 0.0;  // <phi_0(x) + phi_u(x), w_h>, w_h = hash_reference(ref)
  double exact_score = 0.0;   // <x, w_0 + w_u>
  double eps_d = 0.0;         // signed self-collision error, summed over v in {0, u}
  double eps_d_abs = 0.0;     // sum over v of |<phi_v(x), phi_v(w_v)> - <x, w_v>|
  double eps_i = 0.0;         // cross-task collisions
  double residual = 0.0;      // hashed - exact - eps_d - eps_i
  double model_score = 0.0;   // <phi_0(x) + phi_u(x), model weights>
};

// Requires oracle mode: `ref` non-null and ref->parameter_count() within
// kOracleParameterLimit, otherwise UnsupportedModeError.
ErrorDecomposition decompose_errors(const Example& ex, const HashedModel& model,
                                    const ReferenceWeights* ref, const FeatureOptions& features);

}  // namespace fhash::learn
