#include "fhash/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>

#include "fhash/errors.hpp"
#include "fhash/feature_map.hpp"

namespace fhash::learn {

SparseVector token_vector(const Example& ex, bool bias, bool binary) {
  SparseVector::Map counts;
  for (const auto& t : ex.tokens) {
    if (binary) {
      counts[t] = 1.0;
    } else {
      counts[t] += 1.0;
    }
  }
  if (bias) counts[std::string(kBiasToken)] = 1.0;
  return SparseVector(std::move(counts));
}

SparseVector personalized_tokens(const Example& ex, bool binary) {
  SparseVector::Map counts;
  for (const auto& t : ex.tokens) {
    auto& c = counts[personalize(t, ex.user)];
    c = binary ? 1.0 : c + 1.0;
  }
  return SparseVector(std::move(counts));
}

HashedVector featurize(const Example& ex, const HashConfig& cfg, const FeatureOptions& opts) {
  HashedVector phi = feature_map(token_vector(ex, opts.bias, opts.binary), cfg);
  if (!opts.personalized) return phi;
  return phi + feature_map(personalized_tokens(ex, opts.binary), cfg);
}

HashedModel::HashedModel(const HashConfig& cfg, double lr0)
    : cfg_(cfg), weights_(cfg.m(), 0.0f), lr0_(static_cast<float>(lr0)) {
  // lr0 is kept at file precision so a reloaded model continues identically.
  if (!(lr0_ > 0) || !std::isfinite(lr0_)) throw InputError("lr0 must be a positive finite number");
}

std::size_t HashedModel::nonzero_weights() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(weights_.begin(), weights_.end(), [](float w) { return w != 0.0f; }));
}

double predict(const HashedModel& model, const HashedVector& phi) {
  if (phi.dims() != model.config().m())
    throw DimensionError("predict: feature dimension " + std::to_string(phi.dims()) +
                         " != model dimension " + std::to_string(model.config().m()));
  const auto w = model.weights();
  double s = 0.0;
  phi.for_each_nonzero([&](std::uint32_t i, double v) { s += v * static_cast<double>(w[i]); });
  return s;
}

void sgd_update(HashedModel& model, const HashedVector& phi, int label, const UpdateOptions& opts) {
  const std::uint64_t t = model.examples_seen() + 1;
  const double yhat = predict(model, phi);
  if (!std::isfinite(yhat)) {
    std::uint32_t first = 0;
    phi.for_each_nonzero([&, done = false](std::uint32_t i, double) mutable {
      if (!done) first = i, done = true;
    });
    throw DivergenceError(t, first, "training diverged: non-finite prediction");
  }
  double rate = model.lr0() / std::sqrt(static_cast<double>(t));
  if (opts.cap_step) {
    const double n2 = phi.squared_l2();
    if (n2 > 0) rate = std::min(rate, 1.0 / n2);
  }
  const double residual = static_cast<double>(label) - yhat;
  if (residual != 0.0) {
    auto w = model.mutable_weights();
    phi.for_each_nonzero([&](std::uint32_t i, double v) {
      const auto updated = static_cast<float>(static_cast<double>(w[i]) + rate * residual * v);
      if (!std::isfinite(updated)) throw DivergenceError(t, i, "training diverged: non-finite weight");
      w[i] = updated;
    });
  }
  model.set_examples_seen(t);
}

namespace {

void sort_by_time(std::vector<Example>& examples) {
  std::stable_sort(examples.begin(), examples.end(),
                   [](const Example& a, const Example& b) { return a.timestamp < b.timestamp; });
}

void require_tokens(const std::vector<Example>& examples) {
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (examples[i].tokens.empty())
      throw InputError("training example " + std::to_string(i) + " (user " + examples[i].user +
                       ", t=" + std::to_string(examples[i].timestamp) + ") has no tokens");
}

}  // namespace

void train(HashedModel& model, std::vector<Example> examples, const TrainOptions& opts) {
  if (opts.epochs < 1) throw InputError("epochs must be >= 1");
  require_tokens(examples);
  sort_by_time(examples);
  std::vector<HashedVector> features;
  features.reserve(examples.size());
  for (const auto& ex : examples) features.push_back(featurize(ex, model.config(), opts.features));
  for (int e = 0; e < opts.epochs; ++e)
    for (std::size_t i = 0; i < examples.size(); ++i)
      sgd_update(model, features[i], examples[i].label, opts.update);
}

std::vector<double> score_all(const HashedModel& model, const std::vector<Example>& examples,
                              const FeatureOptions& features) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(model, featurize(ex, model.config(), features)));
  return out;
}

double calibrate_threshold(std::span<const double> ham_scores, double fp_rate) {
  if (ham_scores.empty()) throw InputError("calibrate_threshold: no not-spam scores");
  if (!(fp_rate > 0 && fp_rate < 1)) throw InputError("calibrate_threshold: fp_rate must lie in (0, 1)");
  std::vector<double> s(ham_scores.begin(), ham_scores.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  const double n = static_cast<double>(s.size());
  // The relative slack absorbs representation error in fp_rate * N (0.01 * 200).
  const auto allowed = static_cast<std::size_t>(std::floor(fp_rate * n * (1.0 + 1e-12)));
  return s[std::min(allowed, s.size() - 1)];
}

}  // namespace fhash::learn
