#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "fhash/errors.hpp"
#include "fhash/feature_map.hpp"
#include "fhash/learner.hpp"

namespace fhash::learn {
namespace {

double lookup(const std::unordered_map<std::string, double>& w, const std::string& token) {
  const auto it = w.find(token);
  return it == w.end() ? 0.0 : it->second;
}

SparseVector to_sparse(const std::unordered_map<std::string, double>& w) {
  SparseVector::Map m;
  for (const auto& [t, v] : w)
    if (v != 0.0) m.emplace(t, v);
  return SparseVector(std::move(m));
}

// phi_task(w): every token of w individualized for `task`, then hashed.
SparseVector individualize(const SparseVector& w, std::string_view task) {
  SparseVector::Map m;
  for (const auto& [t, v] : w.entries()) m.emplace(personalize(t, task), v);
  return SparseVector(std::move(m));
}

// Self-collision term: sum over token pairs t != s sharing a bucket of
// xi(t) xi(s) x_t w_s. Zero, not just small, when h is injective on the tokens.
double collision_sum(const SparseVector& x, const SparseVector& w, const HashConfig& cfg) {
  std::unordered_multimap<std::uint32_t, std::pair<const std::string*, double>> by_bucket;
  for (const auto& [t, v] : w.entries()) {
    const HashSlot s = hash_token(t, cfg);
    by_bucket.emplace(s.bucket, std::pair{&t, s.sign * v});
  }
  double sum = 0.0;
  for (const auto& [t, v] : x.entries()) {
    const HashSlot s = hash_token(t, cfg);
    const auto [lo, hi] = by_bucket.equal_range(s.bucket);
    for (auto it = lo; it != hi; ++it)
      if (*it->second.first != t) sum += s.sign * v * it->second.second;
  }
  return sum;
}

}  // namespace

std::size_t ReferenceWeights::vocab_size() const {
  std::set<std::string_view> vocab;
  for (const auto& [t, _] : global.entries())
    if (t != kBiasToken) vocab.insert(t);
  for (const auto& [_, w] : per_task)
    for (const auto& [t, __] : w.entries()) vocab.insert(t);
  return vocab.size();
}

std::size_t ReferenceWeights::parameter_count() const { return vocab_size() * (per_task.size() + 1); }

ExactModel::ExactModel(double lr0, FeatureOptions features)
    : lr0_(static_cast<float>(lr0)), features_(features) {
  if (!(lr0_ > 0) || !std::isfinite(lr0_)) throw InputError("lr0 must be a positive finite number");
}

double ExactModel::predict(const Example& ex) const {
  double s = 0.0;
  const SparseVector xg = token_vector(ex, features_.bias, features_.binary);
  for (const auto& [t, v] : xg.entries()) s += v * lookup(global_, t);
  if (features_.personalized) {
    const auto it = per_user_.find(ex.user);
    if (it != per_user_.end()) {
      const SparseVector xu = token_vector(ex, false, features_.binary);
      for (const auto& [t, v] : xu.entries()) s += v * lookup(it->second, t);
    }
  }
  return s;
}

void ExactModel::update(const Example& ex, const UpdateOptions& opts) {
  const std::uint64_t t = examples_seen_ + 1;
  const SparseVector xg = token_vector(ex, features_.bias, features_.binary);
  const SparseVector xu = token_vector(ex, false, features_.binary);
  const double yhat = predict(ex);
  if (!std::isfinite(yhat)) throw DivergenceError(t, 0, "oracle training diverged: non-finite prediction");
  double rate = lr0_ / std::sqrt(static_cast<double>(t));
  if (opts.cap_step) {
    const double n2 = xg.squared_l2() + (features_.personalized ? xu.squared_l2() : 0.0);
    if (n2 > 0) rate = std::min(rate, 1.0 / n2);
  }
  const double step = rate * (static_cast<double>(ex.label) - yhat);
  if (step != 0.0) {
    for (const auto& [tok, v] : xg.entries()) global_[tok] += step * v;
    if (features_.personalized) {
      auto& wu = per_user_[ex.user];
      for (const auto& [tok, v] : xu.entries()) wu[tok] += step * v;
    }
  }
  examples_seen_ = t;
}

void ExactModel::train(std::vector<Example> examples, int epochs, const UpdateOptions& opts) {
  if (epochs < 1) throw InputError("epochs must be >= 1");
  for (const auto& ex : examples)
    if (ex.tokens.empty()) throw InputError("training example for user " + ex.user + " has no tokens");
  std::stable_sort(examples.begin(), examples.end(),
                   [](const Example& a, const Example& b) { return a.timestamp < b.timestamp; });
  for (int e = 0; e < epochs; ++e)
    for (const auto& ex : examples) update(ex, opts);
}

std::vector<double> ExactModel::score_all(const std::vector<Example>& examples) const {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(ex));
  return out;
}

ReferenceWeights ExactModel::reference() const {
  ReferenceWeights r;
  r.global = to_sparse(global_);
  for (const auto& [u, w] : per_user_) {
    SparseVector v = to_sparse(w);
    if (!v.empty()) r.per_task.emplace(u, std::move(v));
  }
  return r;
}

std::vector<double> hash_reference(const ReferenceWeights& ref, const HashConfig& cfg, bool personalized) {
  std::vector<double> w(cfg.m(), 0.0);
  feature_map_into(ref.global, cfg, w);
  if (personalized)
    for (const auto& [task, wu] : ref.per_task) feature_map_into(individualize(wu, task), cfg, w);
  return w;
}

ErrorDecomposition decompose_errors(const Example& ex, const HashedModel& model, const ReferenceWeights* ref,
                                    const FeatureOptions& features) {
  if (ref == nullptr) throw UnsupportedModeError("error decomposition needs oracle mode (explicit weights)");
  if (ref->parameter_count() > kOracleParameterLimit)
    throw UnsupportedModeError("oracle mode limited to " + std::to_string(kOracleParameterLimit) +
                               " explicit parameters, reference has " + std::to_string(ref->parameter_count()));
  const HashConfig& cfg = model.config();
  const SparseVector xg = token_vector(ex, features.bias, features.binary);
  const SparseVector xu = token_vector(ex, false, features.binary);
  const HashedVector p0 = feature_map(xg, cfg);
  const HashedVector pu = features.personalized ? feature_map(personalized_tokens(ex, features.binary), cfg)
                                                : HashedVector(cfg.m());
  const HashedVector wh = HashedVector::from_dense(hash_reference(*ref, cfg, features.personalized));

  static const SparseVector kEmpty;
  const auto own = features.personalized ? ref->per_task.find(ex.user) : ref->per_task.end();
  const SparseVector& wu = own == ref->per_task.end() ? kEmpty : own->second;

  const HashedVector w0h = feature_map(ref->global, cfg);

  ErrorDecomposition d;
  d.hashed_score = hashed_inner(p0, wh) + hashed_inner(pu, wh);
  d.exact_score = xg.dot(ref->global) + (features.personalized ? xu.dot(wu) : 0.0);
  const double d0 = collision_sum(xg, ref->global, cfg);
  const double du =
      features.personalized ? collision_sum(individualize(xu, ex.user), individualize(wu, ex.user), cfg) : 0.0;
  d.eps_d = d0 + du;
  d.eps_d_abs = std::abs(d0) + std::abs(du);

  // Cross terms, one task at a time: phi_0(x) against every user's weights,
  // phi_u(x) against the global weights and every other user's.
  if (features.personalized) {
    d.eps_i += hashed_inner(pu, w0h);
    for (const auto& [task, wv] : ref->per_task) {
      const HashedVector wvh = feature_map(individualize(wv, task), cfg);
      d.eps_i += hashed_inner(p0, wvh);
      if (task != ex.user) d.eps_i += hashed_inner(pu, wvh);
    }
  }
  d.residual = d.hashed_score - d.exact_score - d.eps_d - d.eps_i;
  d.model_score = predict(model, features.personalized ? p0 + pu : p0);
  return d;
}

}  // namespace fhash::learn
