#include "fhash/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fhash/errors.hpp"

namespace fhash {

HashedVector feature_map(const SparseVector& x, const HashConfig& cfg) {
  std::vector<HashedVector::Entry> contrib;
  contrib.reserve(x.nnz());
  for (const auto& [token, value] : x.entries()) {
    const HashSlot s = hash_token(token, cfg);
    contrib.emplace_back(s.bucket, s.sign * value);
  }
  // Stable: within a bucket, contributions stay in token order.
  std::stable_sort(contrib.begin(), contrib.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<HashedVector::Entry> summed;
  for (const auto& [bucket, v] : contrib) {
    if (!summed.empty() && summed.back().first == bucket) {
      summed.back().second += v;
    } else {
      summed.emplace_back(bucket, v);
    }
  }
  return HashedVector::from_sorted_entries(cfg.m(), std::move(summed));
}

void feature_map_into(const SparseVector& x, const HashConfig& cfg, std::span<double> dense,
                      double scale) {
  if (dense.size() != cfg.m()) throw DimensionError("feature_map_into: buffer size != m");
  for (const auto& [token, value] : x.entries()) {
    const HashSlot s = hash_token_unchecked(token, cfg);
    dense[s.bucket] += scale * s.sign * value;
  }
}

double variance_closed_form(const SparseVector& x, const SparseVector& x2, std::uint64_t m) {
  if (m == 0) throw InputError("variance_closed_form: m must be >= 1");
  // Over the union support, with a_i = x_i^2, b_i = x2_i^2, c_i = x_i x2_i:
  //   sum_{i!=j} a_i b_j = (sum a)(sum b) - sum a_i b_i
  //   sum_{i!=j} c_i c_j = (sum c)^2 - sum c_i^2
  // Tokens outside one support contribute zero to c and to a_i b_i.
  const double sum_a = x.squared_l2();
  const double sum_b = x2.squared_l2();
  double sum_ab = 0.0;
  double sum_c = 0.0;
  for (const auto& [token, v] : x.entries()) {
    const double w = x2.get(token);
    if (w == 0.0) continue;
    sum_ab += v * v * w * w;
    sum_c += v * w;
  }
  // sum c_i^2 equals sum a_i b_i.
  const double s = (sum_a * sum_b - sum_ab) + (sum_c * sum_c - sum_ab);
  return s / static_cast<double>(m);
}

ReplicationParams::ReplicationParams(int copies)
    : c(copies), scale(copies >= 1 ? 1.0 / std::sqrt(static_cast<double>(copies)) : 0.0) {
  if (copies < 1) throw InputError("replication count must be >= 1");
}

std::string replica_token(std::string_view token, int index) {
  std::string out;
  out.reserve(token.size() + 8);
  for (char ch : token) {
    out.push_back(ch);
    if (ch == '#') out.push_back('#');
  }
  out.push_back('#');
  out.append(std::to_string(index));
  return out;
}

SparseVector replicate(const SparseVector& x, const ReplicationParams& p) {
  SparseVector::Map out;
  const double root = std::sqrt(static_cast<double>(p.c));
  for (const auto& [token, value] : x.entries()) {
    const double v = value / root;
    for (int k = 0; k < p.c; ++k) out.emplace(replica_token(token, k), v);
  }
  return SparseVector(std::move(out));
}

double BoundValue::probability() const noexcept { return std::clamp(raw, 0.0, 1.0); }

BoundValue bernstein_interference_bound(double w_l2, double w_linf, double x_l2, double x_linf,
                                        std::uint64_t m, double eps) {
  if (w_l2 < 0 || w_linf < 0 || x_l2 < 0 || x_linf < 0)
    throw InputError("bernstein_interference_bound: norms must be non-negative");
  if (!(eps > 0)) throw InputError("bernstein_interference_bound: eps must be positive");
  if (m == 0) throw InputError("bernstein_interference_bound: m must be >= 1");
  const double variance = w_l2 * w_l2 * x_l2 * x_l2 / static_cast<double>(m);
  const double range = eps * w_linf * x_linf / 3.0;
  const double denom = variance + range;
  if (denom == 0.0) return {0.0};  // <w, phi_u(x)> is identically zero
  return {2.0 * std::exp(-(eps * eps / 2.0) / denom)};
}

double interference_eps_for_bound(double target, double w_l2, double w_linf, double x_l2,
                                  double x_linf, std::uint64_t m) {
  if (!(target > 0 && target < 2)) throw InputError("target bound must lie in (0, 2)");
  if (m == 0) throw InputError("m must be >= 1");
  // eps^2/2 = L (A + B eps) with L = log(2/target).
  const double big_l = std::log(2.0 / target);
  const double a = w_l2 * w_l2 * x_l2 * x_l2 / static_cast<double>(m);
  const double b = w_linf * x_linf / 3.0;
  return big_l * b + std::sqrt(big_l * big_l * b * b + 2.0 * big_l * a);
}

}  // namespace fhash
