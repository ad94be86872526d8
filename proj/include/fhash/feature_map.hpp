#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "fhash/hash_config.hpp"
#include "fhash/hashed_vector.hpp"
#include "fhash/sparse_vector.hpp"

namespace fhash {

// phi(x)_i = sum over tokens t with h(t) = i of xi(t) * x[t]. Contributions to
// a bucket are summed in ascending token byte order, so the result is
// bit-reproducible.
HashedVector feature_map(const SparseVector& x, const HashConfig& cfg);

// Adds scale * phi(x) into `dense` (size m). Inner-loop variant of feature_map.
void feature_map_into(const SparseVector& x, const HashConfig& cfg, std::span<double> dense,
                      double scale = 1.0);

// <phi(x), phi(x2)> for one config.
inline double hashed_kernel(const SparseVector& x, const SparseVector& x2, const HashConfig& cfg) {
  return hashed_inner(feature_map(x, cfg), feature_map(x2, cfg));
}

// Variance over (h, xi) of the hashed inner product:
//   (1/m) * sum_{i != j} (x_i^2 x2_j^2 + x_i x2_i x_j x2_j)
// Throws InputError when m == 0.
double variance_closed_form(const SparseVector& x, const SparseVector& x2, std::uint64_t m);

struct ReplicationParams {
  explicit ReplicationParams(int copies);

  int c;
  double scale;  // c^-1/2
};

// Name of replica `index` of `token`: '#' in the token doubled, then "#<index>".
std::string replica_token(std::string_view token, int index);

// x' = c^-1/2 (x, ..., x): every token becomes c derived tokens.
SparseVector replicate(const SparseVector& x, const ReplicationParams& p);

struct BoundValue {
  double raw;
  double probability() const noexcept;  // raw clamped to [0, 1]
};

// 2 exp(-(eps^2/2) / (|w|_2^2 |x|_2^2 / m + eps |w|_inf |x|_inf / 3)), the
// tail bound on |<w, phi_u(x)>| > eps when w was built without task u.
BoundValue bernstein_interference_bound(double w_l2, double w_linf, double x_l2, double x_linf,
                                        std::uint64_t m, double eps);

// Smallest eps at which bernstein_interference_bound equals `target`.
double interference_eps_for_bound(double target, double w_l2, double w_linf, double x_l2,
                                  double x_linf, std::uint64_t m);

}  // namespace fhash
