#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fhash/hash_config.hpp"

namespace fhash::cf {

// Dense n x d matrix, row-major. U and W share the row count n (the inner
// dimension); M = U^T W is d_U x d_W.
class FactorMatrix {
 public:
  FactorMatrix(std::size_t rows, std::size_t cols);
  FactorMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  const std::vector<double>& values() const noexcept { return values_; }

  double frobenius() const noexcept;

  friend bool operator==(const FactorMatrix&, const FactorMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

// Token of matrix entry (row, col): "row:col" in decimal.
std::string pair_token(std::size_t row, std::size_t col);

struct CfSketch {
  HashConfig cfg_u;
  HashConfig cfg_w;
  std::vector<double> u;  // m entries
  std::vector<double> w;  // m entries
};

// u_i = sum over entries (j,k) with h(j:k) = i of xi(j:k) U_jk, and likewise w
// under the second config. Throws DimensionError when the row counts differ,
// InputError when the configs share both seeds or differ in width.
CfSketch sketch_factors(const FactorMatrix& U, const FactorMatrix& W, const HashConfig& cfg_u,
                        const HashConfig& cfg_w);

// M^phi_ij = sum_k xi(k:i) xi'(k:j) u[h(k:i)] w[h'(k:j)], k < inner_dim.
// Throws DimensionError on an index outside the given shape.
double estimate_entry(const CfSketch& s, std::size_t i, std::size_t j, std::size_t inner_dim,
                      std::size_t d_u, std::size_t d_w);

// Full d_U x d_W estimate.
FactorMatrix estimate_product(const CfSketch& s, std::size_t inner_dim, std::size_t d_u, std::size_t d_w);

// M = U^T W.
FactorMatrix exact_product(const FactorMatrix& U, const FactorMatrix& W);

// True when no two entries of an n x d matrix share a bucket under cfg.
bool is_injective(const HashConfig& cfg, std::size_t rows, std::size_t cols);

// First config for_trial(bits, start + k), k < max_tries, injective on both
// shapes with distinct seeds per side; nullopt if none found.
std::optional<std::pair<HashConfig, HashConfig>> find_injective_configs(int bits, std::size_t rows,
                                                                        std::size_t cols_u, std::size_t cols_w,
                                                                        std::uint64_t start,
                                                                        std::size_t max_tries = 1000);

struct SweepRow {
  int bits;
  double mean_rel_err;  // absolute error when M = 0
  double stddev;
};

// Frobenius error of the estimate over `trials` seed pairs per bits value.
// Trial t uses base_seed + t for U and a derived seed for W.
std::vector<SweepRow> frobenius_error_sweep(const FactorMatrix& U, const FactorMatrix& W,
                                            const std::vector<int>& bits, std::size_t trials,
                                            std::uint64_t base_seed = 0, unsigned jobs = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// Gaussian N(0,1) entries from a seeded mt19937_64.
FactorMatrix random_factor(std::size_t rows, std::size_t cols, std::uint64_t seed);

// `row<TAB>col<TAB>value` lines; '#' starts a comment. Shape is max index + 1
// unless given. Throws ParseError with the line number.
FactorMatrix read_triples(const std::filesystem::path& path, std::size_t rows = 0, std::size_t cols = 0);
void write_triples(const std::filesystem::path& path, const FactorMatrix& m);

}  // namespace fhash::cf
