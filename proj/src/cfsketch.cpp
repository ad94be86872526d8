#include "fhash/cfsketch.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "fhash/errors.hpp"
#include "fhash/stats.hpp"
#include "trial_runner.hpp"

namespace fhash::cf {

FactorMatrix::FactorMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

FactorMatrix::FactorMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols)
    throw DimensionError("factor matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                         std::to_string(values_.size()) + " values");
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("factor matrix entries must be finite");
}

double FactorMatrix::frobenius() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

std::string pair_token(std::size_t row, std::size_t col) {
  return std::to_string(row) + ":" + std::to_string(col);
}

namespace {

// Slots of every entry of an n x d matrix, row-major.
std::vector<HashSlot> slots_of(const HashConfig& cfg, std::size_t rows, std::size_t cols) {
  std::vector<HashSlot> out;
  out.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.push_back(hash_token_unchecked(pair_token(r, c), cfg));
  return out;
}

std::vector<double> compress(const FactorMatrix& f, const std::vector<HashSlot>& slots, std::uint32_t m) {
  std::vector<double> v(m, 0.0);
  for (std::size_t e = 0; e < slots.size(); ++e) v[slots[e].bucket] += slots[e].sign * f.values()[e];
  return v;
}

void check_configs(const HashConfig& a, const HashConfig& b) {
  if (a.m() != b.m()) throw InputError("sketch configs must share the width m");
  if (a.bucket_seed() == b.bucket_seed() && a.sign_seed() == b.sign_seed())
    throw InputError("sketch configs must use independently chosen hash functions (distinct seeds)");
}

FactorMatrix estimate_with(const CfSketch& s, const std::vector<HashSlot>& su, const std::vector<HashSlot>& sw,
                           std::size_t n, std::size_t d_u, std::size_t d_w) {
  FactorMatrix out(d_u, d_w);
  for (std::size_t i = 0; i < d_u; ++i)
    for (std::size_t j = 0; j < d_w; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const HashSlot a = su[k * d_u + i];
        const HashSlot b = sw[k * d_w + j];
        acc += a.sign * b.sign * s.u[a.bucket] * s.w[b.bucket];
      }
      out(i, j) = acc;
    }
  return out;
}

double normal(std::mt19937_64& rng) {
  // Box-Muller on 53-bit uniforms; identical output on every standard library.
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

CfSketch sketch_factors(const FactorMatrix& U, const FactorMatrix& W, const HashConfig& cfg_u,
                        const HashConfig& cfg_w) {
  if (U.rows() != W.rows())
    throw DimensionError("U has " + std::to_string(U.rows()) + " rows, W has " + std::to_string(W.rows()));
  check_configs(cfg_u, cfg_w);
  return {cfg_u, cfg_w, compress(U, slots_of(cfg_u, U.rows(), U.cols()), cfg_u.m()),
          compress(W, slots_of(cfg_w, W.rows(), W.cols()), cfg_w.m())};
}

double estimate_entry(const CfSketch& s, std::size_t i, std::size_t j, std::size_t inner_dim, std::size_t d_u,
                      std::size_t d_w) {
  if (i >= d_u || j >= d_w)
    throw DimensionError("entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside " +
                         std::to_string(d_u) + "x" + std::to_string(d_w));
  double acc = 0.0;
  for (std::size_t k = 0; k < inner_dim; ++k) {
    const HashSlot a = hash_token_unchecked(pair_token(k, i), s.cfg_u);
    const HashSlot b = hash_token_unchecked(pair_token(k, j), s.cfg_w);
    acc += a.sign * b.sign * s.u[a.bucket] * s.w[b.bucket];
  }
  return acc;
}

FactorMatrix estimate_product(const CfSketch& s, std::size_t inner_dim, std::size_t d_u, std::size_t d_w) {
  return estimate_with(s, slots_of(s.cfg_u, inner_dim, d_u), slots_of(s.cfg_w, inner_dim, d_w), inner_dim, d_u,
                       d_w);
}

FactorMatrix exact_product(const FactorMatrix& U, const FactorMatrix& W) {
  if (U.rows() != W.rows())
    throw DimensionError("U has " + std::to_string(U.rows()) + " rows, W has " + std::to_string(W.rows()));
  FactorMatrix out(U.cols(), W.cols());
  for (std::size_t i = 0; i < U.cols(); ++i)
    for (std::size_t j = 0; j < W.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < U.rows(); ++k) acc += U(k, i) * W(k, j);
      out(i, j) = acc;
    }
  return out;
}

bool is_injective(const HashConfig& cfg, std::size_t rows, std::size_t cols) {
  if (rows * cols > cfg.m()) return false;
  std::vector<bool> used(cfg.m(), false);
  for (const auto& s : slots_of(cfg, rows, cols)) {
    if (used[s.bucket]) return false;
    used[s.bucket] = true;
  }
  return true;
}

std::optional<std::pair<HashConfig, HashConfig>> find_injective_configs(int bits, std::size_t rows,
                                                                        std::size_t cols_u, std::size_t cols_w,
                                                                        std::uint64_t start,
                                                                        std::size_t max_tries) {
  std::optional<HashConfig> cu;
  for (std::size_t k = 0; k < max_tries; ++k) {
    const HashConfig cfg = HashConfig::for_trial(bits, start + k);
    if (!is_injective(cfg, rows, cols_u) && !cu) continue;
    if (!cu) {
      cu = cfg;
      continue;
    }
    if (cfg.bucket_seed() != cu->bucket_seed() && is_injective(cfg, rows, cols_w)) return std::pair{*cu, cfg};
  }
  return std::nullopt;
}

std::vector<SweepRow> frobenius_error_sweep(const FactorMatrix& U, const FactorMatrix& W,
                                            const std::vector<int>& bits, std::size_t trials,
                                            std::uint64_t base_seed, unsigned jobs) {
  if (trials == 0) throw InputError("sweep needs at least one trial");
  const FactorMatrix M = exact_product(U, W);
  const double norm = M.frobenius();
  std::vector<SweepRow> rows;
  for (int b : bits) {
    auto make_worker = [&] {
      return [&, b](std::uint64_t seed) {
        const HashConfig cu = HashConfig::for_trial(b, seed);
        HashConfig cw = HashConfig::for_trial(b, splitmix64(~seed));
        if (cw.bucket_seed() == cu.bucket_seed()) cw = HashConfig(b, cu.bucket_seed() + 1);
        const CfSketch s = sketch_factors(U, W, cu, cw);
        const FactorMatrix est = estimate_product(s, U.rows(), U.cols(), W.cols());
        double err = 0.0;
        for (std::size_t e = 0; e < est.values().size(); ++e) {
          const double d = est.values()[e] - M.values()[e];
          err += d * d;
        }
        err = std::sqrt(err);
        return norm > 0 ? err / norm : err;
      };
    };
    const auto errs = detail::run_trials<double>(trials, base_seed, jobs, make_worker);
    const auto mom = stats::sample_moments(errs);
    rows.push_back({b, mom.mean, trials > 1 ? mom.stddev : 0.0});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "bits,mean_rel_err,stddev\n";
  for (const auto& r : rows) out << r.bits << ',' << r.mean_rel_err << ',' << r.stddev << '\n';
  return out.str();
}

FactorMatrix random_factor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = normal(rng);
  return FactorMatrix(rows, cols, std::move(v));
}

FactorMatrix read_triples(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  struct Triple {
    std::size_t r, c;
    double v;
  };
  std::vector<Triple> triples;
  std::size_t max_r = 0, max_c = 0;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string a, b, c, extra;
    if (!(fields >> a)) continue;
    if (!(fields >> b >> c) || (fields >> extra)) throw ParseError(no, "expected row, col, value");
    Triple t{};
    const auto ra = std::from_chars(a.data(), a.data() + a.size(), t.r);
    const auto rb = std::from_chars(b.data(), b.data() + b.size(), t.c);
    const auto rc = std::from_chars(c.data(), c.data() + c.size(), t.v);
    if (ra.ec != std::errc{} || ra.ptr != a.data() + a.size() || rb.ec != std::errc{} ||
        rb.ptr != b.data() + b.size())
      throw ParseError(no, "bad index");
    if (rc.ec != std::errc{} || rc.ptr != c.data() + c.size() || !std::isfinite(t.v))
      throw ParseError(no, "bad value \"" + c + "\"");
    max_r = std::max(max_r, t.r + 1);
    max_c = std::max(max_c, t.c + 1);
    triples.push_back(t);
  }
  if (rows == 0) rows = max_r;
  if (cols == 0) cols = max_c;
  if (max_r > rows || max_c > cols) throw DimensionError(path.string() + ": index outside the given shape");
  FactorMatrix m(rows, cols);
  for (const auto& t : triples) m(t.r, t.c) += t.v;
  return m;
}

void write_triples(const std::filesystem::path& path, const FactorMatrix& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out << r << '\t' << c << '\t' << m(r, c) << '\n';
}

}  // namespace fhash::cf
