#include "fhash/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "fhash/errors.hpp"

namespace fhash::stats {

double normal_two_sided_z(double confidence) {
  if (!(confidence > 0 && confidence < 1)) throw InputError("confidence must lie in (0, 1)");
  const boost::math::normal_distribution<double> n01;
  return boost::math::quantile(n01, 0.5 + confidence / 2.0);
}

double wilson_upper(std::uint64_t events, std::uint64_t trials, double confidence) {
  if (trials == 0) return 1.0;
  if (events > trials) throw InputError("wilson_upper: events > trials");
  const double z = normal_two_sided_z(confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(events) / n;
  const double z2 = z * z;
  const double centre = p + z2 / (2 * n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return std::min(1.0, (centre + half) / (1 + z2 / n));
}

double chi_square_critical(double dof, double confidence) {
  const boost::math::chi_squared_distribution<double> chi(dof);
  return boost::math::quantile(chi, confidence);
}

double chi_square_statistic(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size()) throw DimensionError("chi-square: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

Moments sample_moments(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, var, std::sqrt(var)};
}

}  // namespace fhash::stats
