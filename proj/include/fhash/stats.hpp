#pragma once

#include <cstdint>
#include <span>

namespace fhash::stats {

// Two-sided standard normal quantile: z with P(|Z| <= z) = confidence.
double normal_two_sided_z(double confidence);

// Upper end of the two-sided Wilson score interval for a binomial
// proportion `events / trials` at the given confidence.
double wilson_upper(std::uint64_t events, std::uint64_t trials, double confidence = 0.99);

// Upper-tail critical value of chi-square with `dof` degrees of freedom.
double chi_square_critical(double dof, double confidence);

double chi_square_statistic(std::span<const double> observed, std::span<const double> expected);

struct Moments {
  double mean;
  double variance;  // unbiased sample variance
  double stddev;
};

// Two-pass mean and variance; summation order is the span order.
Moments sample_moments(std::span<const double> xs);

}  // namespace fhash::stats
