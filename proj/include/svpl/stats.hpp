#pragma once

#include <span>
#include <vector>

namespace svpl::stats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile; Acklam's rational approximation with one
/// Halley refinement (|error| < 1e-14 on (0, 1)).
double normal_quantile(double p);

double mean(std::span<const double> values);

/// Unbiased sample variance; zero for fewer than two values.
double sample_variance(std::span<const double> values);

/// Standard error of the mean.
double standard_error(std::span<const double> values);

/// Linear-interpolation sample quantile (type 7) on a sorted vector.
double sorted_quantile(std::span<const double> sorted_values, double q);

}  // namespace svpl::stats
