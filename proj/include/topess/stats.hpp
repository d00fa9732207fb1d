#pragma once

#include <span>
#include <vector>

namespace topess {

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Halley step against std::erfc, which brings the absolute error below
/// 1e-14 on (0, 1). Returns ±infinity at 0 and 1.
double normal_quantile(double p);

double normal_cdf(double x);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R default). `prob` in [0, 1].
double quantile(std::vector<double> xs, double prob);

double median(std::vector<double> xs);

double mean(std::span<const double> xs);

/// Unbiased sample variance (divisor n - 1).
double sample_variance(std::span<const double> xs);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

}  // namespace topess
