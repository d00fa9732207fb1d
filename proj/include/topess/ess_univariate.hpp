#pragma once

// Effective sample size kernels for real-valued series.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topess {

/// Autocorrelation estimates rho[0] = 1, rho[1], ... for a series of length n.
struct AutocorrSeries {
  std::vector<double> rho;
  std::size_t n = 0;
};

struct EssEstimate {
  double value = 1.0;
  std::string method;
  std::size_t n = 0;
};

/// Clamps a raw estimate to [1, n]; NaN and +inf map to n, n = 0 maps to 0.
EssEstimate clamp_ess(double raw, std::size_t n, std::string method);

/// Lag-s autocovariance over lag-0 autocovariance (divisor n for both), for lags
/// 0..max_lag (default n-2). Throws DegenerateSeries on a constant series and
/// std::invalid_argument when n < 4.
AutocorrSeries autocorrelations(std::span<const double> x, std::optional<std::size_t> max_lag = std::nullopt);

/// Sum-of-correlations ESS: adjacent lags are paired, the pairs made
/// monotone non-increasing, and the sum truncated before the first non-positive
/// pair after the zeroth.
EssEstimate sum_of_correlations_ess(const AutocorrSeries& a);

/// Same estimator driven by a lag function; lags are requested in increasing
/// order and only until truncation. `max_lag` is the largest lag available.
EssEstimate sum_of_correlations_ess(std::size_t n, std::size_t max_lag, const std::function<double(std::size_t)>& rho);

/// Convenience overload on a raw series. A constant series yields 1.
EssEstimate sum_of_correlations_ess(std::span<const double> x);

/// Autoregressive spectral-density ESS: Yule-Walker fits for orders
/// 0..min(floor(10 log10 n), n-2), order chosen by AIC,
/// Γ(0) = σ_e² / (1 - Σφ)², ESS = n Var(x) / Γ(0). Constant series yield 1.
/// Throws std::invalid_argument when n < 8.
EssEstimate ar_spectrum_ess(std::span<const double> x);

/// Lobed batch-means limiting variance 2λ²_b - λ²_{b/3} with b = floor(sqrt(n)),
/// floored at kLimitingVarianceFloor. Throws std::invalid_argument when n < 16.
double batch_means_limiting_variance(std::span<const double> x);

/// λ²_B for one batch size over the first floor(n/B)·B samples.
double batch_means_variance(std::span<const double> x, std::size_t batch);

/// n Var(x) / batch_means_limiting_variance(x); constant series yield 1.
EssEstimate batch_means_ess(std::span<const double> x);

inline constexpr double kLimitingVarianceFloor = 1e-12;

/// True when every element equals the first.
bool is_constant(std::span<const double> x);

}  // namespace topess
