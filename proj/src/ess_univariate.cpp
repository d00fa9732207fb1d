#include "topess/ess_univariate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "topess/errors.hpp"
#include "topess/stats.hpp"

namespace topess {

EssEstimate clamp_ess(double raw, std::size_t n, std::string method) {
  const double hi = static_cast<double>(n);
  double v = raw;
  if (std::isnan(v) || v > hi) v = hi;
  if (v < 1.0) v = 1.0;
  if (n == 0) v = 0.0;
  return {v, std::move(method), n};
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

namespace {

std::vector<double> centered(std::span<const double> x) {
  const double m = mean(x);
  std::vector<double> c(x.begin(), x.end());
  for (auto& v : c) v -= m;
  return c;
}

double autocovariance(const std::vector<double>& c, std::size_t lag) {
  double s = 0.0;
  for (std::size_t t = 0; t + lag < c.size(); ++t) s += c[t] * c[t + lag];
  return s / static_cast<double>(c.size());
}

}  // namespace

AutocorrSeries autocorrelations(std::span<const double> x, std::optional<std::size_t> max_lag) {
  if (x.size() < 4) throw std::invalid_argument("autocorrelations: need at least 4 values");
  if (is_constant(x)) throw DegenerateSeries();
  const auto c = centered(x);
  const double g0 = autocovariance(c, 0);
  if (!(g0 > 0.0)) throw DegenerateSeries();
  const std::size_t top = std::min(max_lag.value_or(x.size() - 2), x.size() - 2);
  AutocorrSeries out{std::vector<double>(top + 1), x.size()};
  out.rho[0] = 1.0;
  for (std::size_t s = 1; s <= top; ++s) out.rho[s] = autocovariance(c, s) / g0;
  return out;
}

EssEstimate sum_of_correlations_ess(std::size_t n, std::size_t max_lag, const std::function<double(std::size_t)>& rho) {
  // P_0 = rho_0 + rho_1 is always included; later pairs are replaced by the
  // running minimum and summed while positive.
  double prev = rho(0) + (max_lag >= 1 ? rho(1) : 0.0);
  double total = prev;
  for (std::size_t s = 1; 2 * s + 1 <= max_lag; ++s) {
    const double p = std::min(prev, rho(2 * s) + rho(2 * s + 1));
    if (!(p > 0.0)) break;
    total += p;
    prev = p;
  }
  const double denom = -1.0 + 2.0 * total;
  const double raw = denom > 0.0 ? static_cast<double>(n) / denom : std::numeric_limits<double>::infinity();
  return clamp_ess(raw, n, "sumOfCorrelations");
}

EssEstimate sum_of_correlations_ess(const AutocorrSeries& a) {
  if (a.rho.empty()) throw std::invalid_argument("sum_of_correlations_ess: empty autocorrelation series");
  return sum_of_correlations_ess(a.n, a.rho.size() - 1, [&](std::size_t s) { return a.rho[s]; });
}

EssEstimate sum_of_correlations_ess(std::span<const double> x) {
  if (x.size() < 4) throw std::invalid_argument("sum_of_correlations_ess: need at least 4 values");
  if (is_constant(x)) return clamp_ess(1.0, x.size(), "sumOfCorrelations");
  const auto c = centered(x);
  const double g0 = autocovariance(c, 0);
  if (!(g0 > 0.0)) return clamp_ess(1.0, x.size(), "sumOfCorrelations");
  return sum_of_correlations_ess(x.size(), x.size() - 2,
                                 [&](std::size_t s) { return s == 0 ? 1.0 : autocovariance(c, s) / g0; });
}

EssEstimate ar_spectrum_ess(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw std::invalid_argument("ar_spectrum_ess: need at least 8 values");
  if (is_constant(x)) return clamp_ess(1.0, n, "arSpectrum");
  const auto c = centered(x);
  const auto max_order = std::min<std::size_t>(static_cast<std::size_t>(std::floor(10.0 * std::log10(double(n)))), n - 2);

  std::vector<double> gamma(max_order + 1);
  for (std::size_t k = 0; k <= max_order; ++k) gamma[k] = autocovariance(c, k);
  if (!(gamma[0] > 0.0)) return clamp_ess(1.0, n, "arSpectrum");

  // Levinson-Durbin recursion; keep coefficients and innovation variance per order.
  std::vector<std::vector<double>> coefs(1);
  std::vector<double> innov{gamma[0]};
  std::vector<double> phi;
  double v = gamma[0];
  for (std::size_t k = 1; k <= max_order; ++k) {
    double acc = gamma[k];
    for (std::size_t j = 1; j < k; ++j) acc -= phi[j - 1] * gamma[k - j];
    const double kappa = acc / v;
    std::vector<double> next(k);
    for (std::size_t j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - kappa * phi[k - j - 1];
    next[k - 1] = kappa;
    const double v_next = v * (1.0 - kappa * kappa);
    if (!(v_next > gamma[0] * 1e-14)) break;
    phi = std::move(next);
    v = v_next;
    coefs.push_back(phi);
    innov.push_back(v);
  }

  std::size_t order = 0;
  double best_aic = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < innov.size(); ++k) {
    const double aic = static_cast<double>(n) * std::log(innov[k]) + 2.0 * static_cast<double>(k);
    if (aic < best_aic) {
      best_aic = aic;
      order = k;
    }
  }
  const double var_pred = innov[order] * static_cast<double>(n) / static_cast<double>(n - (order + 1));
  double phi_sum = 0.0;
  for (double p : coefs[order]) phi_sum += p;
  const double spec0 = var_pred / ((1.0 - phi_sum) * (1.0 - phi_sum));
  const double raw = static_cast<double>(n) * sample_variance(x) / spec0;
  return clamp_ess(raw, n, "arSpectrum");
}

double batch_means_variance(std::span<const double> x, std::size_t batch) {
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
  const std::size_t a = x.size() / batch;
  if (a < 2) throw std::invalid_argument("batch_means_variance: fewer than 2 batches");
  const double xbar = mean(x);
  double ss = 0.0;
  for (std::size_t i = 0; i < a; ++i) {
    double y = 0.0;
    for (std::size_t k = i * batch; k < (i + 1) * batch; ++k) y += x[k];
    y /= static_cast<double>(batch);
    ss += (y - xbar) * (y - xbar);
  }
  return static_cast<double>(batch) / static_cast<double>(a - 1) * ss;
}

double batch_means_limiting_variance(std::span<const double> x) {
  if (x.size() < 16) throw std::invalid_argument("batch_means_limiting_variance: need at least 16 values");
  const auto b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.size()))));
  const double lobed = 2.0 * batch_means_variance(x, b) - batch_means_variance(x, b / 3);
  return std::max(lobed, kLimitingVarianceFloor);
}

EssEstimate batch_means_ess(std::span<const double> x) {
  if (x.size() < 16) throw std::invalid_argument("batch_means_ess: need at least 16 values");
  if (is_constant(x)) return clamp_ess(1.0, x.size(), "batchMeans");
  return clamp_ess(static_cast<double>(x.size()) * sample_variance(x) / batch_means_limiting_variance(x), x.size(),
                   "batchMeans");
}

}  // namespace topess
