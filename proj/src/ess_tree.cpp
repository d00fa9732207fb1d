#include "topess/ess_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "topess/errors.hpp"
#include "topess/stats.hpp"

namespace topess {

namespace {

constexpr std::array<std::string_view, 11> kNames = {
    "frechetCorrelation", "splitFrequency", "medianPseudo",          "minPseudo",
    "foldedRankMedoid",   "totalDistance",  "cmds",                  "jumpDistanceBootstrap",
    "jumpDistanceBootstrapUnsmoothed",      "fixedN",                "logPosterior",
};

std::string name_of(TreeEssMethod m) { return std::string(method_name(m)); }

void require_size(const DistanceMatrix& d, std::size_t min_n, const char* who) {
  if (d.size() < min_n)
    throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(min_n) + " samples");
}

bool all_zero(const DistanceMatrix& d) {
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j)
      if (d(i, j) != 0.0) return false;
  return true;
}

std::vector<double> distances_to(const DistanceMatrix& d, std::size_t ref) {
  std::vector<double> x(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) x[i] = d(i, ref);
  return x;
}

EssEstimate ar_or_one(std::span<const double> x, std::size_t n, std::string method) {
  auto e = ar_spectrum_ess(x);
  return clamp_ess(e.value, n, std::move(method));
}

}  // namespace

std::string_view method_name(TreeEssMethod m) { return kNames.at(static_cast<std::size_t>(m)); }

TreeEssMethod parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<TreeEssMethod>(i);
  throw std::invalid_argument("unknown ESS method '" + std::string(name) + "'");
}

bool needs_distance_matrix(TreeEssMethod m) {
  return m != TreeEssMethod::SplitFrequency && m != TreeEssMethod::FixedN && m != TreeEssMethod::LogPosterior;
}

bool is_randomized(TreeEssMethod m) {
  return m == TreeEssMethod::JumpDistanceBootstrap || m == TreeEssMethod::JumpDistanceBootstrapUnsmoothed;
}

// ---------------------------------------------------------------------------
// Fréchet correlation

namespace {

/// Prefix/suffix sums of squared distances so that every lag's window
/// variances cost O(1).
class LagVariances {
 public:
  explicit LagVariances(const DistanceMatrix& d) : d_(d), n_(d.size()), lead_(n_ + 1, 0.0), trail_(n_ + 1, 0.0) {
    for (std::size_t m = 1; m < n_; ++m) {
      double add = 0.0;
      for (std::size_t i = 0; i < m; ++i) add += sq(i, m);
      lead_[m + 1] = lead_[m] + add;
    }
    for (std::size_t s = n_ - 1; s-- > 0;) {
      double add = 0.0;
      for (std::size_t j = s + 1; j < n_; ++j) add += sq(s, j);
      trail_[s] = trail_[s + 1] + add;
    }
  }

  double rho(std::size_t lag) const {
    const std::size_t k = n_ - lag;
    const double norm = static_cast<double>(k) * static_cast<double>(k - 1);
    const double v_lead = lead_[k] / norm;
    const double v_trail = trail_[lag] / norm;
    double e = 0.0;
    for (std::size_t i = 0; i < k; ++i) e += sq(i, i + lag);
    e /= static_cast<double>(k);
    const double denom = std::sqrt(v_lead * v_trail);
    if (!(denom > 0.0)) return e == 0.0 ? 1.0 : 0.0;
    return 0.5 * (v_lead + v_trail - e) / denom;
  }

 private:
  double sq(std::size_t i, std::size_t j) const {
    const double x = d_(i, j);
    return x * x;
  }
  const DistanceMatrix& d_;
  std::size_t n_;
  std::vector<double> lead_;   // lead_[m]: Σ over pairs within [0, m)
  std::vector<double> trail_;  // trail_[s]: Σ over pairs within [s, n)
};

}  // namespace

std::vector<double> frechet_autocorrelations(const DistanceMatrix& d, std::optional<std::size_t> max_lag) {
  require_size(d, 4, "frechet_autocorrelations");
  const LagVariances lv(d);
  const std::size_t top = std::min(max_lag.value_or(d.size() - 2), d.size() - 2);
  std::vector<double> rho(top + 1);
  for (std::size_t s = 0; s <= top; ++s) rho[s] = s == 0 ? 1.0 : lv.rho(s);
  return rho;
}

EssEstimate frechet_correlation_ess(const DistanceMatrix& d) {
  require_size(d, 4, "frechet_correlation_ess");
  const auto name = name_of(TreeEssMethod::FrechetCorrelation);
  if (all_zero(d)) return clamp_ess(1.0, d.size(), name);
  const LagVariances lv(d);
  auto e = sum_of_correlations_ess(d.size(), d.size() - 2, [&](std::size_t s) { return s == 0 ? 1.0 : lv.rho(s); });
  e.method = name;
  return e;
}

// ---------------------------------------------------------------------------
// Split frequency

namespace {

/// Σ_i ‖Y_i − X̄‖² over batches of `batch` samples, scaled as λ²_B.
double vector_batch_variance(const std::vector<std::vector<std::size_t>>& rows, const std::vector<double>& xbar,
                             std::size_t batch) {
  const std::size_t a = rows.size() / batch;
  if (a < 2) throw std::invalid_argument("split_frequency_ess: fewer than 2 batches");
  double base = 0.0;
  for (double m : xbar) base += m * m;
  std::vector<double> counts(xbar.size(), 0.0);
  std::vector<std::size_t> touched;
  double ss = 0.0;
  for (std::size_t i = 0; i < a; ++i) {
    touched.clear();
    for (std::size_t k = i * batch; k < (i + 1) * batch; ++k)
      for (auto j : rows[k]) {
        if (counts[j] == 0.0) touched.push_back(j);
        counts[j] += 1.0;
      }
    // ‖Y − X̄‖² = Σ_j X̄_j² + Σ_{j touched} (Y_j² − 2 Y_j X̄_j)
    double dev = base;
    for (auto j : touched) {
      const double y = counts[j] / static_cast<double>(batch);
      dev += y * y - 2.0 * y * xbar[j];
      counts[j] = 0.0;
    }
    ss += dev;
  }
  return static_cast<double>(batch) / static_cast<double>(a - 1) * ss;
}

}  // namespace

EssEstimate split_frequency_ess(const Chain& c) {
  const std::size_t n = c.samples.size();
  const auto name = name_of(TreeEssMethod::SplitFrequency);
  if (n < 16) throw std::invalid_argument("split_frequency_ess: need at least 16 samples");

  std::unordered_map<Split, std::size_t, SplitHash> ids;
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& s : c.samples[i].splits()) {
      auto [it, inserted] = ids.try_emplace(s, ids.size());
      rows[i].push_back(it->second);
    }
  std::vector<double> xbar(ids.size(), 0.0);
  for (const auto& r : rows)
    for (auto j : r) xbar[j] += 1.0;
  for (auto& m : xbar) m /= static_cast<double>(n);

  double base = 0.0;
  for (double m : xbar) base += m * m;
  double ss = 0.0;
  for (const auto& r : rows) {
    double dev = base;
    for (auto j : r) dev += 1.0 - 2.0 * xbar[j];
    ss += dev;
  }
  const double sigma2 = ss / static_cast<double>(n - 1);
  if (!(sigma2 > 1e-15)) return clamp_ess(1.0, n, name);

  const auto b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const double lobed = 2.0 * vector_batch_variance(rows, xbar, b) - vector_batch_variance(rows, xbar, b / 3);
  const double lambda2 = std::max(lobed, kLimitingVarianceFloor);
  return clamp_ess(static_cast<double>(n) * sigma2 / lambda2, n, name);
}

// ---------------------------------------------------------------------------
// Projection methods

std::vector<double> pseudo_ess_per_reference(const DistanceMatrix& d) {
  require_size(d, 8, "pseudo_ess");
  // References at distance zero produce identical series.
  std::vector<std::size_t> reps;
  const auto cls = d.zero_distance_classes(&reps);
  std::vector<double> per_class(reps.size());
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto x = distances_to(d, reps[k]);
    per_class[k] = ar_spectrum_ess(x).value;
  }
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = per_class[cls[i]];
  return out;
}

EssEstimate pseudo_ess(const DistanceMatrix& d, PseudoAggregate aggregate) {
  const auto per_ref = pseudo_ess_per_reference(d);
  if (aggregate == PseudoAggregate::Min)
    return clamp_ess(*std::min_element(per_ref.begin(), per_ref.end()), d.size(), name_of(TreeEssMethod::MinPseudo));
  return clamp_ess(median(per_ref), d.size(), name_of(TreeEssMethod::MedianPseudo));
}

EssEstimate folded_rank_medoid_ess(const DistanceMatrix& d) {
  require_size(d, 8, "folded_rank_medoid_ess");
  const std::size_t n = d.size();
  const auto name = name_of(TreeEssMethod::FoldedRankMedoid);
  if (all_zero(d)) return clamp_ess(1.0, n, name);

  std::vector<std::size_t> reps;
  const auto cls = d.zero_distance_classes(&reps);
  std::vector<bool> seen(reps.size(), false);
  double best = std::numeric_limits<double>::infinity();
  const double denom = static_cast<double>(n) - 0.25;
  for (auto m : medoid_indices(d)) {
    if (seen[cls[m]]) continue;
    seen[cls[m]] = true;
    const auto zeta = distances_to(d, m);
    const auto ranks = average_ranks(zeta);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = normal_quantile((ranks[i] - 0.375) / denom);
    best = std::min(best, sum_of_correlations_ess(z).value);
  }
  return clamp_ess(best, n, name);
}

EssEstimate total_distance_ess(const DistanceMatrix& d) {
  require_size(d, 8, "total_distance_ess");
  const auto y = d.row_sums();
  return ar_or_one(y, d.size(), name_of(TreeEssMethod::TotalDistance));
}

std::vector<double> cmds_first_coordinate(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> reps;
  const auto cls = d.zero_distance_classes(&reps);
  const std::size_t u = reps.size();
  if (u < 2) return {};

  // Rows of identical samples coincide, so the eigenproblem of B = -½ J D² J
  // reduces to the symmetric u×u matrix (I - qqᵀ) C^½ A C^½ (I - qqᵀ) with
  // A = -½ D²(reps), C = diag(counts), q = sqrt(counts / n).
  std::vector<double> counts(u, 0.0);
  for (auto c : cls) counts[c] += 1.0;
  std::vector<double> root(u), q(u);
  for (std::size_t k = 0; k < u; ++k) {
    root[k] = std::sqrt(counts[k]);
    q[k] = root[k] / std::sqrt(static_cast<double>(n));
  }
  std::vector<double> a(u * u, 0.0);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < u; ++j) {
      const double x = d(reps[i], reps[j]);
      a[i * u + j] = -0.5 * x * x * root[i] * root[j];
    }

  auto deflate = [&](std::vector<double>& v) {
    double dot = 0.0;
    for (std::size_t k = 0; k < u; ++k) dot += q[k] * v[k];
    for (std::size_t k = 0; k < u; ++k) v[k] -= dot * q[k];
  };
  auto normalize = [&](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (s > 0.0)
      for (auto& x : v) x /= s;
    return s;
  };
  auto apply = [&](const std::vector<double>& v, double shift) {
    std::vector<double> in = v;
    deflate(in);
    std::vector<double> out(u, 0.0);
    for (std::size_t i = 0; i < u; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < u; ++j) s += a[i * u + j] * in[j];
      out[i] = s;
    }
    deflate(out);
    for (std::size_t k = 0; k < u; ++k) out[k] += shift * in[k];
    return out;
  };

  constexpr double kTol = 1e-10;
  constexpr std::size_t kMaxIter = 10000;
  auto power = [&](double shift, double* eigenvalue) {
    // Deterministic start: a centered ramp with a fixed irregular perturbation.
    std::vector<double> v(u);
    for (std::size_t k = 0; k < u; ++k) v[k] = static_cast<double>(k) + 0.5 * std::sin(1.0 + 3.0 * static_cast<double>(k));
    deflate(v);
    normalize(v);
    for (std::size_t it = 0; it < kMaxIter; ++it) {
      auto w = apply(v, shift);
      if (normalize(w) == 0.0) break;
      double dot = 0.0;
      for (std::size_t k = 0; k < u; ++k) dot += w[k] * v[k];
      double diff = 0.0;
      const double sign = dot < 0.0 ? -1.0 : 1.0;
      for (std::size_t k = 0; k < u; ++k) diff += (w[k] - sign * v[k]) * (w[k] - sign * v[k]);
      v = std::move(w);
      if (std::sqrt(diff) < kTol) break;
    }
    const auto bv = apply(v, 0.0);
    double lambda = 0.0;
    for (std::size_t k = 0; k < u; ++k) lambda += v[k] * bv[k];
    *eigenvalue = lambda;
    return v;
  };

  double lambda = 0.0;
  auto v = power(0.0, &lambda);
  if (lambda < 0.0) {
    // Dominant in magnitude is negative; shift to reach the largest algebraic one.
    v = power(-lambda, &lambda);
  }
  std::vector<double> coord(n);
  for (std::size_t i = 0; i < n; ++i) coord[i] = v[cls[i]] / root[cls[i]];
  return coord;
}

EssEstimate cmds_ess(const DistanceMatrix& d) {
  require_size(d, 8, "cmds_ess");
  const auto name = name_of(TreeEssMethod::Cmds);
  const auto coord = cmds_first_coordinate(d);
  if (coord.empty()) return clamp_ess(1.0, d.size(), name);
  return ar_or_one(coord, d.size(), name);
}

// ---------------------------------------------------------------------------
// Jump distance

EssEstimate jump_distance_ess(const DistanceMatrix& d, const JumpDistanceOptions& opts) {
  require_size(d, 8, "jump_distance_ess");
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw std::invalid_argument("jump_distance_ess: alpha outside (0, 1)");
  if (opts.n_boot == 0) throw std::invalid_argument("jump_distance_ess: n_boot must be positive");
  const std::size_t n = d.size();
  const auto name = name_of(opts.smoothed ? TreeEssMethod::JumpDistanceBootstrap
                                          : TreeEssMethod::JumpDistanceBootstrapUnsmoothed);
  if (all_zero(d)) return clamp_ess(1.0, n, name);

  // G[s] for s = 0..n-1: running maximum of the median lag-s jump distance.
  std::vector<double> G(n, 0.0);
  std::vector<double> buf;
  for (std::size_t s = 1; s < n; ++s) {
    buf.clear();
    for (std::size_t i = 0; i + s < n; ++i) buf.push_back(d(i, i + s));
    G[s] = std::max(G[s - 1], median(buf));
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> boot(opts.n_boot);
  std::vector<std::size_t> idx(n);
  for (auto& b : boot) {
    for (auto& i : idx) i = pick(rng);
    buf.clear();
    for (std::size_t i = 0; i + 1 < n; ++i) buf.push_back(d(idx[i], idx[i + 1]));
    b = median(buf);
  }
  const double eps = quantile(boot, 1.0 - opts.alpha);

  if (!opts.smoothed) {
    for (std::size_t s = 1; s < n; ++s)
      if (G[s] > eps) return clamp_ess(static_cast<double>(n) / static_cast<double>(s), n, name);
    return clamp_ess(1.0, n, name);
  }

  // Piecewise-linear interpolation through the change points of G, starting at (0, 0).
  std::size_t prev = 0;
  if (G[0] >= eps) return clamp_ess(static_cast<double>(n), n, name);
  for (std::size_t s = 1; s < n; ++s) {
    if (G[s] == G[prev]) continue;
    if (G[s] >= eps) {
      const double frac = (eps - G[prev]) / (G[s] - G[prev]);
      const double s0 = static_cast<double>(prev) + frac * static_cast<double>(s - prev);
      return clamp_ess(s0 > 0.0 ? static_cast<double>(n) / s0 : static_cast<double>(n), n, name);
    }
    prev = s;
  }
  return clamp_ess(1.0, n, name);
}

// ---------------------------------------------------------------------------
// Baselines

EssEstimate fixed_n_ess(const Chain& c) {
  return {static_cast<double>(c.samples.size()), name_of(TreeEssMethod::FixedN), c.samples.size()};
}

EssEstimate log_posterior_ess(const Chain& c) {
  if (!c.log_density) throw DataError("logPosterior ESS needs a log-density trace");
  auto e = ar_spectrum_ess(*c.log_density);
  e.method = name_of(TreeEssMethod::LogPosterior);
  return e;
}

EssEstimate estimate_ess(TreeEssMethod m, const Chain& c, const DistanceMatrix* d, std::uint64_t seed) {
  if (needs_distance_matrix(m) && !d) throw std::invalid_argument("estimate_ess: distance matrix required");
  switch (m) {
    case TreeEssMethod::FrechetCorrelation: return frechet_correlation_ess(*d);
    case TreeEssMethod::SplitFrequency: return split_frequency_ess(c);
    case TreeEssMethod::MedianPseudo: return pseudo_ess(*d, PseudoAggregate::Median);
    case TreeEssMethod::MinPseudo: return pseudo_ess(*d, PseudoAggregate::Min);
    case TreeEssMethod::FoldedRankMedoid: return folded_rank_medoid_ess(*d);
    case TreeEssMethod::TotalDistance: return total_distance_ess(*d);
    case TreeEssMethod::Cmds: return cmds_ess(*d);
    case TreeEssMethod::JumpDistanceBootstrap: return jump_distance_ess(*d, {true, 0.05, 200, seed});
    case TreeEssMethod::JumpDistanceBootstrapUnsmoothed: return jump_distance_ess(*d, {false, 0.05, 200, seed});
    case TreeEssMethod::FixedN: return fixed_n_ess(c);
    case TreeEssMethod::LogPosterior: return log_posterior_ess(c);
  }
  throw std::invalid_argument("estimate_ess: unknown method");
}

}  // namespace topess
