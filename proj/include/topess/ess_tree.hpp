#pragma once

// Topological effective sample sizes computed from a chain of trees and its
// pairwise distance matrix.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "topess/ess_univariate.hpp"
#include "topess/treedist.hpp"
#include "topess/trees.hpp"

namespace topess {

enum class TreeEssMethod {
  FrechetCorrelation,
  SplitFrequency,
  MedianPseudo,
  MinPseudo,
  FoldedRankMedoid,
  TotalDistance,
  Cmds,
  JumpDistanceBootstrap,
  JumpDistanceBootstrapUnsmoothed,
  FixedN,
  LogPosterior,
};

inline constexpr std::array<TreeEssMethod, 11> kAllTreeEssMethods = {
    TreeEssMethod::FrechetCorrelation, TreeEssMethod::SplitFrequency,
    TreeEssMethod::MedianPseudo,       TreeEssMethod::MinPseudo,
    TreeEssMethod::FoldedRankMedoid,   TreeEssMethod::TotalDistance,
    TreeEssMethod::Cmds,               TreeEssMethod::JumpDistanceBootstrap,
    TreeEssMethod::JumpDistanceBootstrapUnsmoothed, TreeEssMethod::FixedN,
    TreeEssMethod::LogPosterior,
};

/// Canonical identifier, e.g. "frechetCorrelation".
std::string_view method_name(TreeEssMethod m);
/// Inverse of method_name; throws std::invalid_argument on unknown names.
TreeEssMethod parse_method(std::string_view name);
bool needs_distance_matrix(TreeEssMethod m);
/// Jump-distance methods draw bootstrap resamples and need a seed.
bool is_randomized(TreeEssMethod m);

/// Fréchet autocorrelations from squared RF distances fed to the
/// sum-of-correlations estimator. Requires n >= 4.
EssEstimate frechet_correlation_ess(const DistanceMatrix& d);

/// Lag-s Fréchet autocorrelations 0..max_lag (default n-2), for inspection.
std::vector<double> frechet_autocorrelations(const DistanceMatrix& d, std::optional<std::size_t> max_lag = std::nullopt);

/// Batch-means ESS on split-indicator vectors. Requires n >= 16.
EssEstimate split_frequency_ess(const Chain& c);

enum class PseudoAggregate { Median, Min };

/// ESS of the distance-to-reference series for every sample as reference,
/// one value per sample index. Requires n >= 8.
std::vector<double> pseudo_ess_per_reference(const DistanceMatrix& d);
EssEstimate pseudo_ess(const DistanceMatrix& d, PseudoAggregate aggregate);

/// Folded rank-normalized distances to each medoid; minimum over medoids.
EssEstimate folded_rank_medoid_ess(const DistanceMatrix& d);

/// AR-spectral ESS of each sample's total distance to all samples.
EssEstimate total_distance_ess(const DistanceMatrix& d);

/// First classical-MDS coordinate: top eigenvector of -½ J D² J by power
/// iteration. Returned per sample, unit scale, arbitrary sign. Empty when all
/// distances are zero.
std::vector<double> cmds_first_coordinate(const DistanceMatrix& d);
EssEstimate cmds_ess(const DistanceMatrix& d);

struct JumpDistanceOptions {
  bool smoothed = true;
  double alpha = 0.05;
  std::size_t n_boot = 200;
  std::uint64_t seed = 0;
};

/// n / s0 where s0 is the first lag whose running-max median jump distance
/// reaches the bootstrap (1 - alpha) threshold.
EssEstimate jump_distance_ess(const DistanceMatrix& d, const JumpDistanceOptions& opts);

EssEstimate fixed_n_ess(const Chain& c);

/// AR-spectral ESS of the chain's log-density trace; DataError if absent.
EssEstimate log_posterior_ess(const Chain& c);

/// Dispatches one method. `d` is required for distance-based methods.
EssEstimate estimate_ess(TreeEssMethod m, const Chain& c, const DistanceMatrix* d, std::uint64_t seed = 0);

}  // namespace topess
