#pragma once

// Split and topology probabilities, between-chain split-frequency spread, and
// Monte Carlo standard errors with their comparison statistics.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "topess/trees.hpp"

namespace topess {

struct SplitProbabilities {
  TaxonMapPtr taxa;
  std::map<Split, double> probs;  ///< observed splits only; absent means 0
  std::map<Split, std::size_t> counts;
  std::size_t n = 0;

  double prob(const Split& s) const;
};

struct TreeProbabilities {
  TaxonMapPtr taxa;
  std::map<Topology, double> probs;
  std::map<Topology, std::size_t> counts;
  std::size_t n = 0;

  double prob(const Topology& t) const;
  /// Entries by descending probability, ties by topology order.
  std::vector<std::pair<Topology, double>> ranked() const;
};

/// Throws std::invalid_argument on an empty chain.
SplitProbabilities split_probabilities(const Chain& c);
SplitProbabilities split_probabilities(std::span<const Topology> samples, const TaxonMapPtr& taxa);
TreeProbabilities tree_probabilities(const Chain& c);
TreeProbabilities tree_probabilities(std::span<const Topology> samples, const TaxonMapPtr& taxa);

struct SplitSpread {
  double asdsf = 0.0;
  double msdsf = 0.0;
};

/// Population SD (divisor m) of each split's frequency across chains, over
/// splits reaching `min_freq` in at least one chain; mean and max.
SplitSpread asdsf_msdsf(std::span<const Chain> chains, double min_freq = 0.1);
SplitSpread asdsf_msdsf(std::span<const SplitProbabilities> per_chain, double min_freq = 0.1);

/// sqrt((1/m) Σ (x_i - x̄)²); throws std::invalid_argument when m < 2.
double se_scalar(std::span<const double> estimates);

/// sqrt((1/m) Σ d_RF(τ_i, pooled)²); DataError on taxon mismatch.
double frechet_se_mrc(std::span<const Topology> per_run_mrc, const Topology& pooled_mrc);

struct ErrorComparison {
  double se_mcmc = 0.0;
  double se_mcess = 0.0;
  double rmce = 0.0;
  double itmce = 1.0;
  /// At least one SE is zero, so the ratios are limits or undefined.
  bool degenerate = false;
};

/// rmce = (se_mcmc - se_mcess)/se_mcmc, itmce = se_mcmc/se_mcess. Zero SEs
/// give a degenerate record: both zero -> NaN, NaN; se_mcmc = 0 -> -inf, 0;
/// se_mcess = 0 -> 1, +inf. Negative or NaN input throws std::invalid_argument.
ErrorComparison compare_errors(double se_mcmc, double se_mcess);

/// TSV: split_id, probability, count; by descending probability.
void write_split_summary(std::ostream& out, const SplitProbabilities& sp);
/// TSV: newick, probability, count; by descending probability.
void write_tree_summary(std::ostream& out, const TreeProbabilities& tp);

}  // namespace topess
