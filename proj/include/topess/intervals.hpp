#pragma once

// ESS-based confidence intervals for split probabilities and between-chain
// differences.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "topess/ess_tree.hpp"
#include "topess/posterior_summaries.hpp"
#include "topess/trees.hpp"

namespace topess {

struct Interval {
  double lower = 0.0;
  double upper = 1.0;

  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Jeffreys interval: Beta(x + ½, n - x + ½) quantiles with x = p_hat·ess,
/// n = ess; lower = 0 when x = 0 and upper = 1 when x = n.
Interval jeffreys_ci(double p_hat, double ess, double level = 0.95);

/// Agresti-Caffo adjusted Wald interval for p1 - p2 with effective counts.
Interval agresti_caffo_diff_ci(double p1, double ess1, double p2, double ess2, double level = 0.95);

struct SplitComparisonRow {
  std::size_t chain_i = 0;
  std::size_t chain_j = 0;
  Split split;
  double p_i = 0.0;
  double p_j = 0.0;
  Interval ci_i;
  Interval ci_j;
  Interval diff;
  bool pass = true;  ///< difference interval contains 0
};

struct PairSummary {
  std::size_t chain_i = 0;
  std::size_t chain_j = 0;
  SplitSpread spread;
  std::size_t n_fail = 0;
};

struct SplitComparisonReport {
  TaxonMapPtr taxa;
  std::vector<double> ess;  ///< per chain
  std::vector<SplitComparisonRow> rows;
  std::vector<PairSummary> pairs;
};

/// Every ordered pair (i, j), i != j, over splits observed in either chain.
/// Pair spread uses asdsf_msdsf with `min_freq`.
SplitComparisonReport compare_chains(std::span<const Chain> chains, std::span<const double> ess, double level = 0.95,
                                     double min_freq = 0.1);
/// ESS of each chain from `method` (distance matrices built as needed).
SplitComparisonReport compare_chains(std::span<const Chain> chains, TreeEssMethod method, double level = 0.95,
                                     std::uint64_t seed = 0, double min_freq = 0.1);

/// Split rows, a blank line, then the per-pair summary block.
void write_comparison_report(std::ostream& out, const SplitComparisonReport& report);

}  // namespace topess
