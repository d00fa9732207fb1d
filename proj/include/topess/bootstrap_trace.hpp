#pragma once

// Block-bootstrap traces of posterior-summary discrepancy against growing
// chain prefixes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "topess/trees.hpp"

namespace topess {

enum class TraceKind { Asdsf, TreeProbEuclidean, ConsensusRf };

/// "asdsf", "tree_prob_euclidean", "consensus_rf".
std::string_view trace_kind_name(TraceKind k);
/// Throws std::invalid_argument on unknown names.
TraceKind parse_trace_kind(std::string_view name);

struct TraceOptions {
  TraceKind kind = TraceKind::Asdsf;
  std::vector<std::size_t> subsample_sizes;  ///< empty: default_subsample_sizes(n)
  std::size_t replicates = 100;
  std::vector<double> consensus_thresholds = {0.5, 0.75, 0.95};
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::size_t n_i = 0;
  std::optional<double> prefix_split_frequency_ess;  ///< absent when n_i < 16
  TraceKind kind = TraceKind::Asdsf;
  std::optional<double> threshold;  ///< consensus kind only
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

/// Ten log-spaced sizes from min(100, n) to n, rounded and de-duplicated.
std::vector<std::size_t> default_subsample_sizes(std::size_t n);

/// For each n_i: blocks of b = floor(sqrt(n_i)) samples, a = floor(n_i / b)
/// blocks with starts uniform on [0, n_i - b]; the reference is the first a·b
/// samples. Quantiles of the replicate-vs-reference discrepancy.
/// Throws std::invalid_argument when n_i < 4, n_i > n, sizes are not
/// increasing, or replicates < 10.
std::vector<TraceRow> block_bootstrap_trace(const Chain& c, const TraceOptions& opts);

/// TSV: n_i, prefix_split_frequency_ess, kind, threshold, q05, q50, q95.
void write_trace(std::ostream& out, const std::vector<TraceRow>& rows);

}  // namespace topess
