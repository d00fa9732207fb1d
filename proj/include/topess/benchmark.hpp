#pragma once

// Validation of ESS measures against brute-force Monte Carlo error across
// replicate chains on a known target.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topess/ess_tree.hpp"
#include "topess/fake_mcmc.hpp"
#include "topess/posterior_summaries.hpp"

namespace topess {

/// An ESS measure under evaluation. `d` is non-null when `needs_distances`.
struct NamedEstimator {
  std::string name;
  std::function<double(const Chain& c, const DistanceMatrix* d, std::uint64_t seed)> ess;
  bool needs_distances = false;
};

NamedEstimator method_estimator(TreeEssMethod m);

enum class SummaryKind { Split, Tree, Mrc };
std::string_view summary_kind_name(SummaryKind k);

struct BenchmarkConfig {
  std::shared_ptr<const CategoricalTreeDistribution> target;
  std::size_t m = 100;
  std::size_t iterations = 0;
  std::size_t thin = 1;
  std::vector<NamedEstimator> methods;
  std::uint64_t seed = 0;
  /// Replace the MCMC chains with iid draws of the kept sample size.
  bool iid_chains = false;
  double min_split_prob = 0.01;
  std::size_t max_trees = 1000;
  /// Chain-subset sizes for the nRuns{k} brute-force comparators.
  std::vector<std::size_t> nruns;
};

/// Items whose Monte Carlo error is assessed.
struct SummaryItems {
  TaxonMapPtr taxa;
  std::vector<Split> splits;
  std::vector<double> split_probs;
  std::vector<Topology> trees;
  std::vector<double> tree_probs;
};

/// Splits with pooled probability >= min_split_prob (sorted by split order)
/// and the max_trees most probable pooled topologies.
SummaryItems select_items(std::span<const Chain> chains, double min_split_prob = 0.01, std::size_t max_trees = 1000);

struct ItemErrors {
  std::vector<double> split_se;
  std::vector<double> tree_se;
  double mrc_se = 0.0;
};

/// se_scalar of per-chain estimates for every item, and the Fréchet SE of
/// per-chain MRC trees about the MRC of the pooled samples.
ItemErrors brute_force_errors(std::span<const Chain> chains, const SummaryItems& items);
/// The same formulas on a chain subset; throws std::invalid_argument below 2 chains.
ItemErrors nruns_bruteforce(std::span<const Chain> subset, const SummaryItems& items);

struct BenchmarkRecord {
  std::string method;
  SummaryKind kind = SummaryKind::Split;
  std::string item_id;
  double item_prob = 0.0;  ///< NaN for the MRC item
  ErrorComparison cmp;
  double mean_ess = 0.0;  ///< NaN for nRuns comparators
};

struct BenchmarkReport {
  std::size_t iterations = 0;
  std::size_t kept = 0;
  std::size_t m = 0;
  std::vector<BenchmarkRecord> records;
  std::map<std::string, std::vector<double>> chain_ess;  ///< unrounded, per method
};

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg);

/// Value used for ESS-regime binning: mean ESS, except fixedN which is binned
/// by the number of iterations run.
double binning_ess(const BenchmarkRecord& r, const BenchmarkReport& report);

/// TSV: method, summary_kind, item_id, item_prob, se_mcmc, se_mcess, rmce, itmce, mean_ess.
void write_benchmark_report(std::ostream& out, const BenchmarkReport& report);
/// Key/value metadata plus per-chain ESS values.
void write_benchmark_metadata(std::ostream& out, const BenchmarkReport& report);

struct NormalCalibrationConfig {
  std::size_t n_lengths = 50;
  std::size_t min_iterations = 1000;
  std::size_t max_iterations = 100000;
  std::size_t kept = 1000;
  double proposal_sd = 0.3;
  std::size_t m = 100;
  std::uint64_t seed = 0;
};

struct NormalCalibrationRow {
  std::size_t iterations = 0;
  std::size_t thin = 1;
  double mean_ess = 0.0;
  ErrorComparison cmp;
};

/// Random-walk Metropolis on Normal(0, 1) started at stationarity, estimating
/// the mean; AR-spectral ESS; one row per log-spaced run length.
std::vector<NormalCalibrationRow> run_normal_calibration(const NormalCalibrationConfig& cfg);
void write_normal_calibration(std::ostream& out, const std::vector<NormalCalibrationRow>& rows);

}  // namespace topess
