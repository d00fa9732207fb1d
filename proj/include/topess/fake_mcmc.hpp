#pragma once

// Simulated phylogenetic MCMC on a known categorical target over topologies.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "topess/trees.hpp"

namespace topess {

/// The two NNI rearrangements across every internal edge: 2(n_taxa - 3)
/// distinct topologies. Throws std::invalid_argument on an unresolved tree.
std::vector<Topology> nni_neighbors(const Topology& t);

/// Immutable categorical distribution on binary topologies whose support is
/// connected under NNI.
class CategoricalTreeDistribution {
 public:
  /// Validates binary, distinct, positive entries with mass 1 ± 1e-6 and a
  /// connected support, then renormalizes.
  CategoricalTreeDistribution(TaxonMapPtr taxa, std::vector<Topology> support, std::vector<double> probs);

  const TaxonMapPtr& taxa() const { return taxa_; }
  std::size_t size() const { return support_.size(); }
  const std::vector<Topology>& support() const { return support_; }
  const Topology& topology(std::size_t i) const { return support_.at(i); }
  const std::vector<double>& probs() const { return probs_; }
  double log_prob(std::size_t i) const { return log_probs_.at(i); }
  /// In-support NNI neighbors of support index i, ascending.
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
  /// 2(n_taxa - 3).
  std::size_t total_nni_degree() const { return degree_; }
  std::optional<std::size_t> index_of(const Topology& t) const;
  /// Support index for a uniform draw u in [0, 1) by inverse CDF.
  std::size_t inverse_cdf(double u) const;

 private:
  TaxonMapPtr taxa_;
  std::vector<Topology> support_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
  std::vector<double> cdf_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::unordered_map<Topology, std::size_t, TopologyHash> index_;
  std::size_t degree_ = 0;
};

using TargetTable = std::vector<std::pair<Topology, double>>;

/// HPD prefix (ties by input order) capped at max_support, then the largest
/// NNI-connected component (ties: larger mass, then lower index), renormalized.
CategoricalTreeDistribution build_target(const TargetTable& table, double hpd_mass = 0.95,
                                         std::size_t max_support = 4096);
/// Uses empirical topology frequencies of a sample.
CategoricalTreeDistribution build_target(const Chain& sample, double hpd_mass = 0.95,
                                         std::size_t max_support = 4096);

/// TSV with header `newick<TAB>probability`. Validates mass 1 ± 1e-6 and renormalizes.
TargetTable read_target_table(std::istream& in);
TargetTable read_target_table(const std::filesystem::path& path);
void write_target(std::ostream& out, const CategoricalTreeDistribution& target);

/// Support-index trace of one chain.
struct ChainTrace {
  std::vector<std::size_t> states;  ///< every thin-th state
  std::size_t iterations = 0;
  std::size_t in_support_proposals = 0;
  std::size_t accepted = 0;

  double acceptance_rate() const {
    return iterations ? static_cast<double>(accepted) / static_cast<double>(iterations) : 0.0;
  }
};

/// Metropolis chain with the two-step NNI proposal: with probability
/// |N(s)|/total_nni_degree a uniform in-support neighbor is proposed and
/// accepted with min(1, p'/p); otherwise the proposal leaves the support and
/// is rejected. The start state is a draw from the target.
ChainTrace run_chain_trace(const CategoricalTreeDistribution& target, std::size_t iterations, std::size_t thin,
                           std::uint64_t seed);
/// Same chain as topologies, with log target probability as log_density.
Chain run_chain(const CategoricalTreeDistribution& target, std::size_t iterations, std::size_t thin,
                std::uint64_t seed);

std::vector<std::size_t> iid_indices(const CategoricalTreeDistribution& target, std::size_t k, std::uint64_t seed);
Chain iid_sample(const CategoricalTreeDistribution& target, std::size_t k, std::uint64_t seed);

/// Materializes support indices as a Chain with log target probabilities.
Chain chain_from_indices(const CategoricalTreeDistribution& target, std::span<const std::size_t> idx);

}  // namespace topess
