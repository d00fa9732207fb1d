#pragma once

// Independent oracles and generators shared by unit and acceptance tests.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "topess/fake_mcmc.hpp"
#include "topess/trees.hpp"

namespace topess::testing {

/// Zero-padded labels t00, t01, ... so that lexicographic order is index order.
std::vector<std::string> taxon_labels(std::size_t n);

/// A random binary tree built by repeatedly joining two random subtrees.
/// `splits` holds the canonical non-trivial bipartitions as raw bitmasks over
/// label index (n <= 64), computed alongside the Newick string.
struct RandomTree {
  std::string newick;
  std::set<std::uint64_t> splits;
};

RandomTree random_binary_tree(std::size_t n, std::mt19937_64& rng);

/// Hamming distance between split-indicator vectors over every canonical
/// bipartition of n taxa.
std::size_t brute_force_rf(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b, std::size_t n);

/// Every binary topology on n taxa as a set of n - 3 pairwise compatible
/// bitmask splits (n <= 8).
std::vector<std::set<std::uint64_t>> all_binary_split_sets(std::size_t n);

/// Topology from raw canonical bitmasks.
Topology topology_from_masks(const TaxonMapPtr& taxa, const std::set<std::uint64_t>& masks);
std::set<std::uint64_t> masks_of(const Topology& t);

/// Metropolis sampler proposing uniformly among all 2(n - 3) NNI neighbors;
/// neighbors outside the support are rejected.
ChainTrace naive_chain(const CategoricalTreeDistribution& target, std::size_t iterations, std::size_t thin,
                       std::uint64_t seed);

/// Empirical state frequencies of a trace over the support.
std::vector<double> state_frequencies(const std::vector<std::size_t>& states, std::size_t support);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// The bundled six-taxon target.
CategoricalTreeDistribution six_taxon_target();

/// Three four-taxon topologies with the given probabilities.
CategoricalTreeDistribution four_taxon_target(const std::vector<double>& probs);

/// Stationary AR(1) series.
std::vector<double> ar1_series(std::size_t n, double phi, std::uint64_t seed);

}  // namespace topess::testing
