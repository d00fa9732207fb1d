#pragma once

// Unrooted tree topologies represented as sets of canonical splits.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace topess {

inline constexpr std::size_t kDefaultMaxTaxa = 4096;

/// Ordered set of distinct taxon labels. Indices are fixed at construction.
class TaxonMap {
 public:
  explicit TaxonMap(std::vector<std::string> names, std::size_t max_taxa = kDefaultMaxTaxa);

  std::size_t size() const { return names_.size(); }
  /// Number of 64-bit words in a split mask over this taxon set.
  std::size_t words() const { return (names_.size() + 63) / 64; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> find(std::string_view label) const;

  friend bool operator==(const TaxonMap& a, const TaxonMap& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

using TaxonMapPtr = std::shared_ptr<const TaxonMap>;

/// Build a shared taxon map from labels.
TaxonMapPtr make_taxon_map(std::vector<std::string> names, std::size_t max_taxa = kDefaultMaxTaxa);

/// Same object or same label sequence.
bool same_taxa(const TaxonMapPtr& a, const TaxonMapPtr& b);

/// A bipartition of the taxon set, stored as the side that does not contain
/// taxon 0.
class Split {
 public:
  Split() = default;
  /// Wraps a raw mask; canonicalizes against `n_taxa`.
  Split(std::vector<std::uint64_t> words, std::size_t n_taxa);

  static Split from_members(std::span<const std::size_t> members, std::size_t n_taxa);

  const std::vector<std::uint64_t>& words() const { return words_; }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  std::size_t count() const;
  /// Indices of the stored (taxon-0-free) side.
  std::vector<std::size_t> members() const;

  /// Non-trivial: both sides have at least two taxa.
  bool is_nontrivial(std::size_t n_taxa) const;

  friend auto operator<=>(const Split&, const Split&) = default;
  friend bool operator==(const Split&, const Split&) = default;

 private:
  std::vector<std::uint64_t> words_;
};

/// Four-intersection compatibility test on canonical splits.
bool compatible(const Split& a, const Split& b);

struct SplitHash {
  std::size_t operator()(const Split& s) const noexcept;
};

/// An unrooted topology: a set of pairwise compatible non-trivial splits.
class Topology {
 public:
  /// Validates that every split is canonical, non-trivial and pairwise compatible.
  Topology(TaxonMapPtr taxa, std::vector<Split> splits);

  /// Skips the pairwise compatibility check; used where compatibility holds by construction.
  static Topology trusted(TaxonMapPtr taxa, std::vector<Split> splits);

  const TaxonMap& taxa() const { return *taxa_; }
  const TaxonMapPtr& taxa_ptr() const { return taxa_; }
  std::size_t n_taxa() const { return taxa_->size(); }
  /// Sorted, duplicate-free.
  std::span<const Split> splits() const { return splits_; }
  bool contains(const Split& s) const;
  bool is_binary() const { return taxa_->size() >= 3 && splits_.size() == taxa_->size() - 3; }

  friend bool operator==(const Topology& a, const Topology& b);
  friend bool operator<(const Topology& a, const Topology& b) { return a.splits_ < b.splits_; }

 private:
  Topology() = default;
  TaxonMapPtr taxa_;
  std::vector<Split> splits_;
};

struct TopologyHash {
  std::size_t operator()(const Topology& t) const noexcept;
};

/// One MCMC run: samples in order plus an optional aligned log-density trace.
struct Chain {
  TaxonMapPtr taxa;
  std::vector<Topology> samples;
  std::optional<std::vector<double>> log_density;

  std::size_t size() const { return samples.size(); }
  /// Throws DataError when samples disagree on taxa or the trace length differs.
  void validate() const;
};

/// Parses one Newick string. Branch lengths and internal labels are dropped and
/// rooted input is unrooted. Without `taxa`, a map is built from the leaf labels
/// sorted lexicographically.
Topology parse_newick(std::string_view text, TaxonMapPtr taxa = nullptr);

/// Deterministic Newick without branch lengths; children ordered by smallest taxon index.
std::string serialize_newick(const Topology& t);

/// Majority-rule consensus: keeps splits with probability strictly above `threshold`.
Topology mrc_tree(const std::map<Split, double>& split_probs, const TaxonMapPtr& taxa,
                  double threshold = 0.5);

/// Human-readable split id: taxon names of the smaller side joined with ';'
/// (the taxon-0-free side on ties).
std::string split_label(const Split& s, const TaxonMap& taxa);

}  // namespace topess
