#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "topess/trees.hpp"

namespace topess {

/// Robinson-Foulds distance: |A \ B| + |B \ A| over non-trivial splits.
/// Works for unresolved topologies. Throws DataError on taxon mismatch.
std::size_t rf_distance(const Topology& a, const Topology& b);

/// Symmetric sample distance matrix with a zero diagonal, stored as the
/// strict upper triangle. RF distances are integral and held exactly; the
/// element type is double so that non-tree metrics can reuse the estimators.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), upper_(n * (n ? n - 1 : 0) / 2, 0.0) {}

  /// Builds from an arbitrary symmetric function of sample indices.
  static DistanceMatrix from_function(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return upper_[offset(i, j)];
  }
  void set(std::size_t i, std::size_t j, double d) {
    if (i == j) return;
    if (i > j) std::swap(i, j);
    upper_[offset(i, j)] = d;
  }
  /// Row sums Σ_j d(i, j).
  std::vector<double> row_sums() const;
  /// Groups of indices at mutual distance zero, in order of first appearance,
  /// with the group id of every index.
  std::vector<std::size_t> zero_distance_classes(std::vector<std::size_t>* representatives = nullptr) const;

  /// New matrix with every entry multiplied by `factor`.
  DistanceMatrix scaled(double factor) const;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const { return i * (2 * n_ - i - 1) / 2 + (j - i - 1); }
  std::size_t n_ = 0;
  std::vector<double> upper_;
};

/// RF distance matrix of a chain. Identical topologies are collapsed first, so
/// the cost is quadratic in the number of distinct topologies.
DistanceMatrix distance_matrix(const Chain& c);

/// (1/(k(k-1))) Σ_{i<j} d(x_i, x_j)² over the index subset, k = |idx| >= 2.
double frechet_variance(const DistanceMatrix& d, std::span<const std::size_t> idx);

/// All indices minimizing Σ_j d(i, j).
std::vector<std::size_t> medoid_indices(const DistanceMatrix& d);

/// Full symmetric matrix as TSV, one row per sample.
void write_distance_matrix(std::ostream& out, const DistanceMatrix& d);

}  // namespace topess
