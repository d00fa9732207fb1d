#include "topess/treedist.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "topess/errors.hpp"
#include "topess/tree_io.hpp"

namespace topess {

std::size_t rf_distance(const Topology& a, const Topology& b) {
  if (!same_taxa(a.taxa_ptr(), b.taxa_ptr())) throw DataError("rf_distance: topologies use different taxon sets");
  const auto sa = a.splits();
  const auto sb = b.splits();
  std::size_t shared = 0;
  auto i = sa.begin();
  auto j = sb.begin();
  while (i != sa.end() && j != sb.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return (sa.size() - shared) + (sb.size() - shared);
}

DistanceMatrix DistanceMatrix::from_function(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist) {
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.upper_[m.offset(i, j)] = dist(i, j);
  return m;
}

std::vector<double> DistanceMatrix::row_sums() const {
  std::vector<double> sums(n_, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j, ++k) {
      sums[i] += upper_[k];
      sums[j] += upper_[k];
    }
  return sums;
}

std::vector<std::size_t> DistanceMatrix::zero_distance_classes(std::vector<std::size_t>* representatives) const {
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> cls(n_, unset);
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < n_; ++i) {
    if (cls[i] != unset) continue;
    cls[i] = reps.size();
    for (std::size_t j = i + 1; j < n_; ++j)
      if (cls[j] == unset && (*this)(i, j) == 0.0) cls[j] = reps.size();
    reps.push_back(i);
  }
  if (representatives) *representatives = std::move(reps);
  return cls;
}

DistanceMatrix DistanceMatrix::scaled(double factor) const {
  DistanceMatrix m = *this;
  for (auto& v : m.upper_) v *= factor;
  return m;
}

DistanceMatrix distance_matrix(const Chain& c) {
  if (c.samples.empty()) throw std::invalid_argument("distance_matrix: empty chain");
  std::unordered_map<Topology, std::size_t, TopologyHash> ids;
  std::vector<const Topology*> unique;
  std::vector<std::size_t> id_of(c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(c.samples[i], unique.size());
    if (inserted) unique.push_back(&c.samples[i]);
    id_of[i] = it->second;
  }
  const std::size_t u = unique.size();
  std::vector<double> ud(u * u, 0.0);
  for (std::size_t a = 0; a < u; ++a)
    for (std::size_t b = a + 1; b < u; ++b)
      ud[a * u + b] = ud[b * u + a] = static_cast<double>(rf_distance(*unique[a], *unique[b]));

  DistanceMatrix m(c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    for (std::size_t j = i + 1; j < c.samples.size(); ++j) m.set(i, j, ud[id_of[i] * u + id_of[j]]);
  return m;
}

double frechet_variance(const DistanceMatrix& d, std::span<const std::size_t> idx) {
  const std::size_t k = idx.size();
  if (k < 2) throw std::invalid_argument("frechet_variance: need at least 2 samples");
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      const double x = d(idx[a], idx[b]);
      sum += x * x;
    }
  return sum / (static_cast<double>(k) * static_cast<double>(k - 1));
}

std::vector<std::size_t> medoid_indices(const DistanceMatrix& d) {
  const auto sums = d.row_sums();
  std::vector<std::size_t> out;
  if (sums.empty()) return out;
  const double best = *std::min_element(sums.begin(), sums.end());
  for (std::size_t i = 0; i < sums.size(); ++i)
    if (sums[i] == best) out.push_back(i);
  return out;
}

void write_distance_matrix(std::ostream& out, const DistanceMatrix& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j) out << '\t';
      out << format_double(d(i, j));
    }
    out << '\n';
  }
}

}  // namespace topess
