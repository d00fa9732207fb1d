#include "support.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "topess/random.hpp"

#ifndef TOPESS_DATA_DIR
#error "TOPESS_DATA_DIR must be defined"
#endif

namespace topess::testing {

std::vector<std::string> taxon_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%02zu", i);
    out.emplace_back(buf);
  }
  return out;
}

namespace {

std::uint64_t full_mask(std::size_t n) { return n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

std::uint64_t canonical(std::uint64_t m, std::size_t n) { return (m & 1u) ? (~m & full_mask(n)) : m; }

bool nontrivial(std::uint64_t m, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::popcount(m));
  return k >= 2 && n - k >= 2;
}

bool compatible_masks(std::uint64_t a, std::uint64_t b) { return (a & b) == 0 || (a & b) == a || (a & b) == b; }

}  // namespace

RandomTree random_binary_tree(std::size_t n, std::mt19937_64& rng) {
  if (n < 3 || n > 64) throw std::invalid_argument("random_binary_tree: n outside [3, 64]");
  const auto labels = taxon_labels(n);
  std::vector<std::pair<std::string, std::uint64_t>> parts;
  for (std::size_t i = 0; i < n; ++i) parts.emplace_back(labels[i], std::uint64_t{1} << i);
  RandomTree t;
  while (parts.size() > 3) {
    std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    if (i > j) std::swap(i, j);
    auto joined = std::make_pair("(" + parts[i].first + "," + parts[j].first + ")", parts[i].second | parts[j].second);
    const auto c = canonical(joined.second, n);
    if (nontrivial(c, n)) t.splits.insert(c);
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(j));
    parts[i] = std::move(joined);
  }
  std::shuffle(parts.begin(), parts.end(), rng);
  t.newick = "(" + parts[0].first + "," + parts[1].first + "," + parts[2].first + ");";
  return t;
}

std::size_t brute_force_rf(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b, std::size_t n) {
  std::size_t d = 0;
  // Canonical masks are exactly the subsets that exclude taxon 0.
  for (std::uint64_t m = 2; m <= full_mask(n); m += 2) {
    if (!nontrivial(m, n)) continue;
    if (a.count(m) != b.count(m)) ++d;
  }
  return d;
}

std::vector<std::set<std::uint64_t>> all_binary_split_sets(std::size_t n) {
  if (n < 4 || n > 8) throw std::invalid_argument("all_binary_split_sets: n outside [4, 8]");
  std::vector<std::uint64_t> candidates;
  for (std::uint64_t m = 2; m <= full_mask(n); m += 2)
    if (nontrivial(m, n)) candidates.push_back(m);
  std::vector<std::set<std::uint64_t>> out;
  std::vector<std::uint64_t> chosen;
  const std::size_t want = n - 3;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    if (chosen.size() == want) {
      out.emplace_back(chosen.begin(), chosen.end());
      return;
    }
    for (std::size_t k = from; k < candidates.size(); ++k) {
      if (!std::all_of(chosen.begin(), chosen.end(), [&](auto c) { return compatible_masks(c, candidates[k]); })) continue;
      chosen.push_back(candidates[k]);
      self(self, k + 1);
      chosen.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

Topology topology_from_masks(const TaxonMapPtr& taxa, const std::set<std::uint64_t>& masks) {
  std::vector<Split> splits;
  for (auto m : masks) splits.emplace_back(std::vector<std::uint64_t>{m}, taxa->size());
  return Topology(taxa, std::move(splits));
}

std::set<std::uint64_t> masks_of(const Topology& t) {
  std::set<std::uint64_t> out;
  for (const auto& s : t.splits()) out.insert(s.words().at(0));
  return out;
}

ChainTrace naive_chain(const CategoricalTreeDistribution& target, std::size_t iterations, std::size_t thin,
                       std::uint64_t seed) {
  // Full neighbor lists, with out-of-support entries marked as SIZE_MAX.
  std::vector<std::vector<std::size_t>> full(target.size());
  for (std::size_t i = 0; i < target.size(); ++i)
    for (const auto& nb : nni_neighbors(target.topology(i))) full[i].push_back(target.index_of(nb).value_or(SIZE_MAX));

  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ChainTrace trace;
  trace.iterations = iterations;
  std::size_t state = target.inverse_cdf(unif(rng));
  for (std::size_t it = 1; it <= iterations; ++it) {
    std::uniform_int_distribution<std::size_t> pick(0, full[state].size() - 1);
    const std::size_t next = full[state][pick(rng)];
    if (next != SIZE_MAX) {
      ++trace.in_support_proposals;
      const double ratio = target.probs()[next] / target.probs()[state];
      if (unif(rng) < std::min(1.0, ratio)) {
        state = next;
        ++trace.accepted;
      }
    }
    if (it % thin == 0) trace.states.push_back(state);
  }
  return trace;
}

std::vector<double> state_frequencies(const std::vector<std::size_t>& states, std::size_t support) {
  std::vector<double> f(support, 0.0);
  for (auto s : states) f.at(s) += 1.0;
  for (auto& x : f) x /= static_cast<double>(states.size());
  return f;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q.at(i));
  return 0.5 * s;
}

CategoricalTreeDistribution six_taxon_target() {
  return build_target(read_target_table(std::filesystem::path(TOPESS_DATA_DIR) / "six_taxon_target.tsv"), 1.0, 4096);
}

CategoricalTreeDistribution four_taxon_target(const std::vector<double>& probs) {
  auto taxa = make_taxon_map({"A", "B", "C", "D"});
  std::vector<Topology> support = {parse_newick("((A,B),(C,D));", taxa), parse_newick("((A,C),(B,D));", taxa),
                                   parse_newick("((A,D),(B,C));", taxa)};
  if (probs.size() > support.size()) throw std::invalid_argument("four_taxon_target: at most 3 topologies");
  support.erase(support.begin() + static_cast<std::ptrdiff_t>(probs.size()), support.end());
  return CategoricalTreeDistribution(taxa, support, probs);
}

std::vector<double> ar1_series(std::size_t n, double phi, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(n);
  double v = z(rng) / std::sqrt(1.0 - phi * phi);
  for (auto& xi : x) {
    xi = v;
    v = phi * v + z(rng);
  }
  return x;
}

}  // namespace topess::testing
