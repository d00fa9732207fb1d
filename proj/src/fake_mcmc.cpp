#include "topess/fake_mcmc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>

#include "topess/errors.hpp"
#include "topess/posterior_summaries.hpp"
#include "topess/random.hpp"
#include "topess/tree_io.hpp"

namespace topess {

namespace {

using Mask = std::vector<std::uint64_t>;

bool strict_subset(const Mask& a, const Mask& b) {
  bool proper = false;
  for (std::size_t w = 0; w < a.size(); ++w) {
    if (a[w] & ~b[w]) return false;
    if (a[w] != b[w]) proper = true;
  }
  return proper;
}

Mask mask_or(const Mask& a, const Mask& b) {
  Mask out(a.size());
  for (std::size_t w = 0; w < a.size(); ++w) out[w] = a[w] | b[w];
  return out;
}

Mask mask_minus(const Mask& a, const Mask& b) {
  Mask out(a.size());
  for (std::size_t w = 0; w < a.size(); ++w) out[w] = a[w] & ~b[w];
  return out;
}

}  // namespace

std::vector<Topology> nni_neighbors(const Topology& t) {
  if (!t.is_binary()) throw std::invalid_argument("nni_neighbors: topology is not fully resolved");
  const std::size_t n = t.n_taxa();
  const auto splits = t.splits();
  const std::size_t k = splits.size();

  // Rooted at taxon 0, each split is the cluster below its edge. The root
  // cluster is every taxon except 0 and has index k.
  Mask root(t.taxa().words(), 0);
  for (std::size_t i = 1; i < n; ++i) root[i / 64] |= std::uint64_t{1} << (i % 64);
  std::vector<const Mask*> cluster(k + 1);
  for (std::size_t i = 0; i < k; ++i) cluster[i] = &splits[i].words();
  cluster[k] = &root;

  std::vector<std::size_t> parent(k, k);
  std::vector<std::size_t> size(k + 1);
  for (std::size_t i = 0; i < k; ++i) size[i] = splits[i].count();
  size[k] = n - 1;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j && size[j] > size[i] && size[j] < size[parent[i]] && strict_subset(*cluster[i], *cluster[j]))
        parent[i] = j;

  // Children of each cluster as masks: child splits plus directly attached leaves.
  std::vector<std::vector<Mask>> children(k + 1);
  for (std::size_t i = 0; i < k; ++i) children[parent[i]].push_back(*cluster[i]);
  for (std::size_t leaf = 1; leaf < n; ++leaf) {
    std::size_t home = k;
    for (std::size_t j = 0; j < k; ++j)
      if (splits[j].test(leaf) && size[j] < size[home]) home = j;
    Mask m(root.size(), 0);
    m[leaf / 64] |= std::uint64_t{1} << (leaf % 64);
    children[home].push_back(std::move(m));
  }

  std::vector<Topology> out;
  out.reserve(2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    if (children[i].size() != 2) throw std::logic_error("nni_neighbors: internal node is not binary");
    const Mask sibling = mask_minus(*cluster[parent[i]], *cluster[i]);
    for (const auto& keep : children[i]) {
      std::vector<Split> next(splits.begin(), splits.end());
      next[i] = Split(mask_or(keep, sibling), n);
      out.push_back(Topology::trusted(t.taxa_ptr(), std::move(next)));
    }
  }
  return out;
}

CategoricalTreeDistribution::CategoricalTreeDistribution(TaxonMapPtr taxa, std::vector<Topology> support,
                                                         std::vector<double> probs)
    : taxa_(std::move(taxa)), support_(std::move(support)), probs_(std::move(probs)) {
  if (!taxa_) throw std::invalid_argument("target requires a taxon map");
  if (support_.empty()) throw DataError("target support is empty");
  if (support_.size() != probs_.size()) throw std::invalid_argument("target support and probabilities differ in length");
  if (taxa_->size() < 4) throw DataError("target needs at least 4 taxa");
  degree_ = 2 * (taxa_->size() - 3);
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!same_taxa(support_[i].taxa_ptr(), taxa_)) throw DataError("target topology has a different taxon set");
    if (!support_[i].is_binary()) throw DataError("target topology is not fully resolved");
    if (!(probs_[i] > 0.0) || !std::isfinite(probs_[i])) throw DataError("target probabilities must be positive");
    if (!index_.emplace(support_[i], i).second) throw DataError("duplicate topology in target");
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > 1e-6) throw DataError("target probabilities do not sum to 1");
  for (auto& p : probs_) p /= total;

  log_probs_.resize(probs_.size());
  cdf_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    log_probs_[i] = std::log(probs_[i]);
    acc += probs_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;

  neighbors_.resize(support_.size());
  for (std::size_t i = 0; i < support_.size(); ++i) {
    for (const auto& nb : nni_neighbors(support_[i]))
      if (auto j = index_of(nb)) neighbors_[i].push_back(*j);
    std::sort(neighbors_[i].begin(), neighbors_[i].end());
  }

  std::vector<bool> seen(support_.size(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : neighbors_[v])
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        q.push(w);
      }
  }
  if (reached != support_.size()) throw DataError("target support is not NNI-connected");
}

std::optional<std::size_t> CategoricalTreeDistribution::index_of(const Topology& t) const {
  auto it = index_.find(t);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t CategoricalTreeDistribution::inverse_cdf(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

CategoricalTreeDistribution build_target(const TargetTable& table, double hpd_mass, std::size_t max_support) {
  if (table.empty()) throw DataError("build_target: empty input");
  if (!(hpd_mass > 0.0 && hpd_mass <= 1.0)) throw std::invalid_argument("build_target: hpd_mass outside (0, 1]");
  if (max_support == 0) throw std::invalid_argument("build_target: max_support must be positive");
  const auto taxa = table.front().first.taxa_ptr();
  double total = 0.0;
  for (const auto& [t, p] : table) {
    if (!same_taxa(t.taxa_ptr(), taxa)) throw DataError("build_target: mixed taxon sets");
    if (!(p >= 0.0) || !std::isfinite(p)) throw DataError("build_target: invalid probability");
    total += p;
  }
  if (!(total > 0.0)) throw DataError("build_target: zero total probability");

  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return table[a].second > table[b].second; });

  std::vector<std::size_t> kept;
  double mass = 0.0;
  for (auto i : order) {
    if (kept.size() >= max_support || mass >= hpd_mass * total * (1.0 - 1e-12)) break;
    if (!(table[i].second > 0.0)) break;
    kept.push_back(i);
    mass += table[i].second;
  }
  for (auto i : kept)
    if (!table[i].first.is_binary()) throw DataError("build_target: topology in support is not fully resolved");

  std::unordered_map<Topology, std::size_t, TopologyHash> pos;
  for (std::size_t r = 0; r < kept.size(); ++r)
    if (!pos.emplace(table[kept[r]].first, r).second) throw DataError("build_target: duplicate topology in input");

  std::vector<std::vector<std::size_t>> adj(kept.size());
  for (std::size_t r = 0; r < kept.size(); ++r)
    for (const auto& nb : nni_neighbors(table[kept[r]].first))
      if (auto it = pos.find(nb); it != pos.end()) adj[r].push_back(it->second);

  // Components in order of lowest retained rank.
  std::vector<std::size_t> comp(kept.size(), SIZE_MAX);
  std::vector<std::size_t> comp_size;
  std::vector<double> comp_mass;
  for (std::size_t s = 0; s < kept.size(); ++s) {
    if (comp[s] != SIZE_MAX) continue;
    const std::size_t c = comp_size.size();
    comp_size.push_back(0);
    comp_mass.push_back(0.0);
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = c;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      ++comp_size[c];
      comp_mass[c] += table[kept[v]].second;
      for (auto w : adj[v])
        if (comp[w] == SIZE_MAX) {
          comp[w] = c;
          q.push(w);
        }
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < comp_size.size(); ++c)
    if (comp_size[c] > comp_size[best] || (comp_size[c] == comp_size[best] && comp_mass[c] > comp_mass[best])) best = c;

  std::vector<Topology> support;
  std::vector<double> probs;
  for (std::size_t r = 0; r < kept.size(); ++r)
    if (comp[r] == best) {
      support.push_back(table[kept[r]].first);
      probs.push_back(table[kept[r]].second / comp_mass[best]);
    }
  return CategoricalTreeDistribution(taxa, std::move(support), std::move(probs));
}

CategoricalTreeDistribution build_target(const Chain& sample, double hpd_mass, std::size_t max_support) {
  const auto tp = tree_probabilities(sample);
  // Ranked order keeps equal-probability ties deterministic.
  return build_target(tp.ranked(), hpd_mass, max_support);
}

TargetTable read_target_table(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  TaxonMapPtr taxa;
  TargetTable table;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError("target line " + std::to_string(lineno) + ": expected two tab-separated columns");
    const std::string_view left(line.data(), tab), right(line.data() + tab + 1, line.size() - tab - 1);
    if (!header) {
      if (left != "newick" || right != "probability")
        throw ParseError("target header must be 'newick<TAB>probability'");
      header = true;
      continue;
    }
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(right.data(), right.data() + right.size(), p);
    if (ec != std::errc() || ptr != right.data() + right.size())
      throw ParseError("target line " + std::to_string(lineno) + ": bad probability");
    try {
      auto t = parse_newick(left, taxa);
      if (!taxa) taxa = t.taxa_ptr();
      table.emplace_back(std::move(t), p);
    } catch (const Error& e) {
      throw ParseError("target line " + std::to_string(lineno) + ": " + e.what());
    }
    total += p;
  }
  if (table.empty()) throw DataError("target file has no entries");
  if (std::abs(total - 1.0) > 1e-6) throw DataError("target probabilities sum to " + format_double(total) + ", not 1");
  for (auto& [t, p] : table) p /= total;
  return table;
}

TargetTable read_target_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_target_table(in);
}

void write_target(std::ostream& out, const CategoricalTreeDistribution& target) {
  out << "newick\tprobability\n";
  for (std::size_t i = 0; i < target.size(); ++i)
    out << serialize_newick(target.topology(i)) << '\t' << format_double(target.probs()[i]) << '\n';
}

ChainTrace run_chain_trace(const CategoricalTreeDistribution& target, std::size_t iterations, std::size_t thin,
                           std::uint64_t seed) {
  if (thin < 1 || iterations < thin) throw std::invalid_argument("run_chain: need iterations >= thin >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto degree = static_cast<double>(target.total_nni_degree());
  const auto& probs = target.probs();

  ChainTrace trace;
  trace.iterations = iterations;
  trace.states.reserve(iterations / thin);
  std::size_t state = target.inverse_cdf(unif(rng));
  for (std::size_t it = 1; it <= iterations; ++it) {
    const auto& nb = target.neighbors(state);
    if (unif(rng) < static_cast<double>(nb.size()) / degree) {
      ++trace.in_support_proposals;
      std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
      const std::size_t next = nb[pick(rng)];
      const double ratio = probs[next] / probs[state];
      if (ratio >= 1.0 || unif(rng) < ratio) {
        state = next;
        ++trace.accepted;
      }
    }
    if (it % thin == 0) trace.states.push_back(state);
  }
  return trace;
}

Chain chain_from_indices(const CategoricalTreeDistribution& target, std::span<const std::size_t> idx) {
  Chain c;
  c.taxa = target.taxa();
  c.samples.reserve(idx.size());
  std::vector<double> lp;
  lp.reserve(idx.size());
  for (auto i : idx) {
    c.samples.push_back(target.topology(i));
    lp.push_back(target.log_prob(i));
  }
  c.log_density = std::move(lp);
  return c;
}

Chain run_chain(const CategoricalTreeDistribution& target, std::size_t iterations, std::size_t thin,
                std::uint64_t seed) {
  const auto trace = run_chain_trace(target, iterations, thin, seed);
  return chain_from_indices(target, trace.states);
}

std::vector<std::size_t> iid_indices(const CategoricalTreeDistribution& target, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("iid_sample: k must be at least 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::size_t> out(k);
  for (auto& i : out) i = target.inverse_cdf(unif(rng));
  return out;
}

Chain iid_sample(const CategoricalTreeDistribution& target, std::size_t k, std::uint64_t seed) {
  const auto idx = iid_indices(target, k, seed);
  return chain_from_indices(target, idx);
}

}  // namespace topess
