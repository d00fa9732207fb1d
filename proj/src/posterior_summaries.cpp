#include "topess/posterior_summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "topess/errors.hpp"
#include "topess/tree_io.hpp"
#include "topess/treedist.hpp"

namespace topess {

double SplitProbabilities::prob(const Split& s) const {
  auto it = probs.find(s);
  return it == probs.end() ? 0.0 : it->second;
}

double TreeProbabilities::prob(const Topology& t) const {
  auto it = probs.find(t);
  return it == probs.end() ? 0.0 : it->second;
}

std::vector<std::pair<Topology, double>> TreeProbabilities::ranked() const {
  std::vector<std::pair<Topology, double>> out(probs.begin(), probs.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

SplitProbabilities split_probabilities(std::span<const Topology> samples, const TaxonMapPtr& taxa) {
  if (samples.empty()) throw std::invalid_argument("split_probabilities: empty chain");
  SplitProbabilities sp;
  sp.taxa = taxa;
  sp.n = samples.size();
  for (const auto& t : samples)
    for (const auto& s : t.splits()) ++sp.counts[s];
  for (const auto& [s, k] : sp.counts) sp.probs.emplace(s, static_cast<double>(k) / static_cast<double>(sp.n));
  return sp;
}

SplitProbabilities split_probabilities(const Chain& c) { return split_probabilities(c.samples, c.taxa); }

TreeProbabilities tree_probabilities(std::span<const Topology> samples, const TaxonMapPtr& taxa) {
  if (samples.empty()) throw std::invalid_argument("tree_probabilities: empty chain");
  TreeProbabilities tp;
  tp.taxa = taxa;
  tp.n = samples.size();
  for (const auto& t : samples) ++tp.counts[t];
  for (const auto& [t, k] : tp.counts) tp.probs.emplace(t, static_cast<double>(k) / static_cast<double>(tp.n));
  return tp;
}

TreeProbabilities tree_probabilities(const Chain& c) { return tree_probabilities(c.samples, c.taxa); }

SplitSpread asdsf_msdsf(std::span<const SplitProbabilities> per_chain, double min_freq) {
  if (per_chain.size() < 2) throw std::invalid_argument("asdsf_msdsf: need at least 2 chains");
  for (const auto& sp : per_chain)
    if (!same_taxa(sp.taxa, per_chain.front().taxa)) throw DataError("asdsf_msdsf: chains have different taxa");

  std::map<Split, bool> keep;
  for (const auto& sp : per_chain)
    for (const auto& [s, p] : sp.probs) {
      auto& k = keep[s];
      k = k || p >= min_freq;
    }
  SplitSpread out;
  std::size_t used = 0;
  std::vector<double> f(per_chain.size());
  for (const auto& [s, k] : keep) {
    if (!k) continue;
    for (std::size_t i = 0; i < per_chain.size(); ++i) f[i] = per_chain[i].prob(s);
    const double sd = se_scalar(f);
    out.asdsf += sd;
    out.msdsf = std::max(out.msdsf, sd);
    ++used;
  }
  if (used > 0) out.asdsf /= static_cast<double>(used);
  return out;
}

SplitSpread asdsf_msdsf(std::span<const Chain> chains, double min_freq) {
  std::vector<SplitProbabilities> per_chain;
  per_chain.reserve(chains.size());
  for (const auto& c : chains) per_chain.push_back(split_probabilities(c));
  return asdsf_msdsf(per_chain, min_freq);
}

double se_scalar(std::span<const double> estimates) {
  const std::size_t m = estimates.size();
  if (m < 2) throw std::invalid_argument("se_scalar: need at least 2 estimates");
  // Shifted by the first estimate so that equal inputs give exactly 0.
  const double pivot = estimates.front();
  double mean = 0.0;
  for (double x : estimates) mean += x - pivot;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double x : estimates) ss += (x - pivot - mean) * (x - pivot - mean);
  return std::sqrt(ss / static_cast<double>(m));
}

double frechet_se_mrc(std::span<const Topology> per_run_mrc, const Topology& pooled_mrc) {
  const std::size_t m = per_run_mrc.size();
  if (m < 2) throw std::invalid_argument("frechet_se_mrc: need at least 2 runs");
  double ss = 0.0;
  for (const auto& t : per_run_mrc) {
    const auto d = static_cast<double>(rf_distance(t, pooled_mrc));
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(m));
}

ErrorComparison compare_errors(double se_mcmc, double se_mcess) {
  if (!(se_mcmc >= 0.0) || !(se_mcess >= 0.0)) throw std::invalid_argument("compare_errors: SEs must be non-negative");
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ErrorComparison e{se_mcmc, se_mcess, 0.0, 1.0, false};
  if (se_mcmc == 0.0 && se_mcess == 0.0) {
    e.rmce = nan;
    e.itmce = nan;
    e.degenerate = true;
  } else if (se_mcmc == 0.0) {
    e.rmce = -inf;
    e.itmce = 0.0;
    e.degenerate = true;
  } else if (se_mcess == 0.0) {
    e.rmce = 1.0;
    e.itmce = inf;
    e.degenerate = true;
  } else {
    e.rmce = (se_mcmc - se_mcess) / se_mcmc;
    e.itmce = se_mcmc / se_mcess;
  }
  return e;
}

void write_split_summary(std::ostream& out, const SplitProbabilities& sp) {
  std::vector<std::pair<std::string, const Split*>> rows;
  for (const auto& [s, p] : sp.probs) rows.emplace_back(split_label(s, *sp.taxa), &s);
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    const double pa = sp.probs.at(*a.second), pb = sp.probs.at(*b.second);
    return pa != pb ? pa > pb : a.first < b.first;
  });
  out << "split_id\tprobability\tcount\n";
  for (const auto& [label, s] : rows)
    out << label << '\t' << format_double(sp.probs.at(*s)) << '\t' << sp.counts.at(*s) << '\n';
}

void write_tree_summary(std::ostream& out, const TreeProbabilities& tp) {
  out << "newick\tprobability\tcount\n";
  for (const auto& [t, p] : tp.ranked()) out << serialize_newick(t) << '\t' << format_double(p) << '\t' << tp.counts.at(t) << '\n';
}

}  // namespace topess
