#include "topess/bootstrap_trace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "topess/ess_tree.hpp"
#include "topess/random.hpp"
#include "topess/stats.hpp"
#include "topess/tree_io.hpp"
#include "topess/treedist.hpp"

namespace topess {

namespace {

constexpr std::array<std::string_view, 3> kKindNames = {"asdsf", "tree_prob_euclidean", "consensus_rf"};

/// Samples as topology ids, each topology as split ids.
struct Encoded {
  std::vector<std::size_t> topo_of;
  std::vector<std::vector<std::size_t>> splits_of;
  std::vector<Split> split_by_id;
};

Encoded encode(const Chain& c) {
  Encoded e;
  std::unordered_map<Topology, std::size_t, TopologyHash> topo_ids;
  std::unordered_map<Split, std::size_t, SplitHash> split_ids;
  e.topo_of.reserve(c.size());
  for (const auto& t : c.samples) {
    auto [it, inserted] = topo_ids.try_emplace(t, topo_ids.size());
    if (inserted) {
      std::vector<std::size_t> ids;
      for (const auto& s : t.splits()) {
        auto [sit, fresh] = split_ids.try_emplace(s, split_ids.size());
        if (fresh) e.split_by_id.push_back(s);
        ids.push_back(sit->second);
      }
      e.splits_of.push_back(std::move(ids));
    }
    e.topo_of.push_back(it->second);
  }
  return e;
}

/// Topology and split frequencies of a multiset of sample indices.
struct Frequencies {
  std::vector<double> topo;
  std::vector<double> split;
};

Frequencies frequencies(const Encoded& e, const std::vector<std::size_t>& idx) {
  Frequencies f{std::vector<double>(e.splits_of.size(), 0.0), std::vector<double>(e.split_by_id.size(), 0.0)};
  for (auto i : idx) f.topo[e.topo_of[i]] += 1.0;
  const double n = static_cast<double>(idx.size());
  for (std::size_t t = 0; t < f.topo.size(); ++t) {
    if (f.topo[t] == 0.0) continue;
    for (auto s : e.splits_of[t]) f.split[s] += f.topo[t];
    f.topo[t] /= n;
  }
  for (auto& p : f.split) p /= n;
  return f;
}

double asdsf_distance(const Frequencies& a, const Frequencies& b) {
  // Population SD of two values is |x - y| / 2; averaged over splits seen in either.
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t s = 0; s < a.split.size(); ++s) {
    if (a.split[s] == 0.0 && b.split[s] == 0.0) continue;
    sum += std::abs(a.split[s] - b.split[s]) / 2.0;
    ++k;
  }
  return k ? sum / static_cast<double>(k) : 0.0;
}

double euclidean_distance(const Frequencies& a, const Frequencies& b) {
  double ss = 0.0;
  for (std::size_t t = 0; t < a.topo.size(); ++t) ss += (a.topo[t] - b.topo[t]) * (a.topo[t] - b.topo[t]);
  return std::sqrt(ss);
}

Topology consensus(const Encoded& e, const Frequencies& f, const TaxonMapPtr& taxa, double threshold) {
  std::map<Split, double> probs;
  for (std::size_t s = 0; s < f.split.size(); ++s)
    if (f.split[s] > threshold) probs.emplace(e.split_by_id[s], f.split[s]);
  return mrc_tree(probs, taxa, threshold);
}

}  // namespace

std::string_view trace_kind_name(TraceKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

TraceKind parse_trace_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<TraceKind>(i);
  throw std::invalid_argument("unknown trace kind '" + std::string(name) + "'");
}

std::vector<std::size_t> default_subsample_sizes(std::size_t n) {
  if (n < 4) throw std::invalid_argument("default_subsample_sizes: need at least 4 samples");
  const double lo = std::log(static_cast<double>(std::min<std::size_t>(100, n)));
  const double hi = std::log(static_cast<double>(n));
  std::vector<std::size_t> out;
  for (int k = 0; k < 10; ++k) {
    const auto v = static_cast<std::size_t>(std::llround(std::exp(lo + (hi - lo) * k / 9.0)));
    const auto s = std::clamp<std::size_t>(v, 4, n);
    if (out.empty() || s > out.back()) out.push_back(s);
  }
  out.back() = n;
  return out;
}

std::vector<TraceRow> block_bootstrap_trace(const Chain& c, const TraceOptions& opts) {
  const std::size_t n = c.size();
  const auto sizes = opts.subsample_sizes.empty() ? default_subsample_sizes(n) : opts.subsample_sizes;
  if (opts.replicates < 10) throw std::invalid_argument("block_bootstrap_trace: need at least 10 replicates");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 4) throw std::invalid_argument("block_bootstrap_trace: subsample size below 4");
    if (sizes[k] > n) throw std::invalid_argument("block_bootstrap_trace: subsample size exceeds chain length");
    if (k > 0 && sizes[k] <= sizes[k - 1]) throw std::invalid_argument("block_bootstrap_trace: sizes must increase");
  }
  if (opts.kind == TraceKind::ConsensusRf) {
    if (opts.consensus_thresholds.empty()) throw std::invalid_argument("block_bootstrap_trace: no consensus thresholds");
    for (double t : opts.consensus_thresholds)
      if (!(t >= 0.5 && t < 1.0)) throw std::invalid_argument("block_bootstrap_trace: threshold outside [0.5, 1)");
  }

  const auto enc = encode(c);
  std::vector<TraceRow> rows;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const std::size_t ni = sizes[k];
    const auto b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(ni))));
    const std::size_t a = ni / b;

    std::optional<double> sf_ess;
    if (ni >= 16) {
      Chain prefix{c.taxa, {c.samples.begin(), c.samples.begin() + static_cast<std::ptrdiff_t>(ni)}, std::nullopt};
      sf_ess = split_frequency_ess(prefix).value;
    }

    std::vector<std::size_t> ref_idx(a * b);
    for (std::size_t i = 0; i < ref_idx.size(); ++i) ref_idx[i] = i;
    const auto ref = frequencies(enc, ref_idx);

    const std::size_t n_thresh = opts.kind == TraceKind::ConsensusRf ? opts.consensus_thresholds.size() : 1;
    std::vector<Topology> ref_mrc;
    if (opts.kind == TraceKind::ConsensusRf)
      for (double t : opts.consensus_thresholds) ref_mrc.push_back(consensus(enc, ref, c.taxa, t));

    std::vector<std::vector<double>> disc(n_thresh, std::vector<double>(opts.replicates));
    Rng rng(derive_seed(opts.seed, k));
    std::uniform_int_distribution<std::size_t> start(0, ni - b);
    std::vector<std::size_t> idx(a * b);
    for (std::size_t r = 0; r < opts.replicates; ++r) {
      for (std::size_t blk = 0; blk < a; ++blk) {
        const std::size_t s0 = start(rng);
        for (std::size_t j = 0; j < b; ++j) idx[blk * b + j] = s0 + j;
      }
      const auto rep = frequencies(enc, idx);
      switch (opts.kind) {
        case TraceKind::Asdsf: disc[0][r] = asdsf_distance(rep, ref); break;
        case TraceKind::TreeProbEuclidean: disc[0][r] = euclidean_distance(rep, ref); break;
        case TraceKind::ConsensusRf:
          for (std::size_t t = 0; t < n_thresh; ++t)
            disc[t][r] = static_cast<double>(
                rf_distance(consensus(enc, rep, c.taxa, opts.consensus_thresholds[t]), ref_mrc[t]));
          break;
      }
    }
    for (std::size_t t = 0; t < n_thresh; ++t) {
      TraceRow row;
      row.n_i = ni;
      row.prefix_split_frequency_ess = sf_ess;
      row.kind = opts.kind;
      if (opts.kind == TraceKind::ConsensusRf) row.threshold = opts.consensus_thresholds[t];
      row.q05 = quantile(disc[t], 0.05);
      row.q50 = quantile(disc[t], 0.5);
      row.q95 = quantile(disc[t], 0.95);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_trace(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "n_i\tprefix_split_frequency_ess\tkind\tthreshold\tq05\tq50\tq95\n";
  for (const auto& r : rows) {
    out << r.n_i << '\t' << (r.prefix_split_frequency_ess ? format_double(*r.prefix_split_frequency_ess) : "NA")
        << '\t' << trace_kind_name(r.kind) << '\t' << (r.threshold ? format_double(*r.threshold) : "") << '\t'
        << format_double(r.q05) << '\t' << format_double(r.q50) << '\t' << format_double(r.q95) << '\n';
  }
}

}  // namespace topess
