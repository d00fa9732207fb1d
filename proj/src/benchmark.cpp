#include "topess/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "topess/errors.hpp"
#include "topess/random.hpp"
#include "topess/stats.hpp"
#include "topess/tree_io.hpp"
#include "topess/treedist.hpp"

namespace topess {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<std::string_view, 3> kKindNames = {"split", "tree", "mrc"};

/// Split probabilities of the concatenation of all chains.
SplitProbabilities pooled_split_probabilities(std::span<const Chain> chains) {
  SplitProbabilities pooled;
  pooled.taxa = chains.front().taxa;
  for (const auto& c : chains) {
    const auto sp = split_probabilities(c);
    for (const auto& [s, k] : sp.counts) pooled.counts[s] += k;
    pooled.n += c.size();
  }
  for (const auto& [s, k] : pooled.counts)
    pooled.probs.emplace(s, static_cast<double>(k) / static_cast<double>(pooled.n));
  return pooled;
}

void check_chains(std::span<const Chain> chains) {
  if (chains.size() < 2) throw std::invalid_argument("need at least 2 chains");
  for (const auto& c : chains) {
    if (c.samples.empty()) throw std::invalid_argument("empty chain");
    if (!same_taxa(c.taxa, chains.front().taxa)) throw DataError("chains have different taxa");
  }
}

}  // namespace

std::string_view summary_kind_name(SummaryKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

NamedEstimator method_estimator(TreeEssMethod m) {
  return {std::string(method_name(m)),
          [m](const Chain& c, const DistanceMatrix* d, std::uint64_t seed) { return estimate_ess(m, c, d, seed).value; },
          needs_distance_matrix(m)};
}

SummaryItems select_items(std::span<const Chain> chains, double min_split_prob, std::size_t max_trees) {
  check_chains(chains);
  SummaryItems items;
  items.taxa = chains.front().taxa;
  const auto sp = pooled_split_probabilities(chains);
  for (const auto& [s, p] : sp.probs)
    if (p >= min_split_prob) {
      items.splits.push_back(s);
      items.split_probs.push_back(p);
    }

  std::map<Topology, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& c : chains) {
    for (const auto& t : c.samples) ++counts[t];
    total += c.size();
  }
  std::vector<std::pair<Topology, double>> ranked;
  for (const auto& [t, k] : counts) ranked.emplace_back(t, static_cast<double>(k) / static_cast<double>(total));
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_trees) ranked.erase(ranked.begin() + static_cast<std::ptrdiff_t>(max_trees), ranked.end());
  for (auto& [t, p] : ranked) {
    items.trees.push_back(t);
    items.tree_probs.push_back(p);
  }
  return items;
}

ItemErrors brute_force_errors(std::span<const Chain> chains, const SummaryItems& items) {
  check_chains(chains);
  const std::size_t m = chains.size();
  std::vector<std::vector<double>> split_est(items.splits.size(), std::vector<double>(m));
  std::vector<std::vector<double>> tree_est(items.trees.size(), std::vector<double>(m));
  std::vector<Topology> mrcs;
  mrcs.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto sp = split_probabilities(chains[i]);
    const auto tp = tree_probabilities(chains[i]);
    for (std::size_t k = 0; k < items.splits.size(); ++k) split_est[k][i] = sp.prob(items.splits[k]);
    for (std::size_t k = 0; k < items.trees.size(); ++k) tree_est[k][i] = tp.prob(items.trees[k]);
    mrcs.push_back(mrc_tree(sp.probs, chains[i].taxa));
  }
  ItemErrors out;
  for (const auto& e : split_est) out.split_se.push_back(se_scalar(e));
  for (const auto& e : tree_est) out.tree_se.push_back(se_scalar(e));
  const auto pooled = mrc_tree(pooled_split_probabilities(chains).probs, chains.front().taxa);
  out.mrc_se = frechet_se_mrc(mrcs, pooled);
  return out;
}

ItemErrors nruns_bruteforce(std::span<const Chain> subset, const SummaryItems& items) {
  return brute_force_errors(subset, items);
}

namespace {

void append_records(BenchmarkReport& report, const std::string& method, const SummaryItems& items,
                    const ItemErrors& mcmc, const ItemErrors& other, double mean_ess) {
  for (std::size_t k = 0; k < items.splits.size(); ++k)
    report.records.push_back({method, SummaryKind::Split, split_label(items.splits[k], *items.taxa),
                              items.split_probs[k], compare_errors(mcmc.split_se[k], other.split_se[k]), mean_ess});
  for (std::size_t k = 0; k < items.trees.size(); ++k)
    report.records.push_back({method, SummaryKind::Tree, serialize_newick(items.trees[k]), items.tree_probs[k],
                              compare_errors(mcmc.tree_se[k], other.tree_se[k]), mean_ess});
  report.records.push_back({method, SummaryKind::Mrc, "mrc", kNaN, compare_errors(mcmc.mrc_se, other.mrc_se), mean_ess});
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
  if (!cfg.target) throw std::invalid_argument("run_benchmark: no target");
  if (cfg.m < 2) throw std::invalid_argument("run_benchmark: m must be at least 2");
  if (cfg.thin < 1 || cfg.iterations < cfg.thin) throw std::invalid_argument("run_benchmark: need iterations >= thin >= 1");
  const std::size_t kept = cfg.iterations / cfg.thin;
  if (kept < 16) throw std::invalid_argument("run_benchmark: fewer than 16 kept samples per chain");
  for (auto k : cfg.nruns)
    if (k < 2 || k > cfg.m) throw std::invalid_argument("run_benchmark: nRuns subset size outside [2, m]");
  for (std::size_t k = 0; k < cfg.methods.size(); ++k)
    for (std::size_t j = 0; j < k; ++j)
      if (cfg.methods[j].name == cfg.methods[k].name) throw std::invalid_argument("run_benchmark: duplicate method name");
  const auto& target = *cfg.target;

  // Seed streams: [0, m) chains; then two per method (estimator, iid draws); then nRuns subsets.
  std::vector<Chain> chains;
  chains.reserve(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    const auto s = derive_seed(cfg.seed, i);
    chains.push_back(cfg.iid_chains ? iid_sample(target, kept, s) : run_chain(target, cfg.iterations, cfg.thin, s));
  }
  const auto items = select_items(chains, cfg.min_split_prob, cfg.max_trees);
  const auto mcmc = brute_force_errors(chains, items);

  BenchmarkReport report;
  report.iterations = cfg.iterations;
  report.kept = kept;
  report.m = cfg.m;

  const std::size_t n_methods = cfg.methods.size();
  std::vector<std::vector<std::size_t>> draw_size(n_methods, std::vector<std::size_t>(cfg.m));
  const bool any_distances =
      std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const auto& e) { return e.needs_distances; });
  for (std::size_t i = 0; i < cfg.m; ++i) {
    DistanceMatrix d;
    if (any_distances) d = distance_matrix(chains[i]);
    for (std::size_t k = 0; k < n_methods; ++k) {
      const auto& est = cfg.methods[k];
      const double ess = est.ess(chains[i], est.needs_distances ? &d : nullptr,
                                 derive_seed(derive_seed(cfg.seed, cfg.m + 2 * k), i));
      report.chain_ess[est.name].push_back(ess);
      draw_size[k][i] = static_cast<std::size_t>(std::max(1.0, std::round(ess)));
    }
  }

  for (std::size_t k = 0; k < n_methods; ++k) {
    const auto& name = cfg.methods[k].name;
    std::vector<Chain> draws;
    draws.reserve(cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i)
      draws.push_back(iid_sample(target, draw_size[k][i], derive_seed(derive_seed(cfg.seed, cfg.m + 2 * k + 1), i)));
    const auto mcess = brute_force_errors(draws, items);
    append_records(report, name, items, mcmc, mcess, mean(report.chain_ess[name]));
  }

  for (std::size_t r = 0; r < cfg.nruns.size(); ++r) {
    const std::size_t k = cfg.nruns[r];
    std::vector<std::size_t> order(cfg.m);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, cfg.m + 2 * n_methods + r));
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(k);
    std::sort(order.begin(), order.end());
    std::vector<Chain> subset;
    for (auto i : order) subset.push_back(chains[i]);
    append_records(report, "nRuns" + std::to_string(k), items, mcmc, nruns_bruteforce(subset, items), kNaN);
  }
  return report;
}

double binning_ess(const BenchmarkRecord& r, const BenchmarkReport& report) {
  if (r.method == method_name(TreeEssMethod::FixedN)) return static_cast<double>(report.iterations);
  return r.mean_ess;
}

void write_benchmark_report(std::ostream& out, const BenchmarkReport& report) {
  out << "method\tsummary_kind\titem_id\titem_prob\tse_mcmc\tse_mcess\trmce\titmce\tmean_ess\n";
  for (const auto& r : report.records)
    out << r.method << '\t' << summary_kind_name(r.kind) << '\t' << r.item_id << '\t' << format_double(r.item_prob)
        << '\t' << format_double(r.cmp.se_mcmc) << '\t' << format_double(r.cmp.se_mcess) << '\t'
        << format_double(r.cmp.rmce) << '\t' << format_double(r.cmp.itmce) << '\t' << format_double(r.mean_ess)
        << '\n';
}

void write_benchmark_metadata(std::ostream& out, const BenchmarkReport& report) {
  out << "key\tvalue\n";
  out << "iterations\t" << report.iterations << '\n';
  out << "kept_samples\t" << report.kept << '\n';
  out << "chains\t" << report.m << '\n';
  out << "fixedN_binning\titerations\n";
  for (const auto& [name, values] : report.chain_ess)
    for (std::size_t i = 0; i < values.size(); ++i)
      out << "ess." << name << '.' << i << '\t' << format_double(values[i]) << '\n';
}

std::vector<NormalCalibrationRow> run_normal_calibration(const NormalCalibrationConfig& cfg) {
  if (cfg.n_lengths < 1 || cfg.kept < 16 || cfg.m < 2 || cfg.min_iterations < cfg.kept ||
      cfg.max_iterations < cfg.min_iterations || !(cfg.proposal_sd > 0.0))
    throw std::invalid_argument("run_normal_calibration: invalid configuration");

  std::vector<NormalCalibrationRow> rows;
  const double lo = std::log(static_cast<double>(cfg.min_iterations));
  const double hi = std::log(static_cast<double>(cfg.max_iterations));
  for (std::size_t l = 0; l < cfg.n_lengths; ++l) {
    const double t = cfg.n_lengths == 1 ? 0.0 : static_cast<double>(l) / static_cast<double>(cfg.n_lengths - 1);
    const double target_len = std::exp(lo + (hi - lo) * t);
    const auto thin = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(target_len / static_cast<double>(cfg.kept))));
    NormalCalibrationRow row;
    row.iterations = thin * cfg.kept;
    row.thin = thin;

    std::vector<double> mcmc_means(cfg.m), iid_means(cfg.m), ess(cfg.m);
    Rng length_rng(derive_seed(cfg.seed, l));
    const auto length_seed = length_rng();
    std::vector<double> x(cfg.kept);
    for (std::size_t i = 0; i < cfg.m; ++i) {
      Rng rng(derive_seed(length_seed, 2 * i));
      // Distributions are per engine: normal_distribution caches a second draw.
      std::normal_distribution<double> std_normal(0.0, 1.0);
      std::normal_distribution<double> step(0.0, cfg.proposal_sd);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double state = std_normal(rng);
      for (std::size_t k = 0; k < cfg.kept; ++k) {
        for (std::size_t it = 0; it < thin; ++it) {
          const double prop = state + step(rng);
          const double log_ratio = 0.5 * (state * state - prop * prop);
          if (log_ratio >= 0.0 || unif(rng) < std::exp(log_ratio)) state = prop;
        }
        x[k] = state;
      }
      mcmc_means[i] = mean(x);
      ess[i] = ar_spectrum_ess(x).value;

      Rng iid_rng(derive_seed(length_seed, 2 * i + 1));
      std::normal_distribution<double> iid_normal(0.0, 1.0);
      const auto k = static_cast<std::size_t>(std::max(1.0, std::round(ess[i])));
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += iid_normal(iid_rng);
      iid_means[i] = s / static_cast<double>(k);
    }
    row.mean_ess = mean(ess);
    row.cmp = compare_errors(se_scalar(mcmc_means), se_scalar(iid_means));
    rows.push_back(row);
  }
  return rows;
}

void write_normal_calibration(std::ostream& out, const std::vector<NormalCalibrationRow>& rows) {
  out << "iterations\tthin\tse_mcmc\tse_mcess\trmce\titmce\tmean_ess\n";
  for (const auto& r : rows)
    out << r.iterations << '\t' << r.thin << '\t' << format_double(r.cmp.se_mcmc) << '\t'
        << format_double(r.cmp.se_mcess) << '\t' << format_double(r.cmp.rmce) << '\t' << format_double(r.cmp.itmce)
        << '\t' << format_double(r.mean_ess) << '\n';
}

}  // namespace topess
