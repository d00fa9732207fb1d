#include "topess/intervals.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "topess/errors.hpp"
#include "topess/random.hpp"
#include "topess/stats.hpp"
#include "topess/tree_io.hpp"
#include "topess/treedist.hpp"

namespace topess {

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
}

void check_inputs(double p, double ess) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  if (!(ess >= 1.0) || !std::isfinite(ess)) throw std::invalid_argument("ESS must be a finite value >= 1");
}

}  // namespace

Interval jeffreys_ci(double p_hat, double ess, double level) {
  check_level(level);
  check_inputs(p_hat, ess);
  const double x = p_hat * ess;
  const double a = x + 0.5, b = ess - x + 0.5;
  const double tail = (1.0 - level) / 2.0;
  Interval ci;
  ci.lower = p_hat == 0.0 ? 0.0 : boost::math::ibeta_inv(a, b, tail);
  ci.upper = p_hat == 1.0 ? 1.0 : boost::math::ibeta_inv(a, b, 1.0 - tail);
  return ci;
}

Interval agresti_caffo_diff_ci(double p1, double ess1, double p2, double ess2, double level) {
  check_level(level);
  check_inputs(p1, ess1);
  check_inputs(p2, ess2);
  const double n1 = ess1 + 2.0, n2 = ess2 + 2.0;
  const double q1 = (p1 * ess1 + 1.0) / n1, q2 = (p2 * ess2 + 1.0) / n2;
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  const double half = z * std::sqrt(q1 * (1.0 - q1) / n1 + q2 * (1.0 - q2) / n2);
  return {q1 - q2 - half, q1 - q2 + half};
}

SplitComparisonReport compare_chains(std::span<const Chain> chains, std::span<const double> ess, double level,
                                     double min_freq) {
  if (chains.size() < 2) throw std::invalid_argument("compare_chains: need at least 2 chains");
  if (ess.size() != chains.size()) throw std::invalid_argument("compare_chains: one ESS per chain required");
  for (const auto& c : chains)
    if (!same_taxa(c.taxa, chains.front().taxa)) throw DataError("compare_chains: chains have different taxa");

  SplitComparisonReport report;
  report.taxa = chains.front().taxa;
  report.ess.assign(ess.begin(), ess.end());
  std::vector<SplitProbabilities> sp;
  for (const auto& c : chains) sp.push_back(split_probabilities(c));

  for (std::size_t i = 0; i < chains.size(); ++i)
    for (std::size_t j = 0; j < chains.size(); ++j) {
      if (i == j) continue;
      std::map<Split, bool> splits;
      for (const auto& [s, p] : sp[i].probs) splits.emplace(s, true);
      for (const auto& [s, p] : sp[j].probs) splits.emplace(s, true);
      PairSummary summary{i, j, {}, 0};
      const SplitProbabilities pair[2] = {sp[i], sp[j]};
      summary.spread = asdsf_msdsf(pair, min_freq);
      for (const auto& [s, unused] : splits) {
        SplitComparisonRow row;
        row.chain_i = i;
        row.chain_j = j;
        row.split = s;
        row.p_i = sp[i].prob(s);
        row.p_j = sp[j].prob(s);
        row.ci_i = jeffreys_ci(row.p_i, ess[i], level);
        row.ci_j = jeffreys_ci(row.p_j, ess[j], level);
        row.diff = agresti_caffo_diff_ci(row.p_i, ess[i], row.p_j, ess[j], level);
        row.pass = row.diff.contains(0.0);
        if (!row.pass) ++summary.n_fail;
        report.rows.push_back(std::move(row));
      }
      report.pairs.push_back(summary);
    }
  return report;
}

SplitComparisonReport compare_chains(std::span<const Chain> chains, TreeEssMethod method, double level,
                                     std::uint64_t seed, double min_freq) {
  std::vector<double> ess;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const auto& c = chains[k];
    if (needs_distance_matrix(method)) {
      const auto d = distance_matrix(c);
      ess.push_back(estimate_ess(method, c, &d, derive_seed(seed, k)).value);
    } else {
      ess.push_back(estimate_ess(method, c, nullptr, derive_seed(seed, k)).value);
    }
  }
  return compare_chains(chains, ess, level, min_freq);
}

void write_comparison_report(std::ostream& out, const SplitComparisonReport& report) {
  out << "chain_i\tchain_j\tsplit_id\tp_i\tp_j\tlo_i\thi_i\tlo_j\thi_j\tdiff_lo\tdiff_hi\tflag\n";
  for (const auto& r : report.rows) {
    out << r.chain_i << '\t' << r.chain_j << '\t' << split_label(r.split, *report.taxa) << '\t'
        << format_double(r.p_i) << '\t' << format_double(r.p_j) << '\t' << format_double(r.ci_i.lower) << '\t'
        << format_double(r.ci_i.upper) << '\t' << format_double(r.ci_j.lower) << '\t'
        << format_double(r.ci_j.upper) << '\t' << format_double(r.diff.lower) << '\t'
        << format_double(r.diff.upper) << '\t' << (r.pass ? "pass" : "fail") << '\n';
  }
  out << "\nchain_i\tchain_j\tasdsf\tmsdsf\tn_fail\n";
  for (const auto& p : report.pairs)
    out << p.chain_i << '\t' << p.chain_j << '\t' << format_double(p.spread.asdsf) << '\t'
        << format_double(p.spread.msdsf) << '\t' << p.n_fail << '\n';
}

}  // namespace topess
