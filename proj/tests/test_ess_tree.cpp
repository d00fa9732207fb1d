#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/support.hpp"
#include "topess/errors.hpp"
#include "topess/ess_tree.hpp"
#include "topess/fake_mcmc.hpp"
#include "topess/stats.hpp"

namespace topess {
namespace {

const std::vector<TreeEssMethod> kDistanceMethods = {
    TreeEssMethod::FrechetCorrelation, TreeEssMethod::MedianPseudo, TreeEssMethod::MinPseudo,
    TreeEssMethod::FoldedRankMedoid,   TreeEssMethod::TotalDistance, TreeEssMethod::Cmds,
    TreeEssMethod::JumpDistanceBootstrap, TreeEssMethod::JumpDistanceBootstrapUnsmoothed};

Chain reversed(const Chain& c) {
  Chain r = c;
  std::reverse(r.samples.begin(), r.samples.end());
  if (r.log_density) std::reverse(r.log_density->begin(), r.log_density->end());
  return r;
}

/// Alternating blocks of length L over two topologies at RF distance 2.
Chain block_chain(std::size_t n, std::size_t L) {
  const auto t = parse_newick("((A,B),(C,D),(E,F));");
  const auto u = nni_neighbors(t).front();
  Chain c{t.taxa_ptr(), {}, std::nullopt};
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back((i / L) % 2 ? u : t);
  return c;
}

TEST(MethodNames, RoundTrip) {
  for (auto m : kAllTreeEssMethods) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_EQ(method_name(TreeEssMethod::JumpDistanceBootstrapUnsmoothed), "jumpDistanceBootstrapUnsmoothed");
  EXPECT_THROW(parse_method("approximateESS"), std::invalid_argument);
}

TEST(TreeEss, AllIdenticalChainGivesOne) {
  const auto t = parse_newick("((A,B),(C,D),(E,F));");
  Chain c{t.taxa_ptr(), std::vector<Topology>(64, t), std::vector<double>(64, -3.0)};
  const auto d = distance_matrix(c);
  for (auto m : kAllTreeEssMethods) {
    if (m == TreeEssMethod::FixedN) continue;
    EXPECT_EQ(estimate_ess(m, c, &d, 7).value, 1.0) << method_name(m);
  }
}

TEST(TreeEss, IidDrawsLookIndependent) {
  const auto target = testing::six_taxon_target();
  const std::vector<TreeEssMethod> methods = {TreeEssMethod::FrechetCorrelation, TreeEssMethod::SplitFrequency,
                                              TreeEssMethod::MedianPseudo,       TreeEssMethod::FoldedRankMedoid,
                                              TreeEssMethod::TotalDistance,      TreeEssMethod::Cmds,
                                              TreeEssMethod::LogPosterior};
  const int reps = 20;
  std::vector<int> ok(methods.size(), 0);
  for (int r = 0; r < reps; ++r) {
    const auto c = iid_sample(target, 1000, 100 + r);
    const auto d = distance_matrix(c);
    for (std::size_t k = 0; k < methods.size(); ++k) ok[k] += estimate_ess(methods[k], c, &d).value >= 700.0;
  }
  for (std::size_t k = 0; k < methods.size(); ++k) EXPECT_GE(ok[k], 18) << method_name(methods[k]);
}

TEST(TreeEss, EveryMethodStaysWithinOneAndN) {
  const auto target = testing::six_taxon_target();
  for (std::size_t iters : {64u, 500u, 5000u}) {
    const auto c = run_chain(target, iters, 1, iters);
    const auto d = distance_matrix(c);
    for (auto m : kAllTreeEssMethods) {
      const double v = estimate_ess(m, c, &d, 1).value;
      EXPECT_GE(v, 1.0) << method_name(m);
      EXPECT_LE(v, static_cast<double>(c.size())) << method_name(m);
    }
  }
}

TEST(FrechetCorrelation, BlockChainMatchesIndicatorOracle) {
  for (std::size_t L : {5u, 20u, 50u}) {
    const auto c = block_chain(2000, L);
    std::vector<double> ind(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) ind[i] = c.samples[i] == c.samples[0] ? 1.0 : 0.0;
    const double oracle = sum_of_correlations_ess(ind).value;
    const double got = frechet_correlation_ess(distance_matrix(c)).value;
    EXPECT_LT(std::abs(std::log(got / oracle)), std::log(2.0)) << "L " << L;
    const double ref = 2000.0 / static_cast<double>(L);
    EXPECT_LT(std::abs(std::log10(got / ref)), 1.0) << "L " << L;
  }
}

TEST(FrechetCorrelation, EuclideanShimReproducesScalarAutocorrelation) {
  // On scalars the Fréchet lag covariance reduces to the windowed autocovariance.
  const auto x = testing::ar1_series(400, 0.6, 21);
  const auto d = DistanceMatrix::from_function(x.size(), [&](auto i, auto j) { return std::abs(x[i] - x[j]); });
  const auto rho = frechet_autocorrelations(d, 3);
  for (std::size_t s = 1; s <= 3; ++s) {
    const std::size_t k = x.size() - s;
    std::vector<double> lead(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k)),
        trail(x.begin() + static_cast<std::ptrdiff_t>(s), x.end());
    const double ml = mean(lead), mt = mean(trail);
    double cov = 0.0;
    for (std::size_t i = 0; i < k; ++i) cov += (lead[i] - ml) * (trail[i] - mt);
    cov /= static_cast<double>(k);
    // Expanding the mean squared lag-s distance around the window means.
    const double vl = sample_variance(lead), vt = sample_variance(trail);
    const double expected =
        (cov + (vl + vt) / (2.0 * static_cast<double>(k)) - 0.5 * (ml - mt) * (ml - mt)) / std::sqrt(vl * vt);
    EXPECT_NEAR(rho[s], expected, 1e-9) << "lag " << s;
  }
}

TEST(FrechetCorrelation, ReversalIsExact) {
  const auto c = run_chain(testing::six_taxon_target(), 3000, 3, 5);
  const double fwd = frechet_correlation_ess(distance_matrix(c)).value;
  const double bwd = frechet_correlation_ess(distance_matrix(reversed(c))).value;
  EXPECT_NEAR(fwd, bwd, 1e-9 * fwd);
}

TEST(TreeEss, ReversalInvarianceWithinFivePercent) {
  const auto c = run_chain(testing::six_taxon_target(), 20000, 10, 6);
  const auto df = distance_matrix(c), db = distance_matrix(reversed(c));
  for (auto m : {TreeEssMethod::MedianPseudo, TreeEssMethod::MinPseudo, TreeEssMethod::TotalDistance,
                 TreeEssMethod::Cmds}) {
    const double f = estimate_ess(m, c, &df).value, b = estimate_ess(m, c, &db).value;
    EXPECT_LE(std::abs(f - b), 0.05 * std::max(f, b)) << method_name(m);
  }
}

TEST(SplitFrequency, OneVaryingSplitMatchesScalarBatchMeans) {
  const auto t = parse_newick("((A,B),(C,D),(E,F));");
  const auto u = nni_neighbors(t).front();
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.3);
  Chain c{t.taxa_ptr(), {}, std::nullopt};
  bool state = false;
  for (int i = 0; i < 900; ++i) {
    if (coin(rng)) state = !state;
    c.samples.push_back(state ? u : t);
  }
  // t and u differ in exactly one split; indicator of u's distinguishing split.
  Split only_u;
  for (const auto& s : u.splits())
    if (!t.contains(s)) only_u = s;
  std::vector<double> x;
  for (const auto& s : c.samples) x.push_back(s.contains(only_u) ? 1.0 : 0.0);
  // The vector embedding has two varying coordinates (one split leaves, one enters),
  // each with identical deviations, so every variance doubles and the ratio is unchanged.
  EXPECT_NEAR(split_frequency_ess(c).value, batch_means_ess(x).value, 1e-9);
}

TEST(SplitFrequency, NeedsSixteenSamples) {
  const auto t = parse_newick("((A,B),(C,D),(E,F));");
  Chain c{t.taxa_ptr(), std::vector<Topology>(15, t), std::nullopt};
  EXPECT_THROW(split_frequency_ess(c), std::invalid_argument);
}

TEST(Pseudo, MinNeverExceedsMedian) {
  const auto target = testing::six_taxon_target();
  for (int r = 0; r < 10; ++r) {
    const auto c = run_chain(target, 2000, 2, 40 + r);
    const auto d = distance_matrix(c);
    EXPECT_LE(pseudo_ess(d, PseudoAggregate::Min).value, pseudo_ess(d, PseudoAggregate::Median).value);
  }
}

TEST(Pseudo, PerReferenceMatchesDirectComputation) {
  const auto c = run_chain(testing::six_taxon_target(), 600, 3, 8);
  const auto d = distance_matrix(c);
  const auto per = pseudo_ess_per_reference(d);
  for (std::size_t r : {0u, 17u, 199u}) {
    std::vector<double> x(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) x[i] = static_cast<double>(rf_distance(c.samples[i], c.samples[r]));
    EXPECT_DOUBLE_EQ(per[r], ar_spectrum_ess(x).value);
  }
}

TEST(FoldedRank, DistanceScaleInvarianceIsBitIdentical) {
  const auto c = run_chain(testing::six_taxon_target(), 3000, 3, 10);
  const auto d = distance_matrix(c);
  for (double k : {2.0, 0.37, 1e6}) EXPECT_EQ(folded_rank_medoid_ess(d).value, folded_rank_medoid_ess(d.scaled(k)).value);
}

TEST(TotalDistance, RowSumsReverseWithTheChain) {
  const auto c = run_chain(testing::six_taxon_target(), 500, 1, 11);
  auto y = distance_matrix(c).row_sums();
  auto yr = distance_matrix(reversed(c)).row_sums();
  std::reverse(yr.begin(), yr.end());
  EXPECT_EQ(y, yr);
}

TEST(TotalDistance, SymmetricAlternationIsConstant) {
  const auto c = block_chain(64, 1);
  EXPECT_EQ(total_distance_ess(distance_matrix(c)).value, 1.0);
}

TEST(Cmds, EuclideanShimMatchesScalarEss) {
  for (double phi : {0.0, 0.5, 0.9}) {
    const auto x = testing::ar1_series(300, phi, 12);
    const auto d = DistanceMatrix::from_function(x.size(), [&](auto i, auto j) { return std::abs(x[i] - x[j]); });
    EXPECT_NEAR(cmds_ess(d).value, ar_spectrum_ess(x).value, 1e-6) << "phi " << phi;
  }
}

TEST(Cmds, FirstCoordinateIsCenteredSeriesUpToSign) {
  const auto x = testing::ar1_series(120, 0.3, 13);
  const auto d = DistanceMatrix::from_function(x.size(), [&](auto i, auto j) { return std::abs(x[i] - x[j]); });
  const auto v = cmds_first_coordinate(d);
  const double m = mean(x);
  double dot = 0.0, nx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += v[i] * (x[i] - m);
    nx += (x[i] - m) * (x[i] - m);
  }
  EXPECT_NEAR(std::abs(dot) / std::sqrt(nx), 1.0, 1e-9);
}

TEST(JumpDistance, IidShuffleReachesN) {
  const auto c = iid_sample(testing::six_taxon_target(), 1000, 14);
  const auto d = distance_matrix(c);
  EXPECT_EQ(jump_distance_ess(d, {true, 0.05, 200, 1}).value, 1000.0);
}

TEST(JumpDistance, NoCrossingGivesOne) {
  // Three mutually adjacent quartets: every pair differs by 2, and iid
  // neighbors differ with probability 2/3, so the threshold equals the
  // largest possible jump and no lag strictly exceeds it.
  const auto target = testing::four_taxon_target({0.34, 0.33, 0.33});
  const auto c = run_chain(target, 4000, 1, 15);
  const auto d = distance_matrix(c);
  EXPECT_EQ(jump_distance_ess(d, {false, 0.05, 200, 2}).value, 1.0);
}

TEST(JumpDistance, SlowChainIsSmallAndSeeded) {
  const auto c = block_chain(1000, 100);
  const auto d = distance_matrix(c);
  const auto a = jump_distance_ess(d, {true, 0.05, 200, 3});
  EXPECT_LT(a.value, 100.0);
  EXPECT_EQ(a.value, jump_distance_ess(d, {true, 0.05, 200, 3}).value);
  const auto u = jump_distance_ess(d, {false, 0.05, 200, 3});
  EXPECT_GE(u.value, 1.0);
  EXPECT_LE(u.value, 1000.0);
}

TEST(Baselines, FixedNAndLogPosterior) {
  const auto t = parse_newick("(A,B,(C,D));");
  Chain one{t.taxa_ptr(), {t}, std::nullopt};
  EXPECT_EQ(fixed_n_ess(one).value, 1.0);
  const auto target = testing::six_taxon_target();
  auto c = run_chain(target, 1000, 1, 16);
  EXPECT_EQ(fixed_n_ess(c).value, 1000.0);
  EXPECT_EQ(fixed_n_ess(reversed(c)).value, 1000.0);
  EXPECT_EQ(log_posterior_ess(c).value, ar_spectrum_ess(*c.log_density).value);
  c.log_density = std::vector<double>(c.size(), -2.0);
  EXPECT_EQ(log_posterior_ess(c).value, 1.0);
  c.log_density.reset();
  EXPECT_THROW(log_posterior_ess(c), DataError);
}

TEST(TreeEss, DistanceMethodsNeedAMatrix) {
  const auto c = run_chain(testing::six_taxon_target(), 100, 1, 17);
  for (auto m : kDistanceMethods) EXPECT_THROW(estimate_ess(m, c, nullptr), std::invalid_argument);
  EXPECT_THROW(pseudo_ess(DistanceMatrix(5), PseudoAggregate::Median), std::invalid_argument);
}

}  // namespace
}  // namespace topess
