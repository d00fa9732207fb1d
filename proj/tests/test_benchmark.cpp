#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "support/support.hpp"
#include "topess/benchmark.hpp"
#include "topess/stats.hpp"

namespace topess {
namespace {

std::shared_ptr<const CategoricalTreeDistribution> three_topologies() {
  return std::make_shared<const CategoricalTreeDistribution>(testing::four_taxon_target({0.5, 0.3, 0.2}));
}

NamedEstimator constant(std::string name, std::function<double(const Chain&)> f) {
  return {std::move(name), [f](const Chain& c, const DistanceMatrix*, std::uint64_t) { return f(c); }, false};
}

std::vector<double> field(const BenchmarkReport& r, const std::string& method, double ErrorComparison::*member) {
  std::vector<double> out;
  for (const auto& rec : r.records)
    if (rec.method == method && !rec.cmp.degenerate) out.push_back(rec.cmp.*member);
  return out;
}

TEST(Benchmark, FixedNOnIidChainsHasSmallRmce) {
  std::vector<double> abs_rmce, rmce;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BenchmarkConfig cfg;
    cfg.target = three_topologies();
    cfg.m = 50;
    cfg.iterations = 200;
    cfg.iid_chains = true;
    cfg.methods = {method_estimator(TreeEssMethod::FixedN)};
    cfg.seed = seed;
    const auto r = run_benchmark(cfg);
    for (double v : field(r, "fixedN", &ErrorComparison::rmce)) {
      abs_rmce.push_back(std::abs(v));
      rmce.push_back(v);
    }
  }
  EXPECT_LE(median(abs_rmce), 0.15);
  EXPECT_GE(median(rmce), -0.2);
  EXPECT_LE(median(rmce), 0.2);
}

TEST(Benchmark, HalvedEssGivesInverseRootTwoItmce) {
  std::vector<double> itmce;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BenchmarkConfig cfg;
    cfg.target = three_topologies();
    cfg.m = 50;
    cfg.iterations = 400;
    cfg.iid_chains = true;
    cfg.methods = {constant("half", [](const Chain& c) { return c.size() / 2.0; })};
    cfg.seed = 100 + seed;
    const auto v = field(run_benchmark(cfg), "half", &ErrorComparison::itmce);
    itmce.insert(itmce.end(), v.begin(), v.end());
  }
  EXPECT_NEAR(median(itmce), 1.0 / std::sqrt(2.0), 0.07);
}

TEST(Benchmark, ConstantKScalesAsInverseRoot) {
  BenchmarkConfig cfg;
  cfg.target = three_topologies();
  cfg.m = 50;
  cfg.iterations = 100;
  cfg.methods = {constant("k25", [](const Chain&) { return 25.0; }), constant("k100", [](const Chain&) { return 100.0; })};
  cfg.seed = 7;
  std::vector<double> ratio;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = 200 + seed;
    const auto r = run_benchmark(cfg);
    const auto a = field(r, "k25", &ErrorComparison::se_mcess), b = field(r, "k100", &ErrorComparison::se_mcess);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ratio.push_back(a[i] / b[i]);
  }
  EXPECT_NEAR(median(ratio), 2.0, 0.2 * 2.0);
}

TEST(Benchmark, SingleTopologyTargetIsAllDegenerate) {
  BenchmarkConfig cfg;
  const auto t = parse_newick("((A,B),(C,D),(E,F));");
  cfg.target = std::make_shared<const CategoricalTreeDistribution>(build_target(TargetTable{{t, 1.0}}, 1.0));
  cfg.m = 5;
  cfg.iterations = 100;
  cfg.methods = {method_estimator(TreeEssMethod::FrechetCorrelation), method_estimator(TreeEssMethod::FixedN)};
  const auto r = run_benchmark(cfg);
  ASSERT_FALSE(r.records.empty());
  for (const auto& rec : r.records) {
    EXPECT_TRUE(rec.cmp.degenerate);
    EXPECT_EQ(rec.cmp.se_mcmc, 0.0);
    EXPECT_EQ(rec.cmp.se_mcess, 0.0);
  }
  // Three splits, one tree, one MRC per method.
  EXPECT_EQ(r.records.size(), 2u * 5);
}

TEST(Benchmark, RecordsAreUniquePerMethodKindItem) {
  BenchmarkConfig cfg;
  cfg.target = std::make_shared<const CategoricalTreeDistribution>(testing::six_taxon_target());
  cfg.m = 4;
  cfg.iterations = 400;
  cfg.thin = 2;
  cfg.methods = {method_estimator(TreeEssMethod::FrechetCorrelation), method_estimator(TreeEssMethod::SplitFrequency)};
  cfg.nruns = {2, 4};
  const auto r = run_benchmark(cfg);
  std::set<std::tuple<std::string, SummaryKind, std::string>> keys;
  for (const auto& rec : r.records) EXPECT_TRUE(keys.emplace(rec.method, rec.kind, rec.item_id).second);
  EXPECT_EQ(r.kept, 200u);
  EXPECT_EQ(r.chain_ess.at("frechetCorrelation").size(), 4u);
}

TEST(Benchmark, DeterministicReport) {
  BenchmarkConfig cfg;
  cfg.target = std::make_shared<const CategoricalTreeDistribution>(testing::six_taxon_target());
  cfg.m = 4;
  cfg.iterations = 300;
  cfg.methods = {method_estimator(TreeEssMethod::MedianPseudo), method_estimator(TreeEssMethod::JumpDistanceBootstrap)};
  cfg.nruns = {3};
  cfg.seed = 99;
  std::ostringstream a, b;
  write_benchmark_report(a, run_benchmark(cfg));
  write_benchmark_report(b, run_benchmark(cfg));
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "method\tsummary_kind\titem_id\titem_prob\tse_mcmc\tse_mcess\trmce\titmce\tmean_ess");
}

TEST(Benchmark, FixedNIsBinnedByIterations) {
  BenchmarkConfig cfg;
  cfg.target = three_topologies();
  cfg.m = 3;
  cfg.iterations = 1000;
  cfg.thin = 10;
  cfg.methods = {method_estimator(TreeEssMethod::FixedN), method_estimator(TreeEssMethod::FrechetCorrelation)};
  const auto r = run_benchmark(cfg);
  for (const auto& rec : r.records) {
    if (rec.method == "fixedN") {
      EXPECT_EQ(rec.mean_ess, 100.0);
      EXPECT_EQ(binning_ess(rec, r), 1000.0);
    } else {
      EXPECT_EQ(binning_ess(rec, r), rec.mean_ess);
    }
  }
  std::ostringstream meta;
  write_benchmark_metadata(meta, r);
  EXPECT_NE(meta.str().find("fixedN_binning\titerations"), std::string::npos);
}

TEST(Benchmark, ConfigErrors) {
  BenchmarkConfig cfg;
  cfg.target = three_topologies();
  cfg.m = 1;
  cfg.iterations = 100;
  EXPECT_THROW(run_benchmark(cfg), std::invalid_argument);
  cfg.m = 3;
  cfg.iterations = 15;
  EXPECT_THROW(run_benchmark(cfg), std::invalid_argument);
  cfg.iterations = 100;
  cfg.nruns = {4};
  EXPECT_THROW(run_benchmark(cfg), std::invalid_argument);
  cfg.nruns = {};
  cfg.methods = {method_estimator(TreeEssMethod::FixedN), method_estimator(TreeEssMethod::FixedN)};
  EXPECT_THROW(run_benchmark(cfg), std::invalid_argument);
}

TEST(NRuns, FullSubsetEqualsBruteForce) {
  const auto target = testing::six_taxon_target();
  std::vector<Chain> chains;
  for (std::uint64_t i = 0; i < 6; ++i) chains.push_back(run_chain(target, 500, 1, i));
  const auto items = select_items(chains);
  const auto a = brute_force_errors(chains, items), b = nruns_bruteforce(chains, items);
  EXPECT_EQ(a.split_se, b.split_se);
  EXPECT_EQ(a.tree_se, b.tree_se);
  EXPECT_EQ(a.mrc_se, b.mrc_se);

  const std::vector<Chain> twins = {chains[0], chains[0]};
  const auto z = nruns_bruteforce(twins, items);
  for (double v : z.split_se) EXPECT_EQ(v, 0.0);
  for (double v : z.tree_se) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(z.mrc_se, 0.0);
  const std::vector<Chain> single = {chains[0]};
  EXPECT_THROW(nruns_bruteforce(single, items), std::invalid_argument);
}

TEST(NRuns, FewerChainsMeansNoisierSe) {
  const auto target = testing::four_taxon_target({0.5, 0.3, 0.2});
  std::vector<Chain> chains;
  for (std::uint64_t i = 0; i < 40; ++i) chains.push_back(run_chain(target, 300, 1, 1000 + i));
  const auto items = select_items(chains);
  std::mt19937_64 rng(5);
  auto se_spread = [&](std::size_t k) {
    std::vector<double> se;
    std::vector<std::size_t> order(chains.size());
    std::iota(order.begin(), order.end(), 0);
    for (int rep = 0; rep < 300; ++rep) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<Chain> subset;
      for (std::size_t j = 0; j < k; ++j) subset.push_back(chains[order[j]]);
      se.push_back(nruns_bruteforce(subset, items).tree_se.at(0));
    }
    return sample_variance(se);
  };
  EXPECT_GE(se_spread(2), se_spread(20));
}

TEST(SelectItems, ThresholdsAndCap) {
  const auto target = testing::six_taxon_target();
  std::vector<Chain> chains;
  for (std::uint64_t i = 0; i < 3; ++i) chains.push_back(iid_sample(target, 2000, i));
  const auto all = select_items(chains, 0.0, 1000);
  const auto capped = select_items(chains, 0.2, 5);
  EXPECT_EQ(capped.trees.size(), 5u);
  for (double p : capped.split_probs) EXPECT_GE(p, 0.2);
  EXPECT_LT(capped.splits.size(), all.splits.size());
  for (std::size_t i = 1; i < capped.tree_probs.size(); ++i) EXPECT_GE(capped.tree_probs[i - 1], capped.tree_probs[i]);
}

TEST(NormalCalibration, LongRunsAreWellCalibrated) {
  NormalCalibrationConfig cfg;
  cfg.n_lengths = 3;
  cfg.min_iterations = 10000;
  cfg.max_iterations = 100000;
  cfg.m = 100;
  cfg.seed = 4;
  const auto rows = run_normal_calibration(cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.iterations, r.thin * 1000);
    EXPECT_GE(r.mean_ess, 1.0);
    EXPECT_LE(r.mean_ess, 1000.0);
    EXPECT_LE(std::abs(r.cmp.rmce), 0.3);
  }
}

}  // namespace
}  // namespace topess
