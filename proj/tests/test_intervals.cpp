#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "support/support.hpp"
#include "topess/errors.hpp"
#include "topess/fake_mcmc.hpp"
#include "topess/intervals.hpp"

namespace topess {
namespace {

/// Beta(a, b) CDF by composite Simpson on the log-space density (a, b >= 1).
double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  auto pdf = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(log_norm + (a - 1) * std::log(t) + (b - 1) * std::log1p(-t));
  };
  const int m = 20000;
  const double h = x / m;
  double s = pdf(0.0) + pdf(x);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * pdf(k * h);
  return s * h / 3.0;
}

double beta_quantile(double q, double a, double b) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (beta_cdf(mid, a, b) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(Jeffreys, BoundaryRules) {
  for (double ess : {1.0, 7.5, 300.0}) {
    EXPECT_EQ(jeffreys_ci(0.0, ess).lower, 0.0);
    EXPECT_EQ(jeffreys_ci(1.0, ess).upper, 1.0);
    EXPECT_GT(jeffreys_ci(0.0, ess).upper, 0.0);
  }
}

TEST(Jeffreys, HalfAtHundredMatchesNumericalInversion) {
  const auto ci = jeffreys_ci(0.5, 100.0);
  EXPECT_NEAR(ci.lower, 0.403, 5e-4);
  EXPECT_NEAR(ci.upper, 0.597, 5e-4);
  EXPECT_NEAR(ci.lower, beta_quantile(0.025, 50.5, 50.5), 1e-8);
  EXPECT_NEAR(ci.upper, beta_quantile(0.975, 50.5, 50.5), 1e-8);
}

TEST(Jeffreys, RealValuedCountsMatchNumericalInversion) {
  for (auto [p, ess, level] : {std::tuple{0.3, 200.0, 0.95}, std::tuple{0.12, 37.3, 0.9}, std::tuple{0.8, 12.5, 0.99}}) {
    const double x = p * ess;
    const auto ci = jeffreys_ci(p, ess, level);
    EXPECT_NEAR(ci.lower, beta_quantile((1 - level) / 2, x + 0.5, ess - x + 0.5), 1e-7);
    EXPECT_NEAR(ci.upper, beta_quantile(1 - (1 - level) / 2, x + 0.5, ess - x + 0.5), 1e-7);
  }
}

TEST(Jeffreys, MirrorSymmetry) {
  for (double p : {0.0, 0.07, 0.31, 0.5, 0.9}) {
    const auto a = jeffreys_ci(p, 57.0), b = jeffreys_ci(1.0 - p, 57.0);
    EXPECT_NEAR(a.lower, 1.0 - b.upper, 1e-12);
    EXPECT_NEAR(a.upper, 1.0 - b.lower, 1e-12);
  }
}

TEST(Jeffreys, MonotoneInPAndEss) {
  Interval prev = jeffreys_ci(0.0, 80.0);
  for (int k = 1; k <= 100; ++k) {
    const auto ci = jeffreys_ci(k / 100.0, 80.0);
    EXPECT_GE(ci.lower, prev.lower);
    EXPECT_GE(ci.upper, prev.upper);
    prev = ci;
  }
  for (double p : {0.05, 0.4, 0.5}) {
    double width = 1.0;
    for (double ess : {1.0, 2.0, 5.0, 20.0, 100.0, 1000.0}) {
      const auto ci = jeffreys_ci(p, ess);
      EXPECT_LE(ci.upper - ci.lower, width);
      width = ci.upper - ci.lower;
    }
  }
}

TEST(Jeffreys, CoverageNearNominal) {
  std::mt19937_64 rng(1);
  for (double p : {0.1, 0.3, 0.5}) {
    std::binomial_distribution<int> draw(200, p);
    int covered = 0;
    for (int rep = 0; rep < 2000; ++rep) covered += jeffreys_ci(draw(rng) / 200.0, 200.0).contains(p);
    const double rate = covered / 2000.0;
    EXPECT_GE(rate, 0.92) << "p " << p;
    EXPECT_LE(rate, 0.98) << "p " << p;
  }
}

TEST(Jeffreys, Errors) {
  EXPECT_THROW(jeffreys_ci(0.5, 10.0, 1.0), std::invalid_argument);
  EXPECT_THROW(jeffreys_ci(0.5, 10.0, 0.0), std::invalid_argument);
  EXPECT_THROW(jeffreys_ci(1.5, 10.0), std::invalid_argument);
  EXPECT_THROW(jeffreys_ci(0.5, 0.5), std::invalid_argument);
}

TEST(AgrestiCaffo, WorkedExample) {
  const auto ci = agresti_caffo_diff_ci(0.8, 100.0, 0.2, 100.0);
  const double p1 = 81.0 / 102, p2 = 21.0 / 102;
  const double half = 1.959963984540054 * std::sqrt(p1 * (1 - p1) / 102 + p2 * (1 - p2) / 102);
  EXPECT_NEAR(ci.lower, p1 - p2 - half, 1e-12);
  EXPECT_NEAR(ci.upper, p1 - p2 + half, 1e-12);
  // Center 60/102 = 0.5882, half-width 1.96 * 0.05662 = 0.1110.
  EXPECT_NEAR(ci.lower, 0.4773, 1e-4);
  EXPECT_NEAR(ci.upper, 0.6992, 1e-4);
}

TEST(AgrestiCaffo, SymmetryAndAntisymmetry) {
  const auto same = agresti_caffo_diff_ci(0.37, 55.0, 0.37, 55.0);
  EXPECT_NEAR(same.lower, -same.upper, 1e-15);
  const auto a = agresti_caffo_diff_ci(0.9, 40.0, 0.6, 250.0), b = agresti_caffo_diff_ci(0.6, 250.0, 0.9, 40.0);
  EXPECT_NEAR(a.lower, -b.upper, 1e-15);
  EXPECT_NEAR(a.upper, -b.lower, 1e-15);
  EXPECT_THROW(agresti_caffo_diff_ci(0.5, 10.0, 0.5, 10.0, 1.2), std::invalid_argument);
}

TEST(CompareChains, SelfComparisonPasses) {
  const auto c = run_chain(testing::six_taxon_target(), 5000, 5, 2);
  const std::vector<Chain> chains = {c, c};
  const auto r = compare_chains(chains, TreeEssMethod::FrechetCorrelation);
  ASSERT_FALSE(r.rows.empty());
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.pass);
    EXPECT_EQ(row.p_i, row.p_j);
  }
  ASSERT_EQ(r.pairs.size(), 2u);
  for (const auto& p : r.pairs) EXPECT_EQ(p.n_fail, 0u);
}

TEST(CompareChains, IidChainsRarelyFail) {
  const auto target = testing::six_taxon_target();
  std::size_t fails = 0, total = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const std::vector<Chain> chains = {iid_sample(target, 1000, 10 * rep), iid_sample(target, 1000, 10 * rep + 1)};
    const std::vector<double> ess = {1000.0, 1000.0};
    const auto r = compare_chains(chains, ess);
    for (const auto& row : r.rows)
      if (row.chain_i == 0) {
        fails += !row.pass;
        ++total;
      }
  }
  EXPECT_LE(static_cast<double>(fails) / static_cast<double>(total), 0.10);
}

TEST(CompareChains, PairsAreSymmetricAndSmallerEssFailsLess) {
  const auto target = testing::six_taxon_target();
  const std::vector<Chain> chains = {run_chain(target, 20000, 10, 3), run_chain(target, 20000, 10, 4),
                                     run_chain(target, 20000, 10, 5)};
  const auto r = compare_chains(chains, TreeEssMethod::FrechetCorrelation);
  ASSERT_EQ(r.pairs.size(), 6u);
  auto fail_set = [&](const SplitComparisonReport& rep, std::size_t i, std::size_t j) {
    std::set<Split> out;
    for (const auto& row : rep.rows)
      if (row.chain_i == i && row.chain_j == j && !row.pass) out.insert(row.split);
    return out;
  };
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(fail_set(r, i, j), fail_set(r, j, i));

  std::vector<double> quarter = r.ess;
  for (auto& e : quarter) e = std::max(1.0, e / 4.0);
  const auto rq = compare_chains(chains, quarter);
  for (std::size_t k = 0; k < r.pairs.size(); ++k) EXPECT_LE(rq.pairs[k].n_fail, r.pairs[k].n_fail);
}

TEST(CompareChains, ReportLayoutAndErrors) {
  const auto target = testing::four_taxon_target({0.5, 0.3, 0.2});
  const std::vector<Chain> chains = {iid_sample(target, 200, 1), iid_sample(target, 200, 2)};
  const std::vector<double> ess = {200.0, 200.0};
  std::ostringstream out;
  write_comparison_report(out, compare_chains(chains, ess));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "chain_i\tchain_j\tsplit_id\tp_i\tp_j\tlo_i\thi_i\tlo_j\thi_j\tdiff_lo\tdiff_hi\tflag");
  std::size_t rows = 0;
  while (std::getline(in, line) && !line.empty()) ++rows;
  EXPECT_EQ(rows, 6u);
  std::getline(in, line);
  EXPECT_EQ(line, "chain_i\tchain_j\tasdsf\tmsdsf\tn_fail");

  const std::vector<Chain> one = {chains[0]};
  EXPECT_THROW(compare_chains(one, std::vector<double>{1.0}), std::invalid_argument);
  const auto other = iid_sample(testing::six_taxon_target(), 10, 3);
  const std::vector<Chain> mixed = {chains[0], other};
  EXPECT_THROW(compare_chains(mixed, ess), DataError);
}

}  // namespace
}  // namespace topess
