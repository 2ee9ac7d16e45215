#include "cuped/simulation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cuped/errors.hpp"
#include "oracles.hpp"

namespace cuped {
namespace {

SimulationConfig config_for(CorrelationStructured s, int n, int reps, std::uint64_t seed = 0) {
  SimulationConfig c;
  c.structure = s;
  c.n_units = n;
  c.n_replications = reps;
  c.master_seed = seed;
  return c;
}

void expect_structure_near(const ExperimentFrame& f, const CorrelationStructured& s, double tol) {
  const Eigen::VectorXd x = f.covariates.col(0);
  // Pearson over all rows; the effect is zero in these configs.
  EXPECT_NEAR(pearson(x, f.y_pre), s.sigma, tol);
  EXPECT_NEAR(pearson(x, f.y_post), s.tau, tol);
  EXPECT_NEAR(pearson(f.y_pre, f.y_post), s.rho, tol);
}

TEST(FactorCorrelation, ReproducesMatrix) {
  for (const CorrelationStructured s : {CorrelationStructured{0.5, 0.5, 0.5}, CorrelationStructured{0.8, 0.8, 0.64},
                                        CorrelationStructured{0.2, 0.9, 0.18}}) {
    const auto f = factor_correlation(s);
    EXPECT_EQ(f.jitter, 0.0);
    EXPECT_LT((f.root * f.root.transpose() - s.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(FactorCorrelation, SingularBoundary) {
  const CorrelationStructured s{1.0, 0.4, 0.4};
  const auto f = factor_correlation(s);
  EXPECT_LE(f.jitter, kMaxJitter);
  EXPECT_LT((f.root * f.root.transpose() - s.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(factor_correlation({0.9, 0.9, 0.0}), InfeasibleStructure);
}

TEST(SamplePanel, IndependenceAtZeroStructure) {
  const auto f = sample_panel(config_for({0, 0, 0}, 50000, 1, 3), 0);
  expect_structure_near(f, {0, 0, 0}, 0.02);
}

TEST(SamplePanel, PrescribedStructure) {
  const CorrelationStructured s{0.8, 0.8, 0.64};
  const auto f = sample_panel(config_for(s, 50000, 1, 4), 0);
  expect_structure_near(f, s, 0.02);
  const auto e = empirical_correlation(f, "x");
  EXPECT_NEAR(e.sigma, 0.8, 0.02);
  EXPECT_NEAR(e.tau, 0.8, 0.02);
  EXPECT_NEAR(e.rho, 0.64, 0.02);
}

TEST(SamplePanel, GeneratorFidelityOnRandomStructures) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    const auto [s, t, r] = oracle::random_feasible_triple(rng);
    const CorrelationStructured st{s, t, r};
    const auto f = sample_panel(config_for(st, 50000, 1, static_cast<std::uint64_t>(i)), 0);
    expect_structure_near(f, st, 0.02);
  }
}

TEST(SamplePanel, DeterministicAndBalanced) {
  auto c = config_for({0.5, 0.4, 0.3}, 200, 1, 9);
  c.true_effect = 1.5;
  const auto a = sample_panel(c, 3);
  const auto b = sample_panel(c, 3);
  EXPECT_EQ(a.y_pre, b.y_pre);
  EXPECT_EQ(a.y_post, b.y_post);
  EXPECT_EQ(a.covariates, b.covariates);
  EXPECT_EQ(a.arms, b.arms);
  EXPECT_EQ(std::count(a.arms.begin(), a.arms.end(), Arm::kTreatment), 100);
  EXPECT_NE(sample_panel(c, 4).y_post, a.y_post);
  EXPECT_EQ(a.covariate_names, std::vector<std::string>{"x"});
}

TEST(SamplePanel, ConfigErrors) {
  EXPECT_THROW(sample_panel(config_for({0, 0, 0}, 21, 1), 0), InvalidArgument);
  EXPECT_THROW(sample_panel(config_for({0, 0, 0}, 10, 1), 0), InvalidArgument);
  EXPECT_THROW(sample_panel(config_for({0, 0, 0}, 20, 0), 0), InvalidArgument);
  EXPECT_THROW(sample_panel(config_for({0.9, 0.9, 0.0}, 20, 1), 0), InfeasibleStructure);
}

TEST(RunReplications, IdenticalAcrossThreadCounts) {
  auto c = config_for({0.8, 0.8, 0.64}, 200, 120, 5);
  c.include_crossfit = true;
  c.threads = 1;
  const auto serial = run_replications(c);
  c.threads = 4;
  const auto parallel = run_replications(c);
  ASSERT_EQ(serial.estimators.size(), 4u);
  for (std::size_t k = 0; k < serial.estimators.size(); ++k) {
    EXPECT_EQ(serial.estimators[k].mean_delta, parallel.estimators[k].mean_delta);
    EXPECT_EQ(serial.estimators[k].empirical_variance, parallel.estimators[k].empirical_variance);
    EXPECT_EQ(serial.estimators[k].coverage, parallel.estimators[k].coverage);
  }
  EXPECT_EQ(serial.advanced_over_basic.value, parallel.advanced_over_basic.value);
  EXPECT_EQ(serial.advanced_over_basic.std_error, parallel.advanced_over_basic.std_error);
}

TEST(RunReplications, UnbiasedForInjectedEffect) {
  auto c = config_for({0.6, 0.5, 0.7}, 400, 400, 6);
  c.true_effect = 0.3;
  const auto s = run_replications(c);
  for (const auto& e : s.estimators) {
    EXPECT_LT(std::abs(e.mean_delta - 0.3), 5 * e.mean_delta_stderr) << method_tag(e.method);
    EXPECT_GE(e.coverage, 0.0);
    EXPECT_LE(e.coverage, 1.0);
  }
  EXPECT_EQ(s.estimator(Method::kBasicRa).method, Method::kBasicRa);
  EXPECT_THROW(s.estimator(Method::kCrossfitRa), InvalidArgument);
  EXPECT_FALSE(s.crossfit_over_basic.has_value());
}

TEST(RunReplications, BasicRatioNearOneMinusRhoSquared) {
  const double root = std::sqrt(0.8);
  const auto s = run_replications(config_for({root, root, 0.8}, 500, 800, 7));
  EXPECT_NEAR(s.basic_over_original.value, 0.36, 4 * s.basic_over_original.std_error + 0.01);
  EXPECT_NEAR(s.advanced_over_basic.value, 1.0 / 1.8, 4 * s.advanced_over_basic.std_error + 0.01);
}

TEST(RunReplications, EstimatorFailureCarriesIndex) {
  auto c = config_for({0.5, 0.5, 0.5}, 20, 3, 1);
  c.include_crossfit = true;
  c.crossfit_folds = 10;  // about 2 units per fold, fewer than the 4 required
  try {
    run_replications(c);
    FAIL() << "expected ReplicationFailure";
  } catch (const ReplicationFailure& e) {
    EXPECT_EQ(e.replication_index(), 0);
    EXPECT_NE(std::string(e.what()).find("replication 0"), std::string::npos);
  }
}

TEST(SweepTheorem, ClosedFormColumnsAndBookkeeping) {
  auto base = config_for({0, 0, 0}, 400, 300, 11);
  const std::vector<std::pair<double, double>> grid{
      {0.64, 0.8}, {0.5, 0.9}, {0.0, 0.5}, {0.9, 0.2}, {0.5, 0.0}, {0.5, 0.6}};
  const auto r = sweep_theorem(grid, base);
  ASSERT_EQ(r.points.size(), grid.size());

  const auto& tight = r.points[0];
  EXPECT_TRUE(tight.feasible);
  EXPECT_NEAR(tight.tau, 0.8, 1e-12);
  EXPECT_NEAR(tight.theoretical_ratio, 0.36 / 0.5904, 1e-12);
  EXPECT_NEAR(tight.theoretical_ratio, 0.6098, 1e-4);
  EXPECT_NEAR(tight.bound, 1.0 / 1.64, 1e-12);
  EXPECT_NEAR(tight.theoretical_ratio, tight.bound, 1e-12);
  EXPECT_TRUE(tight.assumption_satisfied);

  const auto& slack = r.points[1];
  EXPECT_NEAR(slack.tau, 0.5 / 0.9, 1e-12);
  EXPECT_NEAR(slack.theoretical_ratio, 0.9218, 1e-4);
  EXPECT_NEAR(slack.bound, 2.0 / 3.0, 1e-12);
  EXPECT_GT(slack.theoretical_ratio, slack.bound);

  const auto& flat = r.points[2];
  EXPECT_EQ(flat.tau, 0.0);
  EXPECT_DOUBLE_EQ(flat.theoretical_ratio, 1.0);
  EXPECT_DOUBLE_EQ(flat.bound, 1.0);

  EXPECT_FALSE(r.points[3].feasible);
  EXPECT_FALSE(r.points[3].note.empty());
  EXPECT_TRUE(std::isnan(r.points[3].empirical_ratio));
  EXPECT_FALSE(r.points[4].feasible);

  // sigma < sqrt(rho): feasible but the assumption fails (tau = 0.833 > 0.6).
  EXPECT_TRUE(r.points[5].feasible);
  EXPECT_FALSE(r.points[5].assumption_satisfied);

  EXPECT_EQ(r.feasible_count(), 4u);
  for (const auto& p : r.points) {
    if (!p.feasible || !p.assumption_satisfied) continue;
    EXPECT_TRUE(p.bound_respected) << p.rho << ' ' << p.sigma;
    EXPECT_GE(p.theoretical_ratio, p.bound - 1e-12);
    EXPECT_LE(p.advanced_over_original,
              p.basic_over_original + 3 * std::hypot(p.advanced_over_original_stderr, p.basic_over_original_stderr));
  }
}

TEST(Counterexample, FallsBelowBound) {
  auto c = config_for({0.2, 0.9, 0.18}, 400, 400, 12);
  const auto r = counterexample_assumption_failure(c);
  ASSERT_EQ(r.points.size(), 1u);
  const auto& p = r.points[0];
  EXPECT_FALSE(p.assumption_satisfied);
  EXPECT_NEAR(p.theoretical_ratio, 0.19 / 0.9676, 1e-12);
  EXPECT_NEAR(p.theoretical_ratio, 0.1964, 1e-4);
  EXPECT_NEAR(p.bound, 1.0 / 1.18, 1e-12);
  EXPECT_LT(p.empirical_ratio, p.bound);
  EXPECT_FALSE(p.bound_respected);
}

TEST(Counterexample, RejectsStructuresSatisfyingAssumption) {
  EXPECT_THROW(counterexample_assumption_failure(config_for({0.8, 0.8, 0.64}, 100, 10)), InvalidArgument);
  EXPECT_THROW(counterexample_assumption_failure(config_for({0.9, 0.5, 0.45}, 100, 10)), InvalidArgument);
  EXPECT_THROW(counterexample_assumption_failure(config_for({0.9, 0.9, 0.0}, 100, 10)), InfeasibleStructure);
}

}  // namespace
}  // namespace cuped
