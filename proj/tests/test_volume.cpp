#include <gtest/gtest.h>

#include <numbers>
#include <vector>

#include "geonum/ball.hpp"
#include "geonum/stats.hpp"
#include "geonum/volume.hpp"
#include "oracles.hpp"

using namespace geonum;

TEST(Ball, ClosedForms) {
  EXPECT_NEAR(ball_volume(2, 1.0), std::numbers::pi, 1e-14);
  EXPECT_NEAR(ball_volume(3, 1.0), 4.0 * std::numbers::pi / 3.0, 1e-14);
  EXPECT_NEAR(ball_volume(4, 1.0), std::numbers::pi * std::numbers::pi / 2.0, 1e-14);
  EXPECT_NEAR(ball_volume(3, 2.0), 8.0 * ball_volume(3, 1.0), 1e-12);
  EXPECT_DOUBLE_EQ(ball_volume(3, 0.0), 0.0);
  for (int n = 2; n <= 8; ++n) EXPECT_NEAR(ball_volume(n, symmetrization_radius(20.0, n)), 20.0, 1e-10);
}

TEST(MonteCarlo, OwnBoundingBallIsExact) {
  const auto est = mc_volume(Region::ball(3, 2.0), 20000, 1);
  EXPECT_DOUBLE_EQ(est.value, ball_volume(3, 2.0));
  EXPECT_DOUBLE_EQ(est.std_error, 0.0);
  EXPECT_EQ(mc_volume(Region::empty(4), 10000, 1).value, 0.0);
  EXPECT_THROW(mc_volume(Region::ball(3, 1.0), 9999, 1), ValidationError);
}

TEST(MonteCarlo, BoxVolumeWithinErrorBars) {
  const auto est = mc_volume(Region::cube(4, 1.0), 400000, 7);
  EXPECT_NEAR(est.value, 1.0, 4.0 * est.std_error);
  EXPECT_EQ(est.method, VolumeMethod::monte_carlo);
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  const auto shell = Region::quad_shell(standard_form(2, 1), -0.5, 0.5, 10.0);
  const auto one = mc_volume(shell, 300000, 5, 1);
  const auto three = mc_volume(shell, 300000, 5, 3);
  EXPECT_EQ(one.value, three.value);
  EXPECT_EQ(one.std_error, three.std_error);
}

TEST(MonteCarlo, ShellSymmetryUnderNegation) {
  const auto form = random_form(2, 1, 4);
  const auto a = mc_volume(Region::quad_shell(form, 0.0, 1.0, 5.0), 400000, 1);
  const auto b = mc_volume(Region::quad_shell(negated(form), -1.0, 0.0, 5.0), 400000, 2);
  EXPECT_NEAR(a.value, b.value, 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST(MonteCarlo, MonotoneUnderInclusion) {
  const auto form = standard_form(2, 1);
  const auto small = mc_volume(Region::quad_shell(form, -0.5, 0.5, 5.0), 200000, 1);
  const auto large = mc_volume(Region::quad_shell(form, -1.0, 1.0, 5.0), 200000, 2);
  EXPECT_LE(small.value, large.value + 3.0 * std::hypot(small.std_error, large.std_error));
}

TEST(MonteCarlo, ConeShellMatchesHighSampleRun) {
  const auto shell = Region::quad_shell(standard_form(2, 1), -0.5, 0.5, 10.0);
  const auto est = mc_volume(shell, 200000, 3);
  const auto ref = mc_volume(shell, 4000000, 4);
  EXPECT_NEAR(est.value, ref.value, 3.0 * std::hypot(est.std_error, ref.std_error));
}

TEST(ThinShell, ConeMatchesExactFiniteEta) {
  for (const double eta : {1e-2, 1e-3}) {
    const auto est = c_p_surface(standard_form(2, 1), eta, 4000000, 9);
    EXPECT_EQ(est.method, VolumeMethod::thin_shell);
    EXPECT_NEAR(est.value, oracle::cone_thin_shell(eta), 3.0 * est.std_error) << eta;
  }
}

TEST(ThinShell, ConvergesToSurfaceIntegral) {
  // The shell contains a ball of radius ~sqrt(eta) around the singular
  // point 0, so in three dimensions the bias is of order sqrt(eta).
  EXPECT_NEAR(oracle::cone_thin_shell(1e-6), oracle::kConeSurfaceConstant, 3e-3);
  const double bias2 = oracle::kConeSurfaceConstant - oracle::cone_thin_shell(1e-2);
  const double bias3 = oracle::kConeSurfaceConstant - oracle::cone_thin_shell(1e-3);
  EXPECT_NEAR(bias2 / bias3, std::sqrt(10.0), 0.05);
  const auto est = c_p_surface(standard_form(2, 1), 1e-3, 4000000, 3);
  EXPECT_NEAR(est.value, oracle::kConeSurfaceConstant, 3.0 * est.std_error + bias3);
}

TEST(ThinShell, EtaDependenceOnRandomForm) {
  // Both eta agree once the sqrt(eta) bias measured on the cone is allowed for.
  const auto form = random_form(2, 1, 12);
  const auto coarse = c_p_surface(form, 1e-2, 2000000, 1);
  const auto fine = c_p_surface(form, 1e-3, 4000000, 2);
  const double bias_gap = oracle::cone_thin_shell(1e-3) - oracle::cone_thin_shell(1e-2);
  EXPECT_GT(fine.value, coarse.value - 3.0 * std::hypot(coarse.std_error, fine.std_error));
  EXPECT_LT(fine.value - coarse.value, 2.0 * bias_gap + 3.0 * std::hypot(coarse.std_error, fine.std_error));
}

TEST(ThinShell, DefiniteFormVanishes) {
  const auto est = c_p_surface(QuadraticForm(Matrix::Identity(3, 3)), 1e-3, 100000, 1);
  EXPECT_LT(est.value, 0.05);
  EXPECT_THROW(c_p_surface(standard_form(2, 1), 0.0, 100000, 1), ValidationError);
}

TEST(CountingConstant, ConeAgreesWithSurfaceIntegral) {
  const std::vector<double> grid{10.0, 20.0, 30.0, 50.0};
  const auto est = c_q_estimate(standard_form(2, 1), -1.0, 1.0, grid, 2000000, 5);
  EXPECT_NEAR(est.c_q, oracle::kConeSurfaceConstant, 0.10 * oracle::kConeSurfaceConstant);
  ASSERT_EQ(est.rows.size(), grid.size());
  for (const auto& row : est.rows) EXPECT_NEAR(row.residual, row.normalized - est.c_q, 1e-12);
}

TEST(CountingConstant, ShellVolumeScalesLinearlyInThreeDimensions) {
  const auto form = random_form(2, 1, 30);
  const std::vector<double> grid{10.0, 20.0, 40.0, 80.0};
  const auto est = c_q_estimate(form, -1.0, 1.0, grid, 2000000, 8);
  const double ratio = est.rows[3].volume / est.rows[2].volume;
  EXPECT_GT(ratio, 2.0 * 0.9 - 3.0 * ratio * est.rows[3].std_error / est.rows[3].volume);
  EXPECT_LT(ratio, 2.0 * 1.1 + 3.0 * ratio * est.rows[3].std_error / est.rows[3].volume);
}

TEST(CountingConstant, ContinuousInTheForm) {
  Matrix g = Matrix::Identity(3, 3);
  g(0, 1) = 0.005;
  const auto base = random_form(2, 1, 2);
  const std::vector<double> grid{5.0, 10.0, 15.0, 20.0};
  const auto a = c_q_estimate(base, -1.0, 1.0, grid, 2000000, 3);
  const auto b = c_q_estimate(deform(base, g), -1.0, 1.0, grid, 2000000, 4);
  EXPECT_NEAR(a.c_q, b.c_q, 0.05 * a.c_q);
}

TEST(CountingConstant, ValidatesGrid) {
  const std::vector<double> short_grid{1.0, 2.0, 3.0};
  const std::vector<double> unsorted{1.0, 3.0, 2.0, 4.0};
  EXPECT_THROW(c_q_estimate(standard_form(2, 1), 0.0, 1.0, short_grid, 10000, 1), ValidationError);
  EXPECT_THROW(c_q_estimate(standard_form(2, 1), 0.0, 1.0, unsorted, 10000, 1), ValidationError);
  EXPECT_THROW(c_q_estimate(standard_form(2, 1), 1.0, 1.0, unsorted, 10000, 1), ValidationError);
}

TEST(Stats, WelfordMatchesTwoPass) {
  std::vector<double> values;
  Engine engine = make_engine(1);
  std::normal_distribution<double> normal(1e6, 3.0);
  for (int i = 0; i < 1000; ++i) values.push_back(normal(engine));
  const auto s = summarize(values);
  const auto [mean, var] = oracle::mean_variance(values);
  EXPECT_NEAR(s.mean, mean, 1e-14 * std::abs(mean));
  EXPECT_NEAR(s.variance, var, 1e-6);
  EXPECT_EQ(s.trials, 1000u);
  EXPECT_DOUBLE_EQ(s.min, *std::min_element(values.begin(), values.end()));
}

TEST(Stats, MergeEqualsSequential) {
  RunningStats all;
  RunningStats left;
  RunningStats right;
  for (int i = 0; i < 100; ++i) {
    const double v = std::sin(i) * 10.0;
    all.add(v);
    (i < 37 ? left : right).add(v);
  }
  left.merge(right);
  EXPECT_NEAR(left.finish().mean, all.finish().mean, 1e-12);
  EXPECT_NEAR(left.finish().variance, all.finish().variance, 1e-10);
  EXPECT_DOUBLE_EQ(binomial_std_error(0.25, 100), std::sqrt(0.25 * 0.75 / 100));
}
