#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "genlab/density_lab.hpp"
#include "genlab/errors.hpp"
#include "genlab/parallel.hpp"
#include "oracles.hpp"

using namespace genlab;
using namespace genlab::lab;

TEST(Brownian, StartsAtZeroAndHasUnitVarianceAtOne) {
  Rng rng(1);
  const Tensor w = brownian_paths(50000, 1.0, 20, rng);
  std::vector<double> w1(w.rows()), wh(w.rows());
  double cov = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    ASSERT_EQ(w(i, 0), 0.0);
    w1[i] = w(i, 20);
    wh[i] = w(i, 6);  // t = 0.3
    cov += w1[i] * wh[i];
  }
  EXPECT_NEAR(oracle::sample_var(w1), 1.0, 0.03);
  // cov(W_s, W_t) = min(s, t)
  EXPECT_NEAR(cov / static_cast<double>(w.rows()), 0.3, 0.05 * 0.3);
}

TEST(Brownian, PathsIndependentOfThreadCount) {
  Rng rng(2);
  set_num_threads(1);
  const Tensor a = brownian_paths(3000, 1.0, 100, rng);
  set_num_threads(3);
  const Tensor b = brownian_paths(3000, 1.0, 100, rng);
  set_num_threads(1);
  EXPECT_EQ(a, b);
}

TEST(Ou, ZeroNoiseIsDeterministicContraction) {
  Rng rng(3);
  const auto path = ou_simulate(1.5, 0.0, 2.0, 1.0, 1e-3, rng);
  EXPECT_NEAR(path.back(), 2.0 * std::exp(-1.5), 0.01 * 2.0 * std::exp(-1.5));
}

TEST(Ou, StationaryVarianceMonteCarlo) {
  Rng rng(4);
  const double alpha = 1.0, sigma = std::sqrt(2.0);
  std::vector<double> finals(20000);
  for (auto& v : finals) v = ou_simulate(alpha, sigma, 3.0, 8.0, 1e-2, rng).back();
  EXPECT_NEAR(oracle::sample_var(finals), sigma * sigma / (2 * alpha), 0.03);
  EXPECT_NEAR(ou_analytic_moments(alpha, sigma, 3.0, 1e6).var, 1.0, 1e-15);
  EXPECT_NEAR(ou_analytic_moments(2.0, 1.0, 3.0, 0.5).mean, 3.0 * std::exp(-1.0), 1e-15);
}

TEST(Ou, StabilityBound) {
  Rng rng(5);
  EXPECT_THROW(ou_simulate(2.0, 1.0, 0.0, 1.0, 0.5, rng), ContractError);
  EXPECT_THROW(ou_simulate(0.0, 1.0, 0.0, 1.0, 0.1, rng), ContractError);
  EXPECT_THROW(ou_simulate(1.0, -1.0, 0.0, 1.0, 0.1, rng), ContractError);
}

TEST(Ou, EulerWeakErrorIsFirstOrder) {
  // E[X_T] under Euler is x0 (1 − αΔt)^n exactly, so the noiseless path measures the weak error
  std::vector<double> dts = {0.04, 0.02, 0.01, 0.005, 0.0025};
  std::vector<double> errs;
  for (double dt : dts) {
    Rng rng(6);
    errs.push_back(std::abs(ou_simulate(1.0, 0.0, 1.0, 2.0, dt, rng).back() - std::exp(-2.0)));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double slope = std::log(errs[i - 1] / errs[i]) / std::log(2.0);
    EXPECT_GE(slope, 0.7);
    EXPECT_LE(slope, 1.3);
  }
}

TEST(EulerMaruyama, ZeroDriftUnitDiffusionIsBrownian) {
  Rng rng(7);
  Sde1d sde{[](double, double) { return 0.0; }, [](double) { return 1.0; }};
  std::vector<double> finals(50000);
  for (auto& v : finals) v = euler_maruyama(sde, 0.0, 2.0, 0.1, rng).back();
  EXPECT_NEAR(oracle::sample_var(finals), 2.0, 0.03 * 2.0);
}

TEST(EulerMaruyama, NoDiffusionConstantPath) {
  Rng rng(8);
  Sde1d sde{[](double, double) { return 0.0; }, [](double) { return 0.0; }};
  for (double v : euler_maruyama(sde, 1.25, 1.0, 0.01, rng)) EXPECT_EQ(v, 1.25);
}

TEST(EulerMaruyama, OuDriftReproducesOuSimulate) {
  Rng a(9), b(9);
  Sde1d sde{[](double x, double) { return -0.7 * x; }, [](double) { return 0.4; }};
  EXPECT_EQ(euler_maruyama(sde, 1.0, 3.0, 0.01, a), ou_simulate(0.7, 0.4, 1.0, 3.0, 0.01, b));
}

TEST(EulerMaruyama, BlowUpIsNumericError) {
  Rng rng(10);
  Sde1d sde{[](double x, double) { return x * x * x; }, [](double) { return 0.0; }};
  EXPECT_THROW(euler_maruyama(sde, 10.0, 100.0, 0.1, rng), NumericError);
}

TEST(FokkerPlanck, PureDiffusionMatchesGaussianConvolution) {
  Grid1d grid;
  const double s0 = 0.3, T = 0.5;
  const auto p0 = tabulate(grid, [&](double x) { return oracle::normal_pdf(x, 0.0, s0 * s0); });
  const auto p = fokker_planck_1d([](double) { return 0.0; }, 1.0, grid, p0, T);
  const auto expect = tabulate(grid, [&](double x) { return oracle::normal_pdf(x, 0.0, s0 * s0 + T); });
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p[i] - expect[i]));
  EXPECT_LT(worst, 1e-3);
  // width² grows by g² t
  double m2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m2 += grid.x(i) * grid.x(i) * p[i] * grid.dx();
  EXPECT_NEAR(m2, s0 * s0 + T, 0.02 * (s0 * s0 + T));
  EXPECT_NEAR(grid_mass(grid, p), grid_mass(grid, p0), 1e-6 * T);
}

TEST(FokkerPlanck, OuRelaxesToStandardNormal) {
  Grid1d grid;
  const auto p0 = tabulate(grid, [](double x) { return oracle::normal_pdf(x, 2.5, 0.25); });
  const auto p = fokker_planck_1d([](double x) { return -x; }, std::sqrt(2.0), grid, p0, 10.0);
  const auto target = tabulate(grid, [](double x) { return oracle::normal_pdf(x, 0.0, 1.0); });
  EXPECT_LT(grid_l1(grid, p, target), 0.02);
  EXPECT_NEAR(grid_mass(grid, p), grid_mass(grid, p0), 1e-6 * 10.0);
}

TEST(FokkerPlanck, LangevinDriftKeepsTargetStationary) {
  Grid1d grid;
  const auto p0 = tabulate(grid, [](double x) { return oracle::normal_pdf(x, 0.0, 1.0); });
  const auto p = fokker_planck_1d([](double x) { return -x; }, std::sqrt(2.0), grid, p0, 1.0);
  EXPECT_LT(grid_l1(grid, p, p0), 0.01);
}

TEST(FokkerPlanck, StabilityBoundsEnforced) {
  Grid1d grid;
  grid.dt = 1e-2;
  const auto p0 = tabulate(grid, [](double x) { return oracle::normal_pdf(x, 0.0, 1.0); });
  EXPECT_THROW(fokker_planck_1d([](double) { return 0.0; }, 1.0, grid, p0, 1.0), ContractError);
  Grid1d g2;
  g2.dt = 4e-3;
  EXPECT_THROW(fokker_planck_1d([](double x) { return -10 * x; }, 0.1, g2, p0, 1.0), ContractError);
  Grid1d tiny;
  tiny.n_points = 2;
  EXPECT_THROW(tiny.validate(1.0), ContractError);
}

TEST(Liouville, ContractionAndConstantFlow) {
  const double alpha = 0.8, T = 2.0, dt = 1e-3;
  const std::size_t n = static_cast<std::size_t>(T / dt) + 1;
  Tensor traj(n, 1);
  for (std::size_t k = 0; k < n; ++k) traj(k, 0) = 1.5 * std::exp(-alpha * dt * k);
  EXPECT_NEAR(liouville_logdensity_delta([&](std::span<const double>, double) { return -alpha; }, traj, dt),
              alpha * T, 1e-12);
  EXPECT_EQ(liouville_logdensity_delta([](std::span<const double>, double) { return 0.0; }, traj, dt), 0.0);
}

TEST(Liouville, DiagonalFlowIn2d) {
  const double a1 = 0.5, a2 = 1.25, T = 1.0, dt = 1e-3;
  const std::size_t n = 1001;
  Tensor traj(n, 2);
  for (std::size_t k = 0; k < n; ++k) {
    traj(k, 0) = std::exp(-a1 * dt * k);
    traj(k, 1) = -std::exp(-a2 * dt * k);
  }
  const double got =
      liouville_logdensity_delta([&](std::span<const double>, double) { return -(a1 + a2); }, traj, dt);
  EXPECT_NEAR(got, (a1 + a2) * T, 1e-12);
}

TEST(Liouville, MatchesChangeOfVariablesForLinearFlow) {
  // dx/dt = −αx pushes N(m, s²) to N(m e^{−αT}, s² e^{−2αT}); log p rises by αT along a trajectory
  const double alpha = 0.6, T = 1.5, dt = 1e-4, x0 = 0.7, m = 0.2, s = 1.1;
  const std::size_t n = static_cast<std::size_t>(std::llround(T / dt)) + 1;
  Tensor traj(n, 1);
  for (std::size_t k = 0; k < n; ++k) traj(k, 0) = x0 * std::exp(-alpha * dt * k);
  const double before = std::log(oracle::normal_pdf(x0, m, s * s));
  const double after = std::log(oracle::normal_pdf(traj(n - 1, 0), m * std::exp(-alpha * T),
                                                   s * s * std::exp(-2 * alpha * T)));
  EXPECT_NEAR(liouville_logdensity_delta([&](std::span<const double>, double) { return -alpha; }, traj, dt),
              after - before, 1e-9);
}

TEST(MatrixExp, DiagonalClosedFormAndSeries) {
  const Tensor a{{-1.0, 0.0}, {0.0, -2.0}};
  EXPECT_EQ(matrix_exp_diag(a, 0.0), Tensor::identity(2));
  const Tensor e = matrix_exp_diag(a, 1.0);
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-16);
  EXPECT_NEAR(e(1, 1), std::exp(-2.0), 1e-16);
  EXPECT_LT(max_abs_diff(matrix_exp_series(a, 1.0, 20), e), 1e-10);
  EXPECT_THROW(matrix_exp_diag(Tensor{{1, 1}, {0, 1}}, 1.0), ContractError);
}
