#include <gtest/gtest.h>

#include <cmath>

#include "genlab/datasets.hpp"
#include "genlab/ddpm.hpp"
#include "genlab/errors.hpp"
#include "genlab/linalg.hpp"
#include "oracles.hpp"

using namespace genlab;
using namespace genlab::ddpm;
using ad::Var;

TEST(Schedule, HandProducts) {
  NoiseSchedule s({0.1, 0.2});
  EXPECT_DOUBLE_EQ(s.alpha(1), 0.9);
  EXPECT_DOUBLE_EQ(s.alpha(2), 0.8);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
  EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
  EXPECT_NEAR(s.beta_tilde(2), 1.0 / 14.0, 1e-15);
  EXPECT_EQ(s.beta_tilde(1), 0.0);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
}

TEST(Schedule, IdentityHoldsToMachinePrecision) {
  Rng rng(1);
  for (const auto& s : {make_schedule(100), make_schedule(1000, 1e-5, 0.05), make_schedule(7, 0.3, 0.9)}) {
    for (std::size_t t = 1; t <= s.steps(); ++t) {
      const double lhs = s.beta(t) + s.alpha(t) * (1.0 - s.alpha_bar(t - 1));
      EXPECT_NEAR(lhs, 1.0 - s.alpha_bar(t), 1e-15);
      const double simplified = lhs / (std::sqrt(s.alpha(t)) * (1.0 - s.alpha_bar(t)));
      // the quotient amplifies rounding by 1/(1 − ᾱ_t)
      EXPECT_NEAR(simplified, 1.0 / std::sqrt(s.alpha(t)), 1e-15 / (1.0 - s.alpha_bar(t)));
      if (t > 1) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
    }
  }
}

TEST(Schedule, ScaledScheduleEndsNearNoise) {
  EXPECT_GT(make_schedule(100).alpha_bar(100), 0.3);
  for (std::size_t T : {21u, 100u, 1000u}) EXPECT_LT(scaled_schedule(T).alpha_bar(T), 1e-4);
  EXPECT_EQ(scaled_schedule(1000).betas(), make_schedule(1000).betas());
  EXPECT_THROW(scaled_schedule(20), ContractError);
}

TEST(Schedule, BoundsRejected) {
  EXPECT_THROW(make_schedule(10, 0.0, 0.02), ContractError);
  EXPECT_THROW(make_schedule(10, 0.03, 0.02), ContractError);
  EXPECT_THROW(make_schedule(10, 1e-4, 1.0), ContractError);
  EXPECT_THROW(make_schedule(0), ContractError);
  EXPECT_THROW(NoiseSchedule({0.5, 1.2}), ContractError);
}

TEST(ForwardSample, Boundaries) {
  const auto s = make_schedule(10);
  Rng rng(2);
  const Tensor x0 = rng.normal(3, 2), eps = rng.normal(3, 2);
  EXPECT_EQ(forward_sample(s, x0, 0, eps), x0);
  EXPECT_LT(max_abs_diff(forward_sample(s, x0, 4, Tensor(3, 2)), x0 * std::sqrt(s.alpha_bar(4))), 1e-15);
  EXPECT_THROW(forward_sample(s, x0, 11, eps), ContractError);
  EXPECT_THROW(forward_sample(s, x0, 3, Tensor(2, 2)), DimensionError);
}

TEST(ForwardSample, MonteCarloMomentsAtEveryStep) {
  const auto s = make_schedule(10, 0.05, 0.3);
  Rng rng(3);
  const double x0 = 1.7;
  for (std::size_t t = 1; t <= 10; ++t) {
    const Tensor xt = forward_sample(s, Tensor(100000, 1, x0), t, rng.normal(100000, 1));
    const auto v = xt.values();
    const double m = std::sqrt(s.alpha_bar(t)) * x0, var = 1.0 - s.alpha_bar(t);
    EXPECT_NEAR(oracle::sample_mean(v), m, 0.02 * std::abs(m) + 0.01 * std::sqrt(var));
    EXPECT_NEAR(oracle::sample_var(v), var, 0.02 * var);
  }
}

TEST(ReversePosterior, CollapsesOnNoiselessTrajectory) {
  const auto s = make_schedule(50);
  Rng rng(4);
  const Tensor x0 = rng.normal(4, 3);
  for (std::size_t t : {2u, 10u, 50u}) {
    const Tensor xt = x0 * std::sqrt(s.alpha_bar(t));
    const auto post = reverse_posterior(s, xt, x0, t);
    EXPECT_LT(max_abs_diff(post.mean, x0 * std::sqrt(s.alpha_bar(t - 1))), 1e-12);
  }
  // first step: ᾱ₀ = 1 puts all weight on x0
  const Tensor xt = rng.normal(4, 3);
  const auto first = reverse_posterior(s, xt, x0, 1);
  EXPECT_LT(max_abs_diff(first.mean, x0), 1e-12);
  EXPECT_EQ(first.var, 0.0);
  EXPECT_THROW(reverse_posterior(s, xt, x0, 0), ContractError);
  EXPECT_THROW(reverse_posterior(s, xt, x0, 51), ContractError);
}

TEST(ReversePosterior, EpsFormAgrees) {
  const auto s = make_schedule(100);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = 1 + rng.index(100);
    const Tensor x0 = rng.normal(5, 2), eps = rng.normal(5, 2);
    const Tensor xt = forward_sample(s, x0, t, eps);
    EXPECT_LT(max_abs_diff(reverse_posterior(s, xt, x0, t).mean, reverse_posterior_from_eps(s, xt, eps, t)),
              1e-12);
  }
  const Tensor xt = rng.normal(2, 2);
  EXPECT_LT(max_abs_diff(reverse_posterior_from_eps(s, xt, Tensor(2, 2), 7), xt * (1.0 / std::sqrt(s.alpha(7)))),
            1e-15);
}

TEST(ReversePosterior, MatchesGridBayes) {
  const auto s = make_schedule(20, 0.01, 0.2);
  const double x0 = 0.8, xt = -0.4;
  for (std::size_t t : {2u, 9u, 20u}) {
    const auto post = reverse_posterior(s, Tensor::scalar(xt), Tensor::scalar(x0), t);
    // q(x_t | x_{t−1}) q(x_{t−1} | x0) on a grid of x_{t−1}
    const double lo = -8.0, hi = 8.0;
    const std::size_t n = 32000;
    const double h = (hi - lo) / n;
    std::vector<double> un(n + 1);
    double mass = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double y = lo + h * i;
      un[i] = oracle::normal_pdf(xt, std::sqrt(s.alpha(t)) * y, s.beta(t)) *
              oracle::normal_pdf(y, std::sqrt(s.alpha_bar(t - 1)) * x0, 1.0 - s.alpha_bar(t - 1));
      mass += (i == 0 || i == n ? 0.5 : 1.0) * un[i];
    }
    mass *= h;
    double worst = 0.0;
    for (std::size_t i = 0; i <= n; i += 5)
      worst = std::max(worst, std::abs(un[i] / mass - oracle::normal_pdf(lo + h * i, post.mean.item(), post.var)));
    EXPECT_LT(worst, 1e-4) << "t = " << t;
  }
}

TEST(EqualVarianceKl, ReducesToScaledSquaredDistance) {
  Rng rng(6);
  const Tensor a = rng.normal(1, 3), b = rng.normal(1, 3);
  const double var = 0.07;
  // full-covariance Gaussian KL with equal isotropic covariances
  const Tensor cov = Tensor::identity(3) * var;
  const double kl = linalg::kl_gaussian(a.values(), cov, b.values(), cov);
  EXPECT_NEAR(equal_variance_kl(a, b, var), kl, 1e-10);
  double mse = 0.0;
  for (std::size_t i = 0; i < 3; ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(equal_variance_kl(a, b, var), mse / (2 * var), 1e-15);
}

TEST(LossSimple, OraclePredictorGivesZero) {
  // one fixed data point c: ε = (x_t − √ᾱ_t c)/√(1 − ᾱ_t)
  const auto s = make_schedule(30);
  const Tensor c{{0.5, -1.0}};
  const Tensor x0 = matmul(Tensor(16, 1, 1.0), c);
  EpsPredictor oracle_net = [&](const Var& x, std::span<const std::size_t> t) {
    Tensor e = x.value();
    for (std::size_t i = 0; i < e.rows(); ++i)
      for (std::size_t j = 0; j < e.cols(); ++j)
        e(i, j) = (e(i, j) - std::sqrt(s.alpha_bar(t[i])) * c[j]) / std::sqrt(1.0 - s.alpha_bar(t[i]));
    return ad::constant(e);
  };
  Rng rng(7);
  EXPECT_NEAR(loss_simple(oracle_net, s, x0, rng).item(), 0.0, 1e-20);
}

TEST(LossSimple, ZeroPredictorGivesChiSquareMean) {
  const auto s = make_schedule(30);
  EpsPredictor zero = [](const Var& x, std::span<const std::size_t>) { return ad::constant(Tensor(x.rows(), x.cols())); };
  Rng rng(8);
  const double l = loss_simple(zero, s, rng.normal(100000, 3), rng).item();
  EXPECT_NEAR(l, 3.0, 0.05);
}

TEST(LossSimple, GradientOfTwoParameterNet) {
  const auto s = make_schedule(20);
  const Var a = ad::parameter(Tensor::scalar(0.3));
  const Var b = ad::parameter(Tensor::scalar(-0.2));
  EpsPredictor toy = [&](const Var& x, std::span<const std::size_t>) { return x * a + b; };
  Rng data_rng(9);
  const Tensor x0 = data_rng.normal(32, 2);
  auto loss = [&] {
    Rng rng(10);
    return loss_simple(toy, s, x0, rng);
  };
  const Var ps[] = {a, b};
  EXPECT_LT(ad::finite_diff_check(loss, ps), 1e-4);
}

TEST(EpsNet, TimeFeatures) {
  const std::size_t t[] = {0, 50, 100};
  const Tensor f = EpsNet::time_features(t, 100);
  EXPECT_EQ(f.cols(), EpsNet::kTimeFeatures);
  EXPECT_EQ(f(1, 0), 0.5);
  EXPECT_NEAR(f(1, 1), 1.0, 1e-15);            // sin(π/2)
  EXPECT_NEAR(f(2, 2), -1.0, 1e-15);           // cos(π)
  EXPECT_NEAR(f(1, 8), std::cos(4 * std::numbers::pi), 1e-12);
  Rng rng(11);
  EpsNet net(2, 100, {8}, rng);
  const std::size_t tt[] = {1, 2};
  EXPECT_THROW(net.forward(ad::constant(Tensor(3, 2)), tt), DimensionError);
}

TEST(Train, OneStepMovesParametersAndIsSeeded) {
  const auto s = make_schedule(20);
  auto run = [&] {
    Rng rng(12);
    EpsNet net(2, 20, {8}, rng);
    const Tensor before = net.net().weight(0).value();
    nn::Optimizer opt({nn::OptimizerKind::kAdam, 1e-2});
    const Tensor data = rng.normal(64, 2);
    const auto trace = train(net, s, data, {1, 16}, opt, rng);
    EXPECT_NE(net.net().weight(0).value(), before);
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, SmoothedLossDecreasesOnGaussianData) {
  const auto s = make_schedule(50);
  Rng rng(13);
  const Tensor data = rng.normal(2000, 2) * 0.3 + matmul(Tensor(2000, 1, 1.0), Tensor{{1.0, -1.0}});
  EpsNet net(2, 50, {32}, rng);
  nn::Optimizer opt({nn::OptimizerKind::kAdam, 2e-3});
  const auto trace = train(net, s, data, {800, 64}, opt, rng);
  const auto sm = smooth(trace);
  EXPECT_LT(sm.back(), 0.8 * sm[20]);
}

TEST(Sample, AnalyticEpsForStandardNormalData) {
  // data N(0, I): x_t ~ N(0, I) and E[ε | x_t] = √(1 − ᾱ_t) x_t
  const auto s = make_schedule(100);
  EpsPredictor exact = [&](const Var& x, std::span<const std::size_t> t) {
    Tensor e = x.value();
    for (std::size_t i = 0; i < e.rows(); ++i)
      for (double& v : e.row(i)) v *= std::sqrt(1.0 - s.alpha_bar(t[i]));
    return ad::constant(e);
  };
  Rng rng(14);
  const Tensor x = sample(exact, s, 20000, 2, rng, {true});
  const Tensor c = linalg::covariance(x);
  EXPECT_NEAR(c(0, 0), 1.0, 0.1);
  EXPECT_NEAR(c(1, 1), 1.0, 0.1);
  EXPECT_NEAR(c(0, 1), 0.0, 0.05);
}

TEST(Sample, DegenerateSingleStep) {
  const auto s = make_schedule(1);
  Rng rng(15);
  EpsNet net(3, 1, {4}, rng);
  const Tensor x = sample(net.predictor(), s, 10, 3, rng);
  EXPECT_EQ(x.rows(), 10u);
  EXPECT_TRUE(x.all_finite());
}

TEST(Sample, SeededDeterminism) {
  const auto s = make_schedule(10);
  Rng init(16);
  EpsNet net(2, 10, {4}, init);
  Rng a(3), b(3);
  EXPECT_EQ(sample(net.predictor(), s, 5, 2, a), sample(net.predictor(), s, 5, 2, b));
}
