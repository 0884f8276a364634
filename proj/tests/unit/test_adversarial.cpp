#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "genlab/adversarial.hpp"
#include "genlab/errors.hpp"
#include "oracles.hpp"

using namespace genlab;
using namespace genlab::gan;
using ad::Var;

namespace {

Density1d normal(double mean, double sd) {
  return [=](double x) { return oracle::normal_pdf(x, mean, sd * sd); };
}

// log N(x; m1, s²) − log N(x; m2, s²) as an autodiff map (shared variance).
ScalarNet gaussian_log_ratio(double m1, double m2, double s) {
  return [=](const Var& x) { return x * ((m1 - m2) / (s * s)) + (m2 * m2 - m1 * m1) / (2 * s * s); };
}

ScalarNet linear(double a, double b) {
  return [=](const Var& x) { return ad::matmul(x, ad::constant(Tensor{{a}, {b}})); };
}

}  // namespace

TEST(GanValue, CoinFlipAndPerfectDiscriminator) {
  const ScalarNet half = [](const Var& x) { return ad::sum_cols(x) * 0.0; };
  Rng rng(1);
  const Var real = ad::constant(rng.normal(10, 1)), fake = ad::constant(rng.normal(7, 1));
  EXPECT_NEAR(gan_value(half, real, fake).item(), -std::log(4.0), 1e-15);
  const ScalarNet sharp = [](const Var& x) { return x * 100.0; };
  const double v = gan_value(sharp, ad::constant(Tensor(5, 1, 1.0)), ad::constant(Tensor(5, 1, -1.0))).item();
  EXPECT_LT(v, 0.0);
  EXPECT_GT(v, -1e-6);
  EXPECT_TRUE(std::isfinite(gan_value(sharp, ad::constant(Tensor(1, 1, -1e6)), ad::constant(Tensor(1, 1, 1e6))).item()));
}

TEST(GanValue, AtOptimalDiscriminatorEqualsJsIdentity) {
  Rng rng(2);
  const std::size_t n = 400000;
  for (double shift : {0.0, 0.7, 1.5, 3.0}) {
    const Tensor real = rng.normal(n, 1), fake = rng.normal(n, 1) + Tensor(n, 1, shift);
    const double v = gan_value(gaussian_log_ratio(0.0, shift, 1.0), ad::constant(real), ad::constant(fake)).item();
    const double js = js_divergence(normal(0, 1), normal(shift, 1), {});
    EXPECT_NEAR(v, -std::log(4.0) + 2 * js, 1e-2) << shift;
  }
}

TEST(OptimalDiscriminator, HandValuesAndRange) {
  const auto p = normal(0.0, 1.0), q = normal(1.0, 0.5);
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    const double a = std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
    const double b = std::exp(-2.0 * (x - 1) * (x - 1)) / (0.5 * std::sqrt(2 * std::numbers::pi));
    const double d = optimal_discriminator(p, q, x);
    EXPECT_NEAR(d, a / (a + b), 1e-12);
    EXPECT_GT(d, 0.0);
    EXPECT_LT(d, 1.0);
    EXPECT_EQ(optimal_discriminator(p, p, x), 0.5);
  }
  EXPECT_GT(optimal_discriminator(p, q, -6.0), 1.0 - 1e-6);
  const Density1d zero = [](double) { return 0.0; };
  EXPECT_THROW(optimal_discriminator(zero, zero, 0.0), ContractError);
}

TEST(Js, IdentitySymmetryAndBound) {
  const auto p = normal(0.0, 1.0), q = normal(1.0, 0.7);
  EXPECT_NEAR(js_divergence(p, p, {}), 0.0, 1e-15);
  EXPECT_NEAR(js_divergence(p, q, {}), js_divergence(q, p, {}), 1e-12);
  const double far = js_divergence(normal(-5.0, 0.1), normal(5.0, 0.1), {});
  EXPECT_GT(far, std::log(2.0) - 1e-3);
  EXPECT_LE(far, std::log(2.0) + 1e-12);
  EXPECT_THROW(js_divergence(normal(0.0, 0.001), p, {}), NumericError);
}

TEST(GenLoss, NonSaturatingValues) {
  const ScalarNet id = [](const Var& x) { return x; };
  EXPECT_NEAR(nonsat_gen_loss(id, ad::constant(Tensor(3, 1))).item(), std::log(2.0), 1e-15);
  EXPECT_GE(nonsat_gen_loss(id, ad::constant(Tensor(1, 1, -5.0))).item(), 5.0);
  EXPECT_GT(nonsat_gen_loss(id, ad::constant(Tensor(1, 1, -100.0))).item(), 14.9);
}

TEST(GenLoss, NonSaturatingGradientDominatesWhereDRejects) {
  // D(θ) = sigmoid(θ) = 0.01
  const double theta = std::log(0.01 / 0.99);
  const ScalarNet id = [](const Var& x) { return x; };
  const Var a = ad::parameter(Tensor::scalar(theta)), b = ad::parameter(Tensor::scalar(theta));
  const double g_ns = ad::backward(nonsat_gen_loss(id, a)).of(a).item();
  const double g_mm = ad::backward(minimax_gen_loss(id, b)).of(b).item();
  EXPECT_NEAR(g_ns, -0.99, 1e-12);
  EXPECT_NEAR(g_mm, -0.01, 1e-12);
  EXPECT_GT(std::abs(g_ns), 10 * std::abs(g_mm));
}

TEST(WganValue, WorkedExampleAndConstantCritic) {
  const ScalarNet neg = [](const Var& x) { return x * -1.0; };
  EXPECT_EQ(wgan_value(neg, ad::constant(Tensor(4, 1)), ad::constant(Tensor(4, 1, 10.0))).item(), 10.0);
  const ScalarNet c = [](const Var& x) { return x * 0.0 + 3.5; };
  Rng rng(3);
  EXPECT_EQ(wgan_value(c, ad::constant(rng.normal(5, 1)), ad::constant(rng.normal(5, 1))).item(), 0.0);
  // shift invariance holds up to rounding of the two means
  const ScalarNet f = [](const Var& x) { return ad::tanh(x); };
  const ScalarNet g = [](const Var& x) { return ad::tanh(x) + 0.25; };
  const Var r = ad::constant(rng.normal(64, 1)), q = ad::constant(rng.normal(64, 1));
  EXPECT_NEAR(wgan_value(f, r, q).item(), wgan_value(g, r, q).item(), 1e-15);
}

TEST(GradientPenalty, LinearCritics) {
  Rng rng(4);
  const Tensor real = rng.normal(32, 2), fake = rng.normal(32, 2);
  EXPECT_EQ(gradient_penalty(linear(1.0, 0.0), real, fake, 10.0, rng).item(), 0.0);
  EXPECT_EQ(gradient_penalty(linear(0.0, -1.0), real, fake, 10.0, rng).item(), 0.0);
  EXPECT_LT(gradient_penalty(linear(0.6, 0.8), real, fake, 10.0, rng).item(), 1e-14);
  EXPECT_NEAR(gradient_penalty(linear(1.2, 1.6), real, fake, 10.0, rng).item(), 10.0, 1e-12);
  EXPECT_EQ(gradient_penalty(linear(1.2, 1.6), real, fake, 0.0, rng).item(), 0.0);
  EXPECT_THROW(gradient_penalty(linear(1.0, 0.0), real, fake, -1.0, rng), ContractError);
}

TEST(GradientPenalty, DifferentiableInCriticParameters) {
  Rng rng(5);
  const Critic c(2, {6}, rng);
  const Tensor real = rng.normal(8, 2), fake = rng.normal(8, 2);
  const auto params = c.parameters();
  auto loss = [&] {
    Rng r(11);
    return gradient_penalty(c.fn(), real, fake, 10.0, r);
  };
  EXPECT_LT(ad::finite_diff_check(loss, params), 1e-5);
}

namespace {

double fitted_point_mass_value(std::size_t dim, double b, std::uint64_t seed, const nn::OptimizerConfig& opt) {
  Rng rng(seed);
  Critic c(dim, {32}, rng);
  const Tensor real(256, dim, 0.0);
  Tensor fake(256, dim, 0.0);
  for (std::size_t i = 0; i < 256; ++i) fake(i, 0) = b;
  const auto trace = fit_critic(c, real, fake, 1500, 64, 10.0, opt, rng);
  double tail = 0.0;
  for (std::size_t i = trace.size() - 100; i < trace.size(); ++i) tail += trace[i] / 100.0;
  return tail;
}

}  // namespace

TEST(Wgan, CriticOnPointMassesEstimatesDistance) {
  // Along the segment the penalised optimum has slope 1 + |a−b|/(2λ).
  const double lambda = 10.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_NEAR(fitted_point_mass_value(2, 1.0, seed, {}), 1.0, 0.1);
    const double b = 2.5;
    EXPECT_NEAR(fitted_point_mass_value(2, b, seed, {}), b * (1 + b / (2 * lambda)), 0.02 * b);
  }
}

TEST(Wgan, OneDimensionalCriticCanSettleInMirroredWell) {
  // In 1-D the two-sided penalty has wells at f' = ±1 and a barrier at f' = 0; a
  // critic initialised with the wrong slope sign stays at f' = 1 − b/(2λ) > 0.
  const double b = 2.5, lambda = 10.0;
  EXPECT_NEAR(fitted_point_mass_value(1, b, 1, {}), -b * (1 - b / (2 * lambda)), 0.02 * b);
}

TEST(Wgan, GeneratorMatchesShiftedGaussianMean) {
  // Two dimensions: the critic gradient can rotate instead of crossing zero norm.
  Rng rng(1);
  Tensor data = rng.normal(5000, 2);
  for (std::size_t i = 0; i < data.rows(); ++i) data(i, 0) += 3.0;
  Generator g(2, 2, {16}, rng);
  Critic c(2, {32}, rng);
  WganOptions o;
  o.steps = 3000;
  o.batch = 64;
  train_wgan_gp(g, c, data, o, {nn::OptimizerKind::kAdam, 1e-3, 0.5, 0.9}, rng);
  const Tensor m = column_means(g.sample_values(20000, rng));
  EXPECT_NEAR(m[0], 3.0, 0.3);
  EXPECT_NEAR(m[1], 0.0, 0.3);
}

TEST(Gan, TrainedDiscriminatorApproachesOptimum) {
  // fixed generator: a known pool of fake samples; p_θ estimated by KDE
  Rng rng(8);
  const Tensor fake_pool = rng.normal(20000, 1) * 0.8 + Tensor(20000, 1, 0.6);
  const Tensor real_pool = rng.normal(20000, 1);
  Discriminator d(1, {32, 32}, rng);
  nn::Optimizer opt({nn::OptimizerKind::kAdam, 2e-3});
  const auto params = d.parameters();
  for (int step = 0; step < 3000; ++step) {
    const Var r = ad::constant(gather_rows(real_pool, rng.indices(256, 20000)));
    const Var f = ad::constant(gather_rows(fake_pool, rng.indices(256, 20000)));
    opt.step(params, ad::backward(-gan_value(d.logit_fn(), r, f)));
  }
  const GaussianKde kde(fake_pool.values());
  const auto p = normal(0.0, 1.0);
  double mae = 0.0;
  int count = 0;
  for (double x = -2.0; x <= 2.0 + 1e-12; x += 0.1, ++count)
    mae += std::abs(d.prob(Tensor{{x}})[0] - optimal_discriminator(p, kde, x));
  EXPECT_LT(mae / count, 0.05);
}

TEST(Gan, TwoModeTargetCoverageBestOfThree) {
  // Mode collapse is expected on some seeds; only the best seed is asserted.
  double best = 0.0;
  for (std::uint64_t seed : {9u, 10u, 11u}) {
    Rng rng(seed);
    Tensor data = rng.normal(4000, 1) * 0.5;
    for (std::size_t i = 0; i < data.rows(); ++i) data(i, 0) += i % 2 ? 2.0 : -2.0;
    Generator g(1, 1, {32, 32}, rng);
    Discriminator d(1, {32, 32}, rng);
    GanOptions o;
    o.steps = 2000;
    o.batch = 64;
    train_gan(g, d, data, o, {nn::OptimizerKind::kAdam, 2e-3}, rng);
    const auto s = g.sample_values(4000, rng).values();
    double left = 0, right = 0;
    for (double v : s) left += std::abs(v + 2.0) <= 1.0, right += std::abs(v - 2.0) <= 1.0;
    const double worst = std::min(left, right) / static_cast<double>(s.size());
    RecordProperty("seed_" + std::to_string(seed), std::to_string(worst));
    best = std::max(best, worst);
  }
  EXPECT_GE(best, 0.10);
}

TEST(Gan, TrainingIsSeededDeterministic) {
  auto run = [] {
    Rng rng(12);
    Generator g(2, 1, {8}, rng);
    Discriminator d(1, {8}, rng);
    GanOptions o;
    o.steps = 20;
    o.batch = 16;
    o.loss = GenLoss::kMinimax;
    return train_gan(g, d, rng.normal(100, 1), o, {}, rng).g_loss;
  };
  EXPECT_EQ(run(), run());
}

TEST(Kde, SilvermanBandwidthAndNormalisation) {
  Rng rng(13);
  const auto s = rng.normal(1000, 1).values();
  const GaussianKde kde(s);
  const double sd = std::sqrt(oracle::sample_var(s) * 1000.0 / 999.0);
  EXPECT_NEAR(kde.bandwidth(), 1.06 * sd * std::pow(1000.0, -0.2), 1e-14);
  EXPECT_NEAR(oracle::trapezoid([&](double x) { return kde(x); }, -10, 10, 4000), 1.0, 1e-6);
  EXPECT_THROW(GaussianKde({1.0}), ContractError);
}

TEST(Discriminator, ProbabilitiesStayInsideUnitInterval) {
  Rng rng(14);
  Discriminator d(1, {4}, rng);
  for (auto& p : d.parameters()) p.assign(p.value() * 1000.0);
  const Tensor pr = d.prob(Tensor{{-50.0}, {50.0}, {0.3}});
  for (double v : pr.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}
