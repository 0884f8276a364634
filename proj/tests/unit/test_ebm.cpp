#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "genlab/ebm.hpp"
#include "genlab/errors.hpp"
#include "oracles.hpp"

using namespace genlab;
using namespace genlab::ebm;
using ad::Var;

namespace {

const EnergyFn kQuadratic = [](const Var& x) { return ad::sum_cols(ad::square(x)) * 0.5; };
const EnergyFn kDoubleWell = [](const Var& x) { return ad::square(ad::square(x) - 1.0); };

EnergyFn shifted(const EnergyFn& e, double c) {
  return [e, c](const Var& x) { return e(x) + c; };
}

score::ScoreFn score_of(const EnergyFn& e) {
  return [e](const Var& x) {
    const Var xs[] = {x};
    return -ad::grad(ad::sum(e(x)), xs, true)[0];
  };
}

}  // namespace

TEST(UnnormLogPdf, QuadraticValuesAndShift) {
  const Tensor lp = unnorm_logpdf(kQuadratic, Tensor{{0.0}, {1.0}});
  EXPECT_EQ(lp[0] - lp[1], 0.5);
  Rng rng(1);
  const Tensor x = rng.normal(20, 2);
  const EnergyNet net(2, {8}, rng);
  const Tensor a = unnorm_logpdf(net.fn(), x), b = unnorm_logpdf(shifted(net.fn(), 0.75), x);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(b[i], a[i] - 0.75, 1e-14);
  // differences are preserved exactly for a power-of-two shift on these magnitudes
  const Tensor c = unnorm_logpdf(shifted(kQuadratic, 8.0), Tensor{{0.0}, {1.0}});
  EXPECT_EQ(c[0] - c[1], 0.5);
}

TEST(UnnormLogPdf, PartitionFunctionByQuadrature) {
  auto f = [](double x) { return std::exp(unnorm_logpdf(kQuadratic, Tensor{{x}})[0]); };
  EXPECT_NEAR(oracle::trapezoid(f, -12, 12, 4000), std::sqrt(2 * std::numbers::pi), 1e-6);
}

TEST(Score, QuadraticAndGaussianCrossCheck) {
  Rng rng(2);
  const Tensor x = rng.normal(10, 3);
  EXPECT_LT(max_abs_diff(ebm_score(kQuadratic, x), x * -1.0), 1e-15);
  const double mu = 0.7, var = 2.5;
  const EnergyFn neg_log_normal = [&](const Var& v) {
    return ad::square(v - mu) * (0.5 / var) + 0.5 * std::log(2 * std::numbers::pi * var);
  };
  for (double p : {-2.0, 0.0, 0.3, 4.0}) {
    const double m[] = {mu}, q[] = {p};
    EXPECT_NEAR(ebm_score(neg_log_normal, Tensor{{p}})[0], score::gaussian_score(m, Tensor{{var}}, q)[0], 1e-10);
  }
}

TEST(Score, RandomNetMatchesFiniteDifferences) {
  Rng rng(3);
  const EnergyNet net(2, {16, 16}, rng);
  const Tensor x = rng.normal(5, 2);
  const Tensor s = ebm_score(net.fn(), x);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      Tensor a = x, b = x;
      a(i, j) += h;
      b(i, j) -= h;
      const double fd = (unnorm_logpdf(net.fn(), a)[i] - unnorm_logpdf(net.fn(), b)[i]) / (2 * h);
      EXPECT_NEAR(s(i, j), fd, 1e-5);
    }
}

TEST(Shift, EverythingButTheValueIsBitIdentical) {
  Rng rng(4);
  const EnergyNet net(2, {8}, rng);
  const EnergyFn e = net.fn(), e2 = shifted(e, 3.25);
  const Tensor x = rng.normal(16, 2), y = rng.normal(16, 2);
  EXPECT_EQ(ebm_score(e, x), ebm_score(e2, x));
  const auto params = net.parameters();
  const auto g1 = contrastive_grad(e, params, x, y), g2 = contrastive_grad(e2, params, x, y);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g1[i], g2[i]);
  EXPECT_EQ(sm_energy_objective(e, x), sm_energy_objective(e2, x));
  Rng a(5), b(5);
  EXPECT_EQ(ebm_langevin(e, x, 50, 0.01, a), ebm_langevin(e2, x, 50, 0.01, b));
}

TEST(Langevin, QuadraticEnergyMoments) {
  Rng rng(6);
  score::LangevinOptions opt;
  opt.burn_in = 5000;
  opt.keep_chain = true;
  const auto v = ebm_langevin(kQuadratic, Tensor(64, 1), 25000, 1e-3, rng, opt).values();
  EXPECT_LT(std::abs(oracle::sample_mean(v)), 0.05);
  EXPECT_GT(oracle::sample_var(v), 0.9);
  EXPECT_LT(oracle::sample_var(v), 1.1);
}

TEST(Langevin, NoiselessChainDescendsConvexEnergy) {
  Rng rng(7);
  score::LangevinOptions opt;
  opt.noise = false;
  opt.keep_chain = true;
  const EnergyFn e = [](const Var& x) {
    return ad::sum_cols(ad::square(x) * ad::constant(Tensor{{1.0, 4.0}})) + ad::sum_cols(ad::exp(x)) * 0.1;
  };
  const Tensor chain = ebm_langevin(e, Tensor{{2.0, -1.5}}, 100, 0.05, rng, opt);
  const Tensor energies = unnorm_logpdf(e, chain);
  for (std::size_t i = 1; i < energies.rows(); ++i) EXPECT_GE(energies[i], energies[i - 1]);
}

TEST(Langevin, DoubleWellVisitsBothWells) {
  Rng rng(8);
  Tensor x0(400, 1);
  for (auto& v : x0.data()) v = rng.uniform(-2.0, 2.0);
  score::LangevinOptions opt;
  opt.burn_in = 1000;
  opt.keep_chain = true;
  const auto v = ebm_langevin(kDoubleWell, x0, 5000, 0.01, rng, opt).values();
  double left = 0, right = 0;
  for (double s : v) left += std::abs(s + 1.0) <= 0.5, right += std::abs(s - 1.0) <= 0.5;
  EXPECT_GE(left / v.size(), 0.15);
  EXPECT_GE(right / v.size(), 0.15);
}

TEST(Contrastive, IdenticalBatchesCancel) {
  Rng rng(9);
  const EnergyNet net(2, {8}, rng);
  const Tensor x = rng.normal(10, 2);
  const auto params = net.parameters();
  for (const auto& g : contrastive_grad(net.fn(), params, x, x)) EXPECT_EQ(max_abs(g), 0.0);
  EXPECT_THROW(contrastive_grad(net.fn(), params, Tensor(0, 2), x), ContractError);
}

TEST(Contrastive, GaussianFamilyGradientVanishesAtMle) {
  // E(x) = x²/(2v); the zero-mean MLE is v̂ = mean x² and dE/dv = −x²/(2v²)
  Rng rng(10);
  const Tensor data = rng.normal(5000, 1) * 1.3;
  double v_hat = 0.0;
  for (double x : data.values()) v_hat += x * x / data.rows();
  const Var v = ad::parameter(Tensor::scalar(v_hat));
  const EnergyFn e = [&](const Var& x) { return ad::square(x) / (v * 2.0); };
  const Tensor model = ebm_langevin(e, rng.normal(5000, 1) * std::sqrt(v_hat), 2000, 0.005 * v_hat, rng);
  const Var vs[] = {v};
  const double g = contrastive_grad(e, vs, data, model)[0].item();
  // both phases are means of x²/(2v²) over 5000 points; Var(x²) = 2v² for each
  const double se = std::sqrt(2.0 * 2 * v_hat * v_hat / 5000.0) / (2 * v_hat * v_hat);
  EXPECT_LT(std::abs(g), 3 * se);
}

TEST(Contrastive, MisspecifiedVarianceMovesTowardData) {
  int correct = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const Tensor data = rng.normal(500, 1);
    const double guess = seed % 2 ? 0.5 : 2.0;
    const Var v = ad::parameter(Tensor::scalar(guess));
    const EnergyFn e = [&](const Var& x) { return ad::square(x) / (v * 2.0); };
    const Tensor model = ebm_langevin(e, rng.normal(500, 1) * std::sqrt(guess), 500, 0.01 * guess, rng);
    const Var vs[] = {v};
    const double g = contrastive_grad(e, vs, data, model)[0].item();
    correct += (guess < 1.0) == (g > 0.0);
  }
  EXPECT_EQ(correct, 20);
}

TEST(ScoreMatching, QuadraticEnergyAnalyticValue) {
  Rng rng(11);
  EXPECT_NEAR(sm_energy_objective(kQuadratic, rng.normal(100000, 1)), -0.5, 0.01);
  const EnergyFn constant = [](const Var& x) { return ad::sum_cols(x) * 0.0 + 2.0; };
  EXPECT_EQ(sm_energy_objective(constant, rng.normal(10, 2)), 0.0);
  EXPECT_THROW(sm_energy_objective(kQuadratic, Tensor(2, 9)), ContractError);
}

TEST(ScoreMatching, EqualsExactObjectiveOfNegativeEnergyGradient) {
  for (std::size_t d : {1u, 2u, 4u}) {
    Rng rng(12 + d);
    const EnergyNet net(d, {16}, rng);
    const Tensor x = rng.normal(40, d);
    EXPECT_NEAR(sm_energy_objective(net.fn(), x), score::sm_objective_exact(score_of(net.fn()), x), 1e-10);
  }
}

TEST(Training, ContrastiveRecoversGaussianScale) {
  Rng rng(13);
  const Tensor data = rng.normal(4000, 1) * 1.5;
  const Var log_v = ad::parameter(Tensor::scalar(0.0));
  const EnergyFn e = [&](const Var& x) { return ad::square(x) * ad::exp(-log_v) * 0.5; };
  nn::Optimizer opt({nn::OptimizerKind::kAdam, 0.02});
  const Var ps[] = {log_v};
  Tensor chains = rng.normal(256, 1);
  for (int step = 0; step < 400; ++step) {
    chains = ebm_langevin(e, chains, 20, 0.05, rng);
    auto g = contrastive_grad(e, ps, gather_rows(data, rng.indices(256, data.rows())), chains);
    g[0] = g[0] * -1.0;  // descend the negative log-likelihood
    opt.step(ps, std::span<const Tensor>(g));
  }
  EXPECT_NEAR(std::exp(log_v.item()), 2.25, 0.2);
}

TEST(Training, TrainContrastiveTraceAndDeterminism) {
  auto run = [] {
    Rng rng(14);
    EnergyNet net(2, {16}, rng);
    const Tensor data = rng.normal(500, 2);
    TrainOptions o;
    o.steps = 30;
    o.batch = 32;
    o.langevin_steps = 10;
    nn::Optimizer opt({nn::OptimizerKind::kAdam, 1e-3});
    return train_contrastive(net, data, o, opt, rng);
  };
  const auto a = run();
  EXPECT_EQ(a.size(), 30u);
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(a, run());
}
