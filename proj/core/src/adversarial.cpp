#include "genlab/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "genlab/errors.hpp"

namespace genlab::gan {

namespace {

constexpr double kLogitClamp = 15.0;

nn::Mlp scalar_net(std::size_t in, std::size_t out, std::vector<std::size_t> hidden, Rng& rng,
                   nn::Activation act) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return nn::Mlp(std::move(w), rng, {act, nn::Activation::kIdentity, 1.0});
}

ad::Var check_column(const ad::Var& v, std::size_t rows, const char* op) {
  if (v.cols() != 1 || v.rows() != rows) {
    throw DimensionError(std::string(op) + ": network must map each row to one value, got " +
                         v.value().shape_string());
  }
  return v;
}

}  // namespace

Generator::Generator(std::size_t latent_dim, std::size_t data_dim, std::vector<std::size_t> hidden, Rng& rng,
                     nn::Activation activation)
    : net_(scalar_net(latent_dim, data_dim, std::move(hidden), rng, activation)) {}

Generator::Generator(nn::Mlp net) : net_(std::move(net)) {}

ad::Var Generator::sample(std::size_t n, Rng& rng) const {
  return net_.forward(ad::constant(rng.normal(n, latent_dim())));
}

Tensor Generator::sample_values(std::size_t n, Rng& rng) const { return net_(rng.normal(n, latent_dim())); }

Discriminator::Discriminator(std::size_t data_dim, std::vector<std::size_t> hidden, Rng& rng,
                             nn::Activation activation)
    : net_(scalar_net(data_dim, 1, std::move(hidden), rng, activation)) {}

Discriminator::Discriminator(nn::Mlp net) : net_(std::move(net)) {
  require(net_.output_dim() == 1, "discriminator: output width must be 1");
}

ad::Var Discriminator::logits(const ad::Var& x) const { return net_.forward(x); }

Tensor Discriminator::prob(const Tensor& x) const {
  Tensor l = net_(x);
  for (double& v : l.data()) v = 1.0 / (1.0 + std::exp(-std::clamp(v, -kLogitClamp, kLogitClamp)));
  return l;
}

ScalarNet Discriminator::logit_fn() const {
  return [net = net_](const ad::Var& x) { return net.forward(x); };
}

Critic::Critic(std::size_t data_dim, std::vector<std::size_t> hidden, Rng& rng, nn::Activation activation)
    : net_(scalar_net(data_dim, 1, std::move(hidden), rng, activation)) {}

Critic::Critic(nn::Mlp net) : net_(std::move(net)) {
  require(net_.output_dim() == 1, "critic: output width must be 1");
}

ScalarNet Critic::fn() const {
  return [net = net_](const ad::Var& x) { return net.forward(x); };
}

ad::Var log_d(const ad::Var& logits) {
  return -ad::softplus(-ad::clamp(logits, -kLogitClamp, kLogitClamp));
}

ad::Var log_one_minus_d(const ad::Var& logits) {
  return -ad::softplus(ad::clamp(logits, -kLogitClamp, kLogitClamp));
}

ad::Var gan_value(const ScalarNet& logits, const ad::Var& real, const ad::Var& fake) {
  require(real.rows() > 0 && fake.rows() > 0, "gan_value: empty batch");
  const ad::Var lr = check_column(logits(real), real.rows(), "gan_value");
  const ad::Var lf = check_column(logits(fake), fake.rows(), "gan_value");
  return ad::mean(log_d(lr)) + ad::mean(log_one_minus_d(lf));
}

ad::Var nonsat_gen_loss(const ScalarNet& logits, const ad::Var& fake) {
  require(fake.rows() > 0, "nonsat_gen_loss: empty batch");
  return -ad::mean(log_d(check_column(logits(fake), fake.rows(), "nonsat_gen_loss")));
}

ad::Var minimax_gen_loss(const ScalarNet& logits, const ad::Var& fake) {
  require(fake.rows() > 0, "minimax_gen_loss: empty batch");
  return ad::mean(log_one_minus_d(check_column(logits(fake), fake.rows(), "minimax_gen_loss")));
}

double optimal_discriminator(const Density1d& p, const Density1d& q, double x) {
  const double a = p(x), b = q(x);
  require(a >= 0.0 && b >= 0.0, "optimal_discriminator: densities must be non-negative");
  require(a + b > 0.0, "optimal_discriminator: both densities vanish at x");
  return a / (a + b);
}

double js_divergence(const Density1d& p, const Density1d& q, const QuadratureGrid& grid) {
  require(grid.n >= 3 && grid.hi > grid.lo, "js_divergence: invalid grid");
  const double h = (grid.hi - grid.lo) / static_cast<double>(grid.n - 1);
  double mp = 0.0, mq = 0.0, kp = 0.0, kq = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.lo + h * static_cast<double>(i);
    const double w = (i == 0 || i + 1 == grid.n) ? 0.5 * h : h;
    const double a = p(x), b = q(x), m = 0.5 * (a + b);
    mp += w * a;
    mq += w * b;
    if (a > 0.0) kp += w * a * std::log(a / m);
    if (b > 0.0) kq += w * b * std::log(b / m);
  }
  if (std::abs(mp - 1.0) > 0.01 || std::abs(mq - 1.0) > 0.01) {
    throw NumericError("js_divergence: grid masses " + std::to_string(mp) + " and " + std::to_string(mq) +
                       " are not within 1% of 1; widen or refine the grid");
  }
  return 0.5 * kp + 0.5 * kq;
}

ad::Var wgan_value(const ScalarNet& critic, const ad::Var& real, const ad::Var& fake) {
  require(real.rows() > 0 && fake.rows() > 0, "wgan_value: empty batch");
  return ad::mean(check_column(critic(real), real.rows(), "wgan_value")) -
         ad::mean(check_column(critic(fake), fake.rows(), "wgan_value"));
}

ad::Var gradient_penalty(const ScalarNet& critic, const Tensor& real, const Tensor& fake, double lambda,
                         Rng& rng) {
  require(lambda >= 0.0, "gradient_penalty: lambda must be non-negative");
  check_same_shape(real, fake, "gradient_penalty");
  require(real.rows() > 0, "gradient_penalty: empty batch");
  Tensor mix(real.rows(), real.cols());
  for (std::size_t i = 0; i < real.rows(); ++i) {
    const double u = rng.uniform();
    for (std::size_t j = 0; j < real.cols(); ++j) mix(i, j) = u * real(i, j) + (1.0 - u) * fake(i, j);
  }
  const ad::Var x = ad::parameter(std::move(mix));
  const ad::Var f = check_column(critic(x), real.rows(), "gradient_penalty");
  const ad::Var xs[] = {x};
  const ad::Var g = ad::grad(ad::sum(f), xs, true)[0];
  const ad::Var norm = ad::sqrt(ad::sum_cols(ad::square(g)));
  return ad::mean(ad::square(norm - 1.0)) * lambda;
}

GanTraces train_gan(Generator& g, Discriminator& d, const Tensor& data, const GanOptions& options,
                    const nn::OptimizerConfig& opt, Rng& rng) {
  require(options.steps >= 1 && options.batch >= 1, "train_gan: steps and batch must be positive");
  require(data.rows() > 0 && data.cols() == g.data_dim(), "train_gan: data shape does not match the generator");
  nn::Optimizer opt_g(opt), opt_d(opt);
  const auto pg = g.parameters();
  const auto pd = d.parameters();
  const auto logits = d.logit_fn();
  GanTraces tr;
  for (std::size_t step = 0; step < options.steps; ++step) {
    const Tensor real = gather_rows(data, rng.indices(options.batch, data.rows()));
    const Tensor fake = g.sample_values(options.batch, rng);
    const ad::Var d_loss = -gan_value(logits, ad::constant(real), ad::constant(fake));
    if (!std::isfinite(d_loss.item())) throw NumericError("train_gan: non-finite discriminator loss");
    tr.d_loss.push_back(d_loss.item());
    opt_d.step(pd, ad::backward(d_loss));

    const ad::Var gen = g.sample(options.batch, rng);
    const ad::Var g_loss =
        options.loss == GenLoss::kNonSaturating ? nonsat_gen_loss(logits, gen) : minimax_gen_loss(logits, gen);
    if (!std::isfinite(g_loss.item())) throw NumericError("train_gan: non-finite generator loss");
    tr.g_loss.push_back(g_loss.item());
    opt_g.step(pg, ad::backward(g_loss));
  }
  return tr;
}

WganTraces train_wgan_gp(Generator& g, Critic& c, const Tensor& data, const WganOptions& options,
                         const nn::OptimizerConfig& opt, Rng& rng) {
  require(options.steps >= 1 && options.batch >= 1 && options.n_critic >= 1,
          "train_wgan_gp: steps, batch and n_critic must be positive");
  require(data.rows() > 0 && data.cols() == g.data_dim(), "train_wgan_gp: data shape does not match the generator");
  nn::Optimizer opt_g(opt), opt_c(opt);
  const auto pg = g.parameters();
  const auto pc = c.parameters();
  const auto f = c.fn();
  WganTraces tr;
  for (std::size_t step = 0; step < options.steps; ++step) {
    double value = 0.0;
    for (std::size_t k = 0; k < options.n_critic; ++k) {
      const Tensor real = gather_rows(data, rng.indices(options.batch, data.rows()));
      const Tensor fake = g.sample_values(options.batch, rng);
      const ad::Var v = wgan_value(f, ad::constant(real), ad::constant(fake));
      const ad::Var loss = gradient_penalty(f, real, fake, options.lambda, rng) - v;
      if (!std::isfinite(loss.item())) throw NumericError("train_wgan_gp: non-finite critic loss");
      value = v.item();
      opt_c.step(pc, ad::backward(loss));
    }
    tr.critic_value.push_back(value);
    const ad::Var gen = g.sample(options.batch, rng);
    const ad::Var g_loss = -ad::mean(f(gen));
    if (!std::isfinite(g_loss.item())) throw NumericError("train_wgan_gp: non-finite generator loss");
    tr.g_loss.push_back(g_loss.item());
    opt_g.step(pg, ad::backward(g_loss));
  }
  return tr;
}

std::vector<double> fit_critic(Critic& c, const Tensor& real, const Tensor& fake, std::size_t steps,
                               std::size_t batch, double lambda, const nn::OptimizerConfig& opt, Rng& rng) {
  require(real.rows() > 0 && fake.rows() > 0, "fit_critic: empty sample set");
  nn::Optimizer o(opt);
  const auto pc = c.parameters();
  const auto f = c.fn();
  std::vector<double> trace;
  for (std::size_t step = 0; step < steps; ++step) {
    const Tensor r = gather_rows(real, rng.indices(batch, real.rows()));
    const Tensor q = gather_rows(fake, rng.indices(batch, fake.rows()));
    const ad::Var v = wgan_value(f, ad::constant(r), ad::constant(q));
    const ad::Var loss = gradient_penalty(f, r, q, lambda, rng) - v;
    if (!std::isfinite(loss.item())) throw NumericError("fit_critic: non-finite loss");
    trace.push_back(v.item());
    o.step(pc, ad::backward(loss));
  }
  return trace;
}

GaussianKde::GaussianKde(std::vector<double> samples) : samples_(std::move(samples)) {
  require(samples_.size() >= 2, "kde: need at least two samples");
  double m = 0.0;
  for (double v : samples_) m += v;
  m /= static_cast<double>(samples_.size());
  double ss = 0.0;
  for (double v : samples_) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(samples_.size() - 1));
  require(sd > 0.0, "kde: samples have zero spread");
  h_ = 1.06 * sd * std::pow(static_cast<double>(samples_.size()), -0.2);
}

double GaussianKde::operator()(double x) const {
  const double norm = 1.0 / (static_cast<double>(samples_.size()) * h_ * std::sqrt(2.0 * std::numbers::pi));
  double acc = 0.0;
  for (double s : samples_) {
    const double u = (x - s) / h_;
    acc += std::exp(-0.5 * u * u);
  }
  return acc * norm;
}

}  // namespace genlab::gan
