#include "genlab/ddpm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "genlab/errors.hpp"

namespace genlab::ddpm {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  require(!beta_.empty(), "noise schedule: need at least one step");
  double ab = 1.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    const double b = beta_[i];
    require(b > 0.0 && b < 1.0, "noise schedule: every beta must lie in (0, 1)");
    const double prev = ab;
    ab *= 1.0 - b;
    alpha_bar_.push_back(ab);
    beta_tilde_.push_back((1.0 - prev) / (1.0 - ab) * b);
  }
}

NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
  require(T >= 1, "make_schedule: T must be at least 1");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "make_schedule: need 0 < beta_start <= beta_end < 1");
  std::vector<double> b(T);
  for (std::size_t i = 0; i < T; ++i) {
    const double f = T == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(T - 1);
    b[i] = beta_start + f * (beta_end - beta_start);
  }
  return NoiseSchedule(std::move(b));
}

NoiseSchedule scaled_schedule(std::size_t T) {
  require(T > 20, "scaled_schedule: T must exceed 20");
  const double k = 1000.0 / static_cast<double>(T);
  return make_schedule(T, 1e-4 * k, 0.02 * k);
}

namespace {

void check_t(const NoiseSchedule& s, std::size_t t, std::size_t lo, const char* op) {
  if (t < lo || t > s.steps()) {
    throw ContractError(std::string(op) + ": t = " + std::to_string(t) + " outside [" +
                        std::to_string(lo) + ", " + std::to_string(s.steps()) + "]");
  }
}

}  // namespace

Tensor forward_sample(const NoiseSchedule& s, const Tensor& x0, std::size_t t, const Tensor& eps) {
  check_t(s, t, 0, "forward_sample");
  check_same_shape(x0, eps, "forward_sample");
  const double ab = s.alpha_bar(t);
  return x0 * std::sqrt(ab) + eps * std::sqrt(1.0 - ab);
}

ReversePosterior reverse_posterior(const NoiseSchedule& s, const Tensor& x_t, const Tensor& x0,
                                   std::size_t t) {
  check_t(s, t, 1, "reverse_posterior");
  check_same_shape(x_t, x0, "reverse_posterior");
  const double ab = s.alpha_bar(t), ab_prev = s.alpha_bar(t - 1);
  const double c0 = std::sqrt(ab_prev) * s.beta(t) / (1.0 - ab);
  const double ct = std::sqrt(s.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
  return {x0 * c0 + x_t * ct, s.beta_tilde(t)};
}

Tensor reverse_posterior_from_eps(const NoiseSchedule& s, const Tensor& x_t, const Tensor& eps,
                                  std::size_t t) {
  check_t(s, t, 1, "reverse_posterior_from_eps");
  check_same_shape(x_t, eps, "reverse_posterior_from_eps");
  const double k = s.beta(t) / std::sqrt(1.0 - s.alpha_bar(t));
  return (x_t - eps * k) * (1.0 / std::sqrt(s.alpha(t)));
}

double equal_variance_kl(const Tensor& a, const Tensor& b, double var) {
  check_same_shape(a, b, "equal_variance_kl");
  require(var > 0.0, "equal_variance_kl: variance must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return sq / (2.0 * var);
}

EpsNet::EpsNet(std::size_t dim, std::size_t steps, std::vector<std::size_t> hidden, Rng& rng,
               nn::Activation activation)
    : steps_(steps) {
  require(dim >= 1 && steps >= 1, "eps net: dim and steps must be positive");
  std::vector<std::size_t> w{dim + kTimeFeatures};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(dim);
  net_ = nn::Mlp(std::move(w), rng, {activation, nn::Activation::kIdentity, 1.0});
}

EpsNet::EpsNet(nn::Mlp net, std::size_t steps) : net_(std::move(net)), steps_(steps) {
  require(net_.input_dim() == net_.output_dim() + kTimeFeatures,
          "eps net: input width must be data dim plus time features");
}

Tensor EpsNet::time_features(std::span<const std::size_t> t, std::size_t steps) {
  Tensor f(t.size(), kTimeFeatures);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = static_cast<double>(t[i]) / static_cast<double>(steps);
    f(i, 0) = u;
    double freq = std::numbers::pi;
    for (std::size_t j = 0; j < 4; ++j, freq *= 2.0) {
      f(i, 1 + 2 * j) = std::sin(freq * u);
      f(i, 2 + 2 * j) = std::cos(freq * u);
    }
  }
  return f;
}

ad::Var EpsNet::forward(const ad::Var& x_t, std::span<const std::size_t> t) const {
  if (t.size() != x_t.rows()) throw DimensionError("eps net: one time index per row required");
  return net_.forward(ad::concat_cols({x_t, ad::constant(time_features(t, steps_))}));
}

EpsPredictor EpsNet::predictor() const {
  return [net = *this](const ad::Var& x, std::span<const std::size_t> t) { return net.forward(x, t); };
}

ad::Var loss_simple(const EpsPredictor& net, const NoiseSchedule& s, const Tensor& x0, Rng& rng) {
  require(x0.rows() > 0, "loss_simple: empty batch");
  const std::size_t n = x0.rows(), d = x0.cols();
  std::vector<std::size_t> t(n);
  for (auto& ti : t) ti = 1 + rng.index(s.steps());
  Tensor eps = rng.normal(n, d);
  Tensor x_t(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::sqrt(s.alpha_bar(t[i])), b = std::sqrt(1.0 - s.alpha_bar(t[i]));
    for (std::size_t j = 0; j < d; ++j) x_t(i, j) = a * x0(i, j) + b * eps(i, j);
  }
  ad::Var pred = net(ad::constant(x_t), t);
  ad::Var loss = ad::sum(ad::square(ad::constant(eps) - pred)) * (1.0 / static_cast<double>(n));
  if (!std::isfinite(loss.item())) throw NumericError("loss_simple: non-finite loss");
  return loss;
}

std::vector<double> train(EpsNet& net, const NoiseSchedule& s, const Tensor& data,
                          const TrainOptions& options, nn::Optimizer& opt, Rng& rng) {
  require(options.steps >= 1, "ddpm train: steps must be at least 1");
  require(options.batch >= 1 && data.rows() > 0, "ddpm train: need data and a positive batch size");
  require(data.cols() == net.dim(), "ddpm train: data dimension does not match the network");
  const auto params = net.parameters();
  const auto pred = net.predictor();
  std::vector<double> trace;
  trace.reserve(options.steps);
  for (std::size_t step = 0; step < options.steps; ++step) {
    Tensor batch = gather_rows(data, rng.indices(options.batch, data.rows()));
    ad::Var loss = loss_simple(pred, s, batch, rng);
    trace.push_back(loss.item());
    opt.step(params, ad::backward(loss));
  }
  return trace;
}

Tensor sample(const EpsPredictor& net, const NoiseSchedule& s, std::size_t n, std::size_t dim, Rng& rng,
              const SampleOptions& options) {
  ad::NoGradGuard ng;
  Tensor x = rng.normal(n, dim);
  std::vector<std::size_t> t(n);
  for (std::size_t step = s.steps(); step >= 1; --step) {
    std::fill(t.begin(), t.end(), step);
    Tensor eps = net(ad::constant(x), t).value();
    Tensor mean = reverse_posterior_from_eps(s, x, eps, step);
    if (step > 1 || options.final_noise) {
      const double sd = std::sqrt(s.beta_tilde(step));
      for (double& v : mean.data()) v += sd * rng.normal();
    }
    x = std::move(mean);
  }
  return x;
}

std::vector<double> smooth(std::span<const double> trace, double decay) {
  std::vector<double> out;
  out.reserve(trace.size());
  double acc = 0.0, weight = 0.0;
  for (double v : trace) {
    acc = decay * acc + (1.0 - decay) * v;
    weight = decay * weight + (1.0 - decay);
    out.push_back(acc / weight);
  }
  return out;
}

}  // namespace genlab::ddpm
