#include "genlab/autoregressive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "genlab/errors.hpp"

namespace genlab::ar {

Tensor mask_matrix(std::size_t d, const std::vector<std::size_t>& in_degrees,
                   const std::vector<std::size_t>& out_degrees, bool strict) {
  require(d >= 1, "mask_matrix: d must be positive");
  for (std::size_t g : in_degrees) require(g >= 1 && g <= d, "mask_matrix: input degree outside [1, d]");
  for (std::size_t g : out_degrees) require(g >= 1 && g <= d, "mask_matrix: output degree outside [1, d]");
  Tensor m(out_degrees.size(), in_degrees.size());
  for (std::size_t o = 0; o < out_degrees.size(); ++o)
    for (std::size_t i = 0; i < in_degrees.size(); ++i)
      m(o, i) = (strict ? out_degrees[o] > in_degrees[i] : out_degrees[o] >= in_degrees[i]) ? 1.0 : 0.0;
  return m;
}

MaskedDense::MaskedDense(Tensor mask, Rng& rng) : mask_t_(transpose(mask)) {
  const std::size_t in = mask_t_.rows(), out = mask_t_.cols();
  require(in >= 1 && out >= 1, "masked dense: empty mask");
  weight_ = ad::parameter(rng.normal(in, out) * (1.0 / std::sqrt(static_cast<double>(in))));
  bias_ = ad::parameter(Tensor(1, out));
}

ad::Var MaskedDense::forward(const ad::Var& x) const {
  return ad::matmul(x, weight_ * ad::constant(mask_t_)) + bias_;
}

ArModel::ArModel(const ArConfig& config, Rng& rng) : activation_(config.activation) {
  const std::size_t d = config.dim;
  require(d >= 1, "ar model: dimension must be positive");
  order_ = config.order;
  if (order_.empty()) {
    order_.resize(d);
    for (std::size_t i = 0; i < d; ++i) order_[i] = i;
  }
  require(order_.size() == d, "ar model: ordering length must equal the dimension");
  std::vector<bool> seen(d, false);
  for (std::size_t o : order_) {
    require(o < d && !seen[o], "ar model: ordering must be a permutation");
    seen[o] = true;
  }
  to_ordered_ = Tensor(d, d);
  for (std::size_t i = 0; i < d; ++i) to_ordered_(order_[i], i) = 1.0;

  std::vector<std::size_t> prev(d);
  for (std::size_t i = 0; i < d; ++i) prev[i] = i + 1;
  const std::size_t span = std::max<std::size_t>(1, d - 1);
  for (std::size_t width : config.hidden) {
    require(width >= 1, "ar model: hidden widths must be positive");
    std::vector<std::size_t> deg(width);
    for (std::size_t h = 0; h < width; ++h) deg[h] = h % span + 1;
    layers_.emplace_back(mask_matrix(d, prev, deg, false), rng);
    prev = std::move(deg);
  }
  std::vector<std::size_t> out(2 * d);
  for (std::size_t i = 0; i < d; ++i) out[i] = out[d + i] = i + 1;
  layers_.emplace_back(mask_matrix(d, prev, out, true), rng);
}

ArModel::Conditionals ArModel::conditionals(const ad::Var& x) const {
  const std::size_t d = dim();
  if (x.cols() != d) throw DimensionError("ar model: input width mismatch");
  ad::Var h = ad::matmul(x, ad::constant(to_ordered_));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(h);
    if (l + 1 < layers_.size()) h = nn::activate(h, activation_);
  }
  return {ad::slice_cols(h, 0, d), ad::clamp(ad::slice_cols(h, d, 2 * d), -6.0, 4.0)};
}

ad::Var ArModel::log_prob(const ad::Var& x) const {
  const auto c = conditionals(x);
  const ad::Var xo = ad::matmul(x, ad::constant(to_ordered_));
  const ad::Var z = (xo - c.mean) * ad::exp(-c.log_sigma);
  const double k = 0.5 * std::log(2.0 * std::numbers::pi);
  return ad::sum_cols(ad::square(z) * -0.5 - c.log_sigma - k);
}

std::vector<ad::Var> ArModel::parameters() const {
  std::vector<ad::Var> p;
  for (const auto& l : layers_) {
    p.push_back(l.weight());
    p.push_back(l.bias());
  }
  return p;
}

nn::NamedParameters ArModel::named_parameters() const {
  nn::NamedParameters p;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string prefix = "made.l" + std::to_string(l);
    p.emplace_back(prefix + ".W", layers_[l].weight());
    p.emplace_back(prefix + ".b", layers_[l].bias());
  }
  return p;
}

std::vector<double> ar_logpdf(const ArModel& model, const Tensor& x) {
  ad::NoGradGuard ng;
  return model.log_prob(ad::constant(x)).value().values();
}

Tensor ar_sample(const ArModel& model, std::size_t n, Rng& rng, bool noise) {
  ad::NoGradGuard ng;
  const std::size_t d = model.dim();
  const auto& order = model.order();
  Tensor x(n, d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto c = model.conditionals(ad::constant(x));
    const Tensor& mu = c.mean.value();
    const Tensor& ls = c.log_sigma.value();
    for (std::size_t r = 0; r < n; ++r) {
      double v = mu(r, i);
      if (noise) v += std::exp(ls(r, i)) * rng.normal();
      x(r, order[i]) = v;
    }
  }
  return x;
}

std::vector<double> ar_fit(ArModel& model, const Tensor& data, const FitOptions& options, nn::Optimizer& opt,
                           Rng& rng) {
  require(options.steps >= 1 && options.batch >= 1, "ar_fit: steps and batch must be positive");
  require(data.rows() > 0 && data.cols() == model.dim(), "ar_fit: data shape does not match the model");
  const auto params = model.parameters();
  std::vector<double> trace;
  trace.reserve(options.steps);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const Tensor batch = gather_rows(data, rng.indices(options.batch, data.rows()));
    const ad::Var loss = -ad::mean(model.log_prob(ad::constant(batch)));
    if (!std::isfinite(loss.item())) throw NumericError("ar_fit: non-finite loss at step " + std::to_string(step));
    trace.push_back(loss.item());
    opt.step(params, ad::backward(loss));
  }
  return trace;
}

}  // namespace genlab::ar
