#include "genlab/nn.hpp"

#include <cmath>

#include "genlab/errors.hpp"

namespace genlab::nn {

ad::Var activate(const ad::Var& x, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return ad::tanh(x);
    case Activation::kSoftplus:
      return ad::softplus(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kSoftplus:
      return "softplus";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "identity") return Activation::kIdentity;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<std::size_t> widths, Rng& rng) : Mlp(std::move(widths), rng, Options{}) {}

Mlp::Mlp(std::vector<std::size_t> widths, Rng& rng, Options options)
    : widths_(std::move(widths)), options_(options) {
  require(widths_.size() >= 2, "mlp: need at least input and output widths");
  for (std::size_t w : widths_) require(w >= 1, "mlp: widths must be positive");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    double s = 1.0 / std::sqrt(static_cast<double>(in));
    if (l + 2 == widths_.size()) s *= options_.output_init_scale;
    Tensor w = rng.normal(in, out) * s;
    weights_.push_back(ad::parameter(std::move(w)));
    biases_.push_back(ad::parameter(Tensor(1, out)));
  }
}

ad::Var Mlp::forward(const ad::Var& x) const {
  if (x.cols() != input_dim()) {
    throw DimensionError("mlp: input has " + std::to_string(x.cols()) + " features, expected " +
                         std::to_string(input_dim()));
  }
  ad::Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ad::matmul(h, weights_[l]) + biases_[l];
    h = activate(h, l + 1 == weights_.size() ? options_.output : options_.hidden);
  }
  return h;
}

Tensor Mlp::operator()(const Tensor& x) const {
  ad::NoGradGuard ng;
  return forward(ad::constant(x)).value();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) n += widths_[l] * widths_[l + 1] + widths_[l + 1];
  return n;
}

std::vector<ad::Var> Mlp::parameters() const {
  std::vector<ad::Var> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(weights_[l]);
    out.push_back(biases_[l]);
  }
  return out;
}

NamedParameters Mlp::named_parameters(std::string_view prefix) const {
  NamedParameters out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::string base = std::string(prefix) + ".l" + std::to_string(l);
    out.emplace_back(base + ".W", weights_[l]);
    out.emplace_back(base + ".b", biases_[l]);
  }
  return out;
}

Mlp Mlp::clone() const {
  Mlp m;
  m.widths_ = widths_;
  m.options_ = options_;
  for (const auto& w : weights_) m.weights_.push_back(ad::parameter(w.value()));
  for (const auto& b : biases_) m.biases_.push_back(ad::parameter(b.value()));
  return m;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  require(config_.learning_rate >= 0.0, "optimizer: learning rate must be non-negative");
  require(config_.beta1 >= 0.0 && config_.beta1 < 1.0, "optimizer: beta1 must be in [0,1)");
  require(config_.beta2 >= 0.0 && config_.beta2 < 1.0, "optimizer: beta2 must be in [0,1)");
}

void Optimizer::step(std::span<const ad::Var> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw DimensionError("optimizer: params/grads count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) check_same_shape(params[i].value(), grads[i], "optimizer");
  ++t_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor p = params[i].value();
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * grads[i][j];
      params[i].assign(std::move(p));
    }
    return;
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.emplace_back(p.rows(), p.cols());
      v_.emplace_back(p.rows(), p.cols());
    }
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    check_same_shape(m_[i], grads[i], "adam moments");
    Tensor p = params[i].value();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = grads[i][j];
      m_[i][j] = b1 * m_[i][j] + (1.0 - b1) * g;
      v_[i][j] = b2 * v_[i][j] + (1.0 - b2) * g * g;
      const double mhat = m_[i][j] / c1;
      const double vhat = v_[i][j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
    params[i].assign(std::move(p));
  }
}

void Optimizer::step(std::span<const ad::Var> params, const ad::Gradients& grads) {
  std::vector<Tensor> g;
  g.reserve(params.size());
  for (const auto& p : params) g.push_back(grads.of(p));
  step(params, g);
}

std::vector<ad::Var> join(std::initializer_list<std::span<const ad::Var>> lists) {
  std::vector<ad::Var> out;
  for (auto l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

}  // namespace genlab::nn
