#include "genlab/flows.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>

#include "genlab/errors.hpp"

namespace genlab::flows {

ad::Var planar_constrain(const ad::Var& raw_u, const ad::Var& w) {
  const double w2 = squared_norm(w.value().data());
  require(w2 > 0.0, "planar_constrain: w must be non-zero");
  ad::Var a = ad::sum(raw_u * w);
  ad::Var m = ad::softplus(a) - 1.0;
  return raw_u + (m - a) * w / ad::sum(ad::square(w));
}

Tensor planar_constrain(const Tensor& raw_u, const Tensor& w) {
  ad::NoGradGuard ng;
  return planar_constrain(ad::constant(raw_u), ad::constant(w)).value();
}

PlanarLayer::PlanarLayer(Tensor raw_u, Tensor w, double b)
    : raw_u_(ad::parameter(std::move(raw_u))), w_(ad::parameter(std::move(w))), b_(ad::parameter(Tensor::scalar(b))) {
  require(raw_u_.rows() == 1 && w_.rows() == 1 && raw_u_.cols() == w_.cols(),
          "planar layer: u and w must be 1×d rows of equal length");
}

PlanarLayer PlanarLayer::random(std::size_t dim, Rng& rng, double scale) {
  Tensor u = rng.normal(1, dim) * scale;
  Tensor w = rng.normal(1, dim) * scale;
  const double b = scale * rng.normal();
  return PlanarLayer(std::move(u), std::move(w), b);
}

Pass PlanarLayer::forward(const ad::Var& x) const {
  if (x.cols() != dim()) throw DimensionError("planar layer: input width mismatch");
  const ad::Var u = u_hat();
  const ad::Var a = ad::matmul(x, ad::transpose(w_)) + b_;  // n×1
  const ad::Var h = ad::tanh(a);
  const ad::Var y = x + h * u;
  const ad::Var wu = ad::sum(w_ * u);
  const ad::Var logdet = ad::log((1.0 - ad::square(h)) * wu + 1.0);
  return {y, logdet};
}

nn::NamedParameters PlanarLayer::named_parameters(const std::string& prefix) const {
  return {{prefix + ".u", raw_u_}, {prefix + ".w", w_}, {prefix + ".b", b_}};
}

namespace {

nn::Mlp coupling_net(std::size_t in, std::size_t out, Rng& rng, const CouplingLayer::Options& o) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), o.hidden.begin(), o.hidden.end());
  widths.push_back(out);
  return nn::Mlp(std::move(widths), rng, {o.activation, nn::Activation::kIdentity, o.zero_init ? 0.0 : 1.0});
}

}  // namespace

CouplingLayer::CouplingLayer(std::size_t dim, std::size_t split, Rng& rng, const Options& options)
    : split_(split), clamp_(options.clamp_scale) {
  require(split >= 1 && split < dim, "coupling layer: need 1 <= split < dim");
  scale_ = coupling_net(split, dim - split, rng, options);
  shift_ = coupling_net(split, dim - split, rng, options);
}

CouplingLayer::CouplingLayer(std::size_t split, nn::Mlp scale_net, nn::Mlp shift_net, bool clamp_scale)
    : split_(split), scale_(std::move(scale_net)), shift_(std::move(shift_net)), clamp_(clamp_scale) {
  require(split >= 1, "coupling layer: split must be at least 1");
  require(scale_.input_dim() == split && shift_.input_dim() == split,
          "coupling layer: nets must read the first block");
  require(scale_.output_dim() == shift_.output_dim(), "coupling layer: scale and shift widths differ");
}

ad::Var CouplingLayer::scale_of(const ad::Var& x1) const {
  ad::Var s = scale_.forward(x1);
  return clamp_ ? ad::clamp(s, -5.0, 5.0) : s;
}

Pass CouplingLayer::forward(const ad::Var& x) const {
  if (x.cols() != dim()) throw DimensionError("coupling layer: input width mismatch");
  const ad::Var x1 = ad::slice_cols(x, 0, split_);
  const ad::Var x2 = ad::slice_cols(x, split_, dim());
  const ad::Var s = scale_of(x1);
  const ad::Var y2 = x2 * ad::exp(s) + shift_.forward(x1);
  return {ad::concat_cols({x1, y2}), ad::sum_cols(s)};
}

Pass CouplingLayer::inverse(const ad::Var& y) const {
  if (y.cols() != dim()) throw DimensionError("coupling layer: input width mismatch");
  const ad::Var y1 = ad::slice_cols(y, 0, split_);
  const ad::Var y2 = ad::slice_cols(y, split_, dim());
  const ad::Var s = scale_of(y1);
  const ad::Var x2 = (y2 - shift_.forward(y1)) * ad::exp(-s);
  return {ad::concat_cols({y1, x2}), -ad::sum_cols(s)};
}

std::vector<ad::Var> CouplingLayer::parameters() const {
  auto p = scale_.parameters();
  auto q = shift_.parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

nn::NamedParameters CouplingLayer::named_parameters(const std::string& prefix) const {
  auto p = scale_.named_parameters(prefix + ".scale");
  auto q = shift_.named_parameters(prefix + ".shift");
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

PermutationLayer::PermutationLayer(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
  const std::size_t d = perm_.size();
  require(d >= 1, "permutation: empty permutation");
  std::vector<bool> seen(d, false);
  for (std::size_t p : perm_) {
    require(p < d && !seen[p], "permutation: not a bijection of {0..d-1}");
    seen[p] = true;
  }
  matrix_ = Tensor(d, d);
  for (std::size_t j = 0; j < d; ++j) matrix_(perm_[j], j) = 1.0;
}

PermutationLayer PermutationLayer::reverse(std::size_t dim) {
  std::vector<std::size_t> p(dim);
  for (std::size_t j = 0; j < dim; ++j) p[j] = dim - 1 - j;
  return PermutationLayer(std::move(p));
}

Pass PermutationLayer::forward(const ad::Var& x) const {
  if (x.cols() != dim()) throw DimensionError("permutation: input width mismatch");
  return {ad::matmul(x, ad::constant(matrix_)), ad::constant(Tensor(x.rows(), 1))};
}

Pass PermutationLayer::inverse(const ad::Var& y) const {
  if (y.cols() != dim()) throw DimensionError("permutation: input width mismatch");
  return {ad::matmul(y, ad::constant(transpose(matrix_))), ad::constant(Tensor(y.rows(), 1))};
}

AffineLayer::AffineLayer(std::size_t dim) : AffineLayer(Tensor(1, dim), Tensor(1, dim)) {}

AffineLayer::AffineLayer(Tensor log_scale, Tensor shift)
    : log_scale_(ad::parameter(std::move(log_scale))), shift_(ad::parameter(std::move(shift))) {
  require(log_scale_.rows() == 1 && log_scale_.value().same_shape(shift_.value()),
          "affine layer: log_scale and shift must be 1×d rows of equal length");
}

Pass AffineLayer::forward(const ad::Var& x) const {
  if (x.cols() != dim()) throw DimensionError("affine layer: input width mismatch");
  const ad::Var y = x * ad::exp(log_scale_) + shift_;
  return {y, ad::broadcast_to(ad::sum(log_scale_), x.rows(), 1)};
}

Pass AffineLayer::inverse(const ad::Var& y) const {
  if (y.cols() != dim()) throw DimensionError("affine layer: input width mismatch");
  const ad::Var x = (y - shift_) * ad::exp(-log_scale_);
  return {x, ad::broadcast_to(-ad::sum(log_scale_), y.rows(), 1)};
}

nn::NamedParameters AffineLayer::named_parameters(const std::string& prefix) const {
  return {{prefix + ".log_scale", log_scale_}, {prefix + ".shift", shift_}};
}

FlowStack::FlowStack(std::size_t dim) : dim_(dim) { require(dim >= 1, "flow stack: dimension must be positive"); }

void FlowStack::add(Layer layer) {
  const std::size_t d = std::visit([](const auto& l) { return l.dim(); }, layer);
  if (d != dim_) {
    throw DimensionError("flow stack: layer maps " + std::to_string(d) + " dims, stack has " +
                         std::to_string(dim_));
  }
  layers_.push_back(std::move(layer));
}

Pass FlowStack::forward(const ad::Var& z) const {
  if (z.cols() != dim_) throw DimensionError("flow stack: input width mismatch");
  Pass acc{z, ad::constant(Tensor(z.rows(), 1))};
  for (const auto& layer : layers_) {
    Pass p = std::visit([&](const auto& l) { return l.forward(acc.y); }, layer);
    acc = {p.y, acc.logdet + p.logdet};
  }
  return acc;
}

Pass FlowStack::inverse(const ad::Var& x) const {
  if (x.cols() != dim_) throw DimensionError("flow stack: input width mismatch");
  Pass acc{x, ad::constant(Tensor(x.rows(), 1))};
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (std::holds_alternative<PlanarLayer>(*it)) {
      throw ContractError("flow stack: planar layers have no closed-form inverse; density evaluation needs "
                          "coupling, permutation or affine layers only");
    }
    Pass p = std::visit(
        [&](const auto& l) -> Pass {
          if constexpr (std::is_same_v<std::decay_t<decltype(l)>, PlanarLayer>) {
            return {};
          } else {
            return l.inverse(acc.y);
          }
        },
        *it);
    acc = {p.y, acc.logdet + p.logdet};
  }
  return acc;
}

ad::Var FlowStack::log_prob(const ad::Var& x) const {
  const Pass p = inverse(x);
  const double c = -0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi);
  return ad::sum_cols(ad::square(p.y)) * -0.5 + c + p.logdet;
}

std::vector<ad::Var> FlowStack::parameters() const {
  std::vector<ad::Var> out;
  for (const auto& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, PermutationLayer>) {
            auto p = l.parameters();
            out.insert(out.end(), p.begin(), p.end());
          }
        },
        layer);
  }
  return out;
}

nn::NamedParameters FlowStack::named_parameters() const {
  nn::NamedParameters out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    std::visit(
        [&](const auto& l) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, PermutationLayer>) {
            auto p = l.named_parameters(prefix);
            out.insert(out.end(), p.begin(), p.end());
          }
        },
        layers_[i]);
  }
  return out;
}

FlowStack make_coupling_stack(std::size_t dim, std::size_t n_pairs, Rng& rng,
                              const CouplingLayer::Options& options) {
  require(dim >= 2, "make_coupling_stack: coupling layers need at least 2 dimensions");
  FlowStack stack(dim);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    stack.add(CouplingLayer(dim, dim / 2, rng, options));
    stack.add(PermutationLayer::reverse(dim));
  }
  return stack;
}

std::vector<double> flow_logpdf(const FlowStack& stack, const Tensor& x) {
  ad::NoGradGuard ng;
  return stack.log_prob(ad::constant(x)).value().values();
}

Tensor flow_sample(const FlowStack& stack, std::size_t n, Rng& rng) {
  ad::NoGradGuard ng;
  return stack.forward(ad::constant(rng.normal(n, stack.dim()))).y.value();
}

std::vector<double> flow_fit(FlowStack& stack, const Tensor& data, const FitOptions& options,
                             nn::Optimizer& opt, Rng& rng) {
  require(options.steps >= 1 && options.batch >= 1, "flow_fit: steps and batch must be positive");
  require(data.rows() > 0 && data.cols() == stack.dim(), "flow_fit: data shape does not match the stack");
  const auto params = stack.parameters();
  std::vector<double> trace;
  trace.reserve(options.steps);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const Tensor batch = gather_rows(data, rng.indices(options.batch, data.rows()));
    const ad::Var loss = -ad::mean(stack.log_prob(ad::constant(batch)));
    if (!std::isfinite(loss.item())) throw NumericError("flow_fit: non-finite loss at step " + std::to_string(step));
    trace.push_back(loss.item());
    opt.step(params, ad::backward(loss));
  }
  return trace;
}

}  // namespace genlab::flows
