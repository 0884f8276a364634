#include "genlab/ebm.hpp"

#include <cmath>

#include "genlab/errors.hpp"

namespace genlab::ebm {

EnergyNet::EnergyNet(std::size_t dim, std::vector<std::size_t> hidden, Rng& rng, nn::Activation activation) {
  std::vector<std::size_t> w{dim};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(1);
  net_ = nn::Mlp(std::move(w), rng, {activation, nn::Activation::kIdentity, 1.0});
}

EnergyNet::EnergyNet(nn::Mlp net) : net_(std::move(net)) {
  require(net_.output_dim() == 1, "energy net: output width must be 1");
}

EnergyFn EnergyNet::fn() const {
  return [net = net_](const ad::Var& x) { return net.forward(x); };
}

namespace {

ad::Var energy_column(const EnergyFn& energy, const ad::Var& x) {
  ad::Var e = energy(x);
  if (e.cols() != 1 || e.rows() != x.rows()) {
    throw DimensionError("energy: expected one value per row, got " + e.value().shape_string());
  }
  return e;
}

}  // namespace

Tensor unnorm_logpdf(const EnergyFn& energy, const Tensor& x) {
  ad::NoGradGuard ng;
  Tensor e = energy_column(energy, ad::constant(x)).value();
  for (double& v : e.data()) v = -v;
  return e;
}

Tensor ebm_score(const EnergyFn& energy, const Tensor& x) {
  const ad::Var xv = ad::parameter(x);
  const ad::Var e = energy_column(energy, xv);
  const ad::Var xs[] = {xv};
  Tensor g = ad::grad(ad::sum(e), xs)[0].value();
  for (double& v : g.data()) v = -v;
  return g;
}

Tensor ebm_langevin(const EnergyFn& energy, const Tensor& x0, std::size_t n_steps, double step, Rng& rng,
                    const score::LangevinOptions& options) {
  return score::langevin_sample([&energy](const Tensor& x) { return ebm_score(energy, x); }, x0, n_steps, step,
                                rng, options);
}

std::vector<Tensor> contrastive_grad(const EnergyFn& energy, std::span<const ad::Var> params,
                                     const Tensor& data, const Tensor& model_samples) {
  require(data.rows() > 0 && model_samples.rows() > 0, "contrastive_grad: empty batch");
  const auto gd = ad::grad(ad::mean(energy_column(energy, ad::constant(data))), params);
  const auto gm = ad::grad(ad::mean(energy_column(energy, ad::constant(model_samples))), params);
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(gm[i].value() - gd[i].value());
  return out;
}

double sm_energy_objective(const EnergyFn& energy, const Tensor& samples) {
  const std::size_t n = samples.rows(), d = samples.cols();
  require(n > 0, "sm_energy_objective: no samples");
  if (d > 8) {
    throw ContractError("sm_energy_objective: exact Laplacian limited to d <= 8 (got " + std::to_string(d) + ")");
  }
  const ad::Var x = ad::parameter(samples);
  const ad::Var xs[] = {x};
  const ad::Var g = ad::grad(ad::sum(energy_column(energy, x)), xs, true)[0];
  Tensor lap(n, 1);
  for (std::size_t j = 0; j < d; ++j) {
    const Tensor h = ad::grad(ad::sum(ad::slice_cols(g, j, j + 1)), xs)[0].value();
    for (std::size_t i = 0; i < n; ++i) lap(i, 0) += h(i, j);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += 0.5 * squared_norm(g.value().row(i)) - lap(i, 0);
  return acc / static_cast<double>(n);
}

std::vector<double> train_contrastive(EnergyNet& net, const Tensor& data, const TrainOptions& options,
                                      nn::Optimizer& opt, Rng& rng) {
  require(options.steps >= 1 && options.batch >= 1, "train_contrastive: steps and batch must be positive");
  require(data.rows() > 0 && data.cols() == net.dim(), "train_contrastive: data shape does not match the net");
  const auto params = net.parameters();
  const auto e = net.fn();
  Tensor chains = rng.normal(options.batch, net.dim());
  std::vector<double> trace;
  trace.reserve(options.steps);
  for (std::size_t step = 0; step < options.steps; ++step) {
    chains = ebm_langevin(e, chains, options.langevin_steps, options.langevin_step, rng);
    const Tensor batch = gather_rows(data, rng.indices(options.batch, data.rows()));
    const ad::Var ed = energy_column(e, ad::constant(batch));
    const ad::Var em = energy_column(e, ad::constant(chains));
    const ad::Var cd = ad::mean(ed) - ad::mean(em);
    const ad::Var loss = cd + (ad::mean(ad::square(ed)) + ad::mean(ad::square(em))) * options.regulariser;
    if (!std::isfinite(loss.item())) {
      throw NumericError("train_contrastive: non-finite loss at step " + std::to_string(step));
    }
    trace.push_back(cd.item());
    opt.step(params, ad::backward(loss));
  }
  return trace;
}

}  // namespace genlab::ebm
