#include "genlab/score.hpp"

#include <algorithm>
#include <cmath>

#include "genlab/errors.hpp"

namespace genlab::score {

std::vector<double> gaussian_score(std::span<const double> mu, const Tensor& cov, std::span<const double> x) {
  return linalg::MvGaussian(std::vector<double>(mu.begin(), mu.end()), cov).score(x);
}

std::vector<double> gmm_score(std::vector<double> weights, std::vector<linalg::MvGaussian> components,
                              std::span<const double> x) {
  return linalg::GaussianMixture(std::move(weights), std::move(components)).score(x);
}

ScoreField pointwise(std::function<std::vector<double>(std::span<const double>)> f) {
  return [f = std::move(f)](const Tensor& x) {
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto s = f(x.row(i));
      if (s.size() != x.cols()) throw DimensionError("pointwise score: output length mismatch");
      std::copy(s.begin(), s.end(), out.row(i).begin());
    }
    return out;
  };
}

namespace {

void check_bounded(const Tensor& x, std::size_t step, const char* op) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double n2 = squared_norm(x.row(i));
    if (!(n2 <= 1e12)) {
      throw NumericError(std::string(op) + ": chain diverged (norm > 1e6) at step " + std::to_string(step));
    }
  }
}

}  // namespace

Tensor langevin_sample(const ScoreField& score, const Tensor& x0, std::size_t n_steps, double step,
                       Rng& rng, const LangevinOptions& options) {
  require(step > 0.0, "langevin_sample: step size must be positive");
  require(options.burn_in <= n_steps, "langevin_sample: burn-in exceeds the number of steps");
  const double noise = std::sqrt(2.0 * step);
  Tensor x = x0;
  std::vector<double> kept;
  if (options.keep_chain) kept.reserve((n_steps - options.burn_in) * x.size());
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Tensor s = score(x);
    check_same_shape(s, x, "langevin_sample");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += step * s[i];
    if (options.noise)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise * rng.normal();
    check_bounded(x, k + 1, "langevin_sample");
    if (options.keep_chain && k >= options.burn_in) kept.insert(kept.end(), x.data().begin(), x.data().end());
  }
  if (!options.keep_chain) return x;
  const std::size_t rows = kept.size() / std::max<std::size_t>(1, x.cols());
  return Tensor(rows, x.cols(), std::move(kept));
}

double fisher_divergence(const ScoreField& model, const ScoreField& truth, const Tensor& samples) {
  require(samples.rows() > 0, "fisher_divergence: no samples");
  const Tensor a = model(samples), b = truth(samples);
  check_same_shape(a, b, "fisher_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(samples.rows());
}

namespace {

ad::Var sm_objective(const ScoreFn& s, const Tensor& samples, bool create_graph) {
  const std::size_t n = samples.rows(), d = samples.cols();
  require(n > 0, "sm_objective_exact: no samples");
  if (d > 8) {
    throw ContractError("sm_objective_exact: exact divergence limited to d <= 8 (got " + std::to_string(d) +
                        "); use dsm_objective instead");
  }
  const ad::Var x = ad::parameter(samples);
  const ad::Var out = s(x);
  if (out.rows() != n || out.cols() != d) throw DimensionError("sm_objective_exact: score output shape");
  ad::Var div;
  const ad::Var xs[] = {x};
  for (std::size_t j = 0; j < d; ++j) {
    // Rows are independent, so the gradient of the column sum holds ∂s_j/∂x row by row.
    const ad::Var gj = ad::grad(ad::sum(ad::slice_cols(out, j, j + 1)), xs, create_graph)[0];
    ad::Var djj = ad::slice_cols(gj, j, j + 1);
    div = div.defined() ? div + djj : djj;
  }
  return ad::mean(ad::sum_cols(ad::square(out)) * 0.5 + div);
}

}  // namespace

double sm_objective_exact(const ScoreFn& s, const Tensor& samples) {
  return sm_objective(s, samples, false).item();
}

ad::Var sm_objective_exact_var(const ScoreFn& s, const Tensor& samples) {
  return sm_objective(s, samples, true);
}

namespace {

// Mean over rows of w_i ‖s(x0 + σ_i z, σ_i) + z/σ_i‖² given fixed z and levels.
ad::Var dsm_term(const ConditionalScoreFn& s, const Tensor& x0, const Tensor& z,
                 const std::vector<double>& levels, const std::vector<double>& weights) {
  const std::size_t n = x0.rows(), d = x0.cols();
  Tensor noisy(n, d), target(n, d), w(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double sg = levels[i];
    for (std::size_t j = 0; j < d; ++j) {
      noisy(i, j) = x0(i, j) + sg * z(i, j);
      target(i, j) = -z(i, j) / sg;
    }
    w(i, 0) = weights[i];
  }
  const ad::Var pred = s(ad::constant(noisy), levels);
  if (pred.rows() != n || pred.cols() != d) throw DimensionError("dsm: score output shape");
  ad::Var per_row = ad::sum_cols(ad::square(pred - ad::constant(target)));
  return ad::mean(per_row * ad::constant(w));
}

}  // namespace

ad::Var dsm_objective(const ConditionalScoreFn& s, const Tensor& x0, double sigma, Rng& rng) {
  require(sigma > 0.0, "dsm_objective: sigma must be positive");
  require(x0.rows() > 0, "dsm_objective: empty batch");
  const Tensor z = rng.normal(x0.rows(), x0.cols());
  return dsm_term(s, x0, z, std::vector<double>(x0.rows(), sigma), std::vector<double>(x0.rows(), 1.0));
}

SigmaLadder::SigmaLadder(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  require(!sigmas_.empty(), "sigma ladder: need at least one level");
  for (std::size_t k = 0; k < sigmas_.size(); ++k) {
    require(sigmas_[k] > 0.0, "sigma ladder: levels must be positive");
    require(k == 0 || sigmas_[k] < sigmas_[k - 1], "sigma ladder: levels must strictly decrease");
  }
}

SigmaLadder SigmaLadder::geometric(double sigma_max, double sigma_min, std::size_t levels) {
  require(levels >= 1, "sigma ladder: need at least one level");
  require(sigma_max > 0.0 && sigma_min > 0.0, "sigma ladder: levels must be positive");
  if (levels == 1) return SigmaLadder({sigma_max});
  std::vector<double> s(levels);
  const double r = std::log(sigma_min / sigma_max) / static_cast<double>(levels - 1);
  for (std::size_t k = 0; k < levels; ++k) s[k] = sigma_max * std::exp(r * static_cast<double>(k));
  s.back() = sigma_min;
  return SigmaLadder(std::move(s));
}

ad::Var ms_dsm_objective(const ConditionalScoreFn& s, const Tensor& x0, const SigmaLadder& ladder, Rng& rng,
                         Weighting weighting) {
  require(ladder.size() >= 1, "ms_dsm_objective: empty ladder");
  require(x0.rows() > 0, "ms_dsm_objective: empty batch");
  const Tensor z = rng.normal(x0.rows(), x0.cols());
  std::vector<double> levels(x0.rows()), weights(x0.rows());
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    levels[i] = ladder[rng.index(ladder.size())];
    weights[i] = weighting == Weighting::kSigmaSquared ? levels[i] * levels[i] : 1.0;
  }
  return dsm_term(s, x0, z, levels, weights);
}

ScoreNet::ScoreNet(std::size_t dim, std::vector<std::size_t> hidden, Rng& rng, nn::Activation activation) {
  std::vector<std::size_t> w{dim + 1};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(dim);
  net_ = nn::Mlp(std::move(w), rng, {activation, nn::Activation::kIdentity, 1.0});
}

ScoreNet::ScoreNet(nn::Mlp net) : net_(std::move(net)) {
  require(net_.input_dim() == net_.output_dim() + 1, "score net: input width must be data dim plus one");
}

ad::Var ScoreNet::forward(const ad::Var& x, std::span<const double> levels) const {
  if (levels.size() != x.rows()) throw DimensionError("score net: one noise level per row required");
  Tensor feat(levels.size(), 1);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    require(levels[i] > 0.0, "score net: noise level must be positive");
    feat(i, 0) = std::log(levels[i]);
  }
  return net_.forward(ad::concat_cols({x, ad::constant(feat)}));
}

ConditionalScoreFn ScoreNet::conditional() const {
  return [net = *this](const ad::Var& x, std::span<const double> levels) { return net.forward(x, levels); };
}

LevelField ScoreNet::field() const {
  return [net = *this](const Tensor& x, double level) {
    ad::NoGradGuard ng;
    const std::vector<double> levels(x.rows(), level);
    return net.forward(ad::constant(x), levels).value();
  };
}

std::vector<double> train_ms_dsm(ScoreNet& net, const Tensor& data, const SigmaLadder& ladder,
                                 const TrainOptions& options, nn::Optimizer& opt, Rng& rng) {
  require(options.steps >= 1 && options.batch >= 1, "train_ms_dsm: steps and batch must be positive");
  require(data.rows() > 0 && data.cols() == net.dim(), "train_ms_dsm: data shape does not match the net");
  const auto params = net.parameters();
  const auto fn = net.conditional();
  std::vector<double> trace;
  trace.reserve(options.steps);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const Tensor batch = gather_rows(data, rng.indices(options.batch, data.rows()));
    const ad::Var loss = ms_dsm_objective(fn, batch, ladder, rng, options.weighting);
    if (!std::isfinite(loss.item())) {
      throw NumericError("train_ms_dsm: non-finite loss at step " + std::to_string(step));
    }
    trace.push_back(loss.item());
    opt.step(params, ad::backward(loss));
  }
  return trace;
}

Tensor annealed_langevin(const LevelField& score, const SigmaLadder& ladder, std::size_t steps_per_level,
                         double eps0, std::size_t n, std::size_t dim, Rng& rng) {
  require(ladder.size() >= 1, "annealed_langevin: empty ladder");
  require(eps0 > 0.0, "annealed_langevin: eps0 must be positive");
  Tensor x = rng.normal(n, dim) * ladder[0];
  const double last = ladder[ladder.size() - 1];
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const double sigma = ladder[k];
    const double eps = eps0 * sigma * sigma / (last * last);
    x = langevin_sample([&score, sigma](const Tensor& v) { return score(v, sigma); }, x, steps_per_level, eps,
                        rng);
  }
  return x;
}

Tensor reverse_sde_sample(const TimeField& score, const ReverseSdeOptions& options, std::size_t n,
                          std::size_t dim, Rng& rng) {
  require(options.n_steps >= 1, "reverse_sde_sample: n_steps must be at least 1");
  require(options.horizon > 0.0, "reverse_sde_sample: horizon must be positive");
  require(static_cast<bool>(options.g), "reverse_sde_sample: diffusion g is required");
  const double dt = options.horizon / static_cast<double>(options.n_steps);
  const double sq = std::sqrt(dt);
  Tensor x = rng.normal(n, dim);
  for (std::size_t k = 0; k < options.n_steps; ++k) {
    const double t = options.horizon - static_cast<double>(k) * dt;
    const double g = options.g(t);
    const Tensor s = score(x, t);
    check_same_shape(s, x, "reverse_sde_sample");
    Tensor f;
    if (options.drift) {
      f = options.drift(x, t);
      check_same_shape(f, x, "reverse_sde_sample");
    } else {
      f = x * (-0.5 * g * g);
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= (f[i] - g * g * s[i]) * dt;
    if (g != 0.0)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += g * sq * rng.normal();
    check_bounded(x, k + 1, "reverse_sde_sample");
  }
  return x;
}

Tensor ddpm_conditional_score(const ddpm::NoiseSchedule& s, const Tensor& x_t, const Tensor& x0, std::size_t t) {
  if (t < 1 || t > s.steps()) {
    throw ContractError("ddpm_conditional_score: t = " + std::to_string(t) + " outside [1, " +
                        std::to_string(s.steps()) + "]");
  }
  check_same_shape(x_t, x0, "ddpm_conditional_score");
  const double ab = s.alpha_bar(t);
  const double sd = std::sqrt(1.0 - ab);
  Tensor out(x_t.rows(), x_t.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double eps = (x_t[i] - std::sqrt(ab) * x0[i]) / sd;
    out[i] = -eps / sd;
  }
  return out;
}

}  // namespace genlab::score
