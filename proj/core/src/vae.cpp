#include "genlab/vae.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "genlab/errors.hpp"

namespace genlab::vae {

namespace {

const double kLogSigmaMin = std::log(1e-4);
const double kLogSigmaMax = std::log(1e4);

nn::Mlp make_encoder(const VaeConfig& c, Rng& rng) {
  std::vector<std::size_t> w{c.data_dim};
  w.insert(w.end(), c.hidden.begin(), c.hidden.end());
  w.push_back(2 * c.latent_dim);
  return nn::Mlp(std::move(w), rng, {c.activation, nn::Activation::kIdentity, 1.0});
}

nn::Mlp make_decoder(const VaeConfig& c, Rng& rng) {
  std::vector<std::size_t> w{c.latent_dim};
  if (!c.linear_decoder) w.insert(w.end(), c.hidden.begin(), c.hidden.end());
  w.push_back(c.data_dim);
  return nn::Mlp(std::move(w), rng, {c.activation, nn::Activation::kIdentity, 1.0});
}

}  // namespace

VaeModel::VaeModel(const VaeConfig& config, Rng& rng)
    : VaeModel(make_encoder(config, rng), make_decoder(config, rng), config.decoder_var) {}

VaeModel::VaeModel(nn::Mlp encoder, nn::Mlp decoder, double decoder_var)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)), decoder_var_(decoder_var) {
  require(decoder_var_ > 0.0, "vae: decoder variance must be positive");
  require(encoder_.output_dim() == 2 * decoder_.input_dim(),
          "vae: encoder output width must be twice the latent dimension");
  require(encoder_.input_dim() == decoder_.output_dim(), "vae: encoder input and decoder output differ");
}

VaeModel::Encoding VaeModel::encode(const ad::Var& x) const {
  const std::size_t k = latent_dim();
  ad::Var h = encoder_.forward(x);
  Encoding e;
  e.mean = ad::slice_cols(h, 0, k);
  e.log_sigma = ad::clamp(ad::slice_cols(h, k, 2 * k), kLogSigmaMin, kLogSigmaMax);
  e.sigma = ad::exp(e.log_sigma);
  return e;
}

ad::Var VaeModel::decode(const ad::Var& z) const { return decoder_.forward(z); }

bool VaeModel::has_linear_decoder() const {
  return decoder_.num_layers() == 1 && decoder_.options().output == nn::Activation::kIdentity;
}

std::vector<ad::Var> VaeModel::parameters() const {
  auto p = encoder_.parameters();
  auto q = decoder_.parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

nn::NamedParameters VaeModel::named_parameters() const {
  auto p = encoder_.named_parameters("encoder");
  auto q = decoder_.named_parameters("decoder");
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

ad::Var reparam_sample(const ad::Var& mu, const ad::Var& sigma, const ad::Var& eps) {
  if (mu.value().shape() != sigma.value().shape() || mu.value().shape() != eps.value().shape()) {
    throw DimensionError("reparam_sample: mu " + mu.value().shape_string() + ", sigma " +
                         sigma.value().shape_string() + ", eps " + eps.value().shape_string());
  }
  for (double s : sigma.value().values()) require(s > 0.0, "reparam_sample: sigma must be positive");
  return mu + sigma * eps;
}

ElboTerms elbo_terms(const VaeModel& model, const ad::Var& x, const Tensor& eps) {
  const auto enc = model.encode(x);
  ad::Var z = reparam_sample(enc.mean, enc.sigma, ad::constant(eps));
  ad::Var r = x - model.decode(z);
  const double var = model.decoder_var();
  const double d = static_cast<double>(model.data_dim());
  ElboTerms t;
  t.reconstruction =
      ad::sum_cols(ad::square(r)) * (-0.5 / var) - 0.5 * d * std::log(2.0 * std::numbers::pi * var);
  // ½ Σ (μ² + σ² − 1 − 2 log σ)
  ad::Var kl_el = ad::square(enc.mean) + ad::square(enc.sigma) - 1.0 - 2.0 * enc.log_sigma;
  t.kl = ad::sum_cols(kl_el) * 0.5;
  return t;
}

std::vector<double> elbo(const VaeModel& model, const Tensor& x, std::size_t n_mc, Rng& rng) {
  require(n_mc >= 1, "elbo: n_mc must be at least 1");
  ad::NoGradGuard ng;
  const ad::Var xv = ad::constant(x);
  std::vector<double> recon(x.rows(), 0.0), kl(x.rows(), 0.0);
  for (std::size_t m = 0; m < n_mc; ++m) {
    const auto t = elbo_terms(model, xv, rng.normal(x.rows(), model.latent_dim()));
    for (std::size_t i = 0; i < x.rows(); ++i) {
      recon[i] += t.reconstruction.value()(i, 0);
      kl[i] = t.kl.value()(i, 0);
    }
  }
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = recon[i] / static_cast<double>(n_mc) - kl[i];
  return out;
}

ad::Var negative_elbo(const VaeModel& model, const Tensor& batch, double beta, Rng& rng) {
  require(beta >= 0.0, "vae: beta must be non-negative");
  require(batch.rows() > 0, "vae: empty batch");
  const auto t = elbo_terms(model, ad::constant(batch), rng.normal(batch.rows(), model.latent_dim()));
  if (beta == 0.0) return -ad::mean(t.reconstruction);
  return ad::mean(t.kl * beta - t.reconstruction);
}

StepStats train_step(VaeModel& model, const Tensor& batch, double beta, nn::Optimizer& opt, Rng& rng) {
  require(beta >= 0.0, "vae: beta must be non-negative");
  require(batch.rows() > 0, "vae: empty batch");
  const auto t = elbo_terms(model, ad::constant(batch), rng.normal(batch.rows(), model.latent_dim()));
  ad::Var recon = ad::mean(t.reconstruction);
  ad::Var kl = ad::mean(t.kl);
  ad::Var loss = beta == 0.0 ? -recon : kl * beta - recon;
  StepStats s{loss.item(), recon.item(), kl.item()};
  if (!std::isfinite(s.loss)) {
    std::ostringstream msg;
    msg << "vae: non-finite loss (reconstruction " << s.reconstruction << ", kl " << s.kl << ", beta "
        << beta << ")";
    throw NumericError(msg.str());
  }
  const auto params = model.parameters();
  opt.step(params, ad::backward(loss));
  return s;
}

Tensor generate(const VaeModel& model, std::size_t n, Rng& rng) {
  Tensor z = rng.normal(n, model.latent_dim());
  Tensor x = model.decoder()(z);
  const double sd = std::sqrt(model.decoder_var());
  for (double& v : x.data()) v += sd * rng.normal();
  return x;
}

ppca::PpcaParams as_linear_gaussian(const VaeModel& model) {
  require(model.has_linear_decoder(), "as_linear_gaussian: decoder is not a single affine layer");
  ppca::PpcaParams p;
  p.W = transpose(model.decoder().weight(0).value());
  p.mu = model.decoder().bias(0).value().values();
  p.noise_var = model.decoder_var();
  return p;
}

LinearGaussianElbo linear_gaussian_elbo(const ppca::PpcaParams& p, std::span<const double> x,
                                        const linalg::DiagGaussian& q) {
  p.validate();
  q.validate();
  const std::size_t d = p.dim(), k = p.latent_dim();
  if (x.size() != d || q.mean.size() != k) throw DimensionError("linear_gaussian_elbo: dimension mismatch");
  const double two_pi = 2.0 * std::numbers::pi;
  const double a2 = p.noise_var;

  // E_q ‖x − μ − W z‖² = ‖x − μ − W m‖² + Σ_j v_j ‖W_{:,j}‖²
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double r = x[i] - p.mu[i];
    for (std::size_t j = 0; j < k; ++j) r -= p.W(i, j) * q.mean[j];
    sq += r * r;
  }
  for (std::size_t j = 0; j < k; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < d; ++i) col += p.W(i, j) * p.W(i, j);
    sq += q.var[j] * col;
  }
  const double recon = -0.5 * static_cast<double>(d) * std::log(two_pi * a2) - 0.5 * sq / a2;

  double e_log_prior = -0.5 * static_cast<double>(k) * std::log(two_pi);
  double entropy = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    e_log_prior -= 0.5 * (q.mean[j] * q.mean[j] + q.var[j]);
    entropy += 0.5 * std::log(two_pi * std::numbers::e * q.var[j]);
  }

  LinearGaussianElbo out;
  out.loglik = ppca::marginal_logpdf(p, x);
  out.joint = recon + e_log_prior + entropy;
  out.prior = recon - linalg::kl_diag_to_standard(q);
  const auto post = ppca::posterior(p, x);
  out.posterior = out.loglik - linalg::kl_gaussian(q.mean, Tensor::diagonal(q.var), post.mean, post.cov);
  return out;
}

}  // namespace genlab::vae
