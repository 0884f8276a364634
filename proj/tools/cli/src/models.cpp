#include "genlab/cli/models.hpp"

#include <cmath>

#include "genlab/adversarial.hpp"
#include "genlab/autoregressive.hpp"
#include "genlab/ddpm.hpp"
#include "genlab/ebm.hpp"
#include "genlab/errors.hpp"
#include "genlab/flows.hpp"
#include "genlab/nn.hpp"
#include "genlab/ppca.hpp"
#include "genlab/score.hpp"
#include "genlab/vae.hpp"

namespace genlab::cli {

namespace {

Table trace_table(std::vector<std::string> header, const std::vector<std::vector<double>>& cols) {
  const std::size_t n = cols.empty() ? 0 : cols.front().size();
  Tensor rows(n, cols.size() + 1);
  for (std::size_t i = 0; i < n; ++i) {
    rows(i, 0) = static_cast<double>(i);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (!std::isfinite(cols[c][i])) {
        throw NumericError("training produced a non-finite " + header[c + 1] + " at step " + std::to_string(i));
      }
      rows(i, c + 1) = cols[c][i];
    }
  }
  header.insert(header.begin(), "step");
  return {std::move(header), std::move(rows)};
}

Table column_table(std::vector<std::string> header, const std::vector<std::vector<double>>& cols) {
  const std::size_t n = cols.front().size();
  Tensor rows(n, cols.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < cols.size(); ++c) rows(i, c) = cols[c][i];
  return {std::move(header), std::move(rows)};
}

std::vector<double> column_of(const Tensor& t) { return t.column(0); }

nn::OptimizerConfig optimizer_config(const Config& cfg) {
  nn::OptimizerConfig o;
  o.kind = cfg.str("train.optimizer") == "sgd" ? nn::OptimizerKind::kSgd : nn::OptimizerKind::kAdam;
  o.learning_rate = cfg.real("train.lr");
  o.beta1 = cfg.real("train.beta1");
  o.beta2 = cfg.real("train.beta2");
  return o;
}

nn::Activation activation(const Config& cfg, const std::string& key) {
  return nn::activation_from_string(cfg.str(key));
}

std::vector<NamedTensor> values_of(const nn::NamedParameters& params) {
  std::vector<NamedTensor> out;
  for (const auto& [name, v] : params) out.push_back({name, v.value()});
  return out;
}

void assign_all(const nn::NamedParameters& params, const Checkpoint& ck) {
  if (params.size() != ck.tensors.size()) {
    throw CheckpointError("checkpoint: expected " + std::to_string(params.size()) + " tensors for a " + ck.kind +
                          " model, found " + std::to_string(ck.tensors.size()));
  }
  for (const auto& [name, v] : params) {
    const Tensor& t = ck.tensor(name);
    if (!t.same_shape(v.value())) {
      throw CheckpointError("checkpoint: tensor '" + name + "' has shape " + t.shape_string() + ", expected " +
                            v.value().shape_string());
    }
    v.assign(t);
  }
}

Tensor minibatch(const Tensor& data, std::size_t batch, Rng& rng) {
  return gather_rows(data, rng.indices(batch, data.rows()));
}

class PpcaModel final : public Model {
 public:
  PpcaModel(const Config& cfg, std::size_t dim) : cfg_(cfg) {
    const std::size_t k = cfg.count("ppca.k");
    if (k >= dim) {
      throw ConfigError("config key 'ppca.k': latent dimension " + std::to_string(k) +
                        " must be below the data dimension " + std::to_string(dim));
    }
    p_.W = Tensor(dim, k);
    p_.mu.assign(dim, 0.0);
    p_.noise_var = 1.0;
  }

  std::size_t dim() const override { return p_.dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    ppca::FitOptions o;
    o.max_iters = cfg_.count("ppca.iters");
    o.tol = cfg_.real("ppca.tol");
    const auto fit = ppca::fit_em(data, p_.latent_dim(), o, rng);
    p_ = fit.params;
    std::vector<double> loss;
    for (double ll : fit.loglik_trace) loss.push_back(-ll);
    return trace_table({"loss", "loglik"}, {loss, fit.loglik_trace});
  }

  Tensor sample(std::size_t n, Rng& rng) const override { return ppca::sample(p_, n, rng); }

  Table eval(const Tensor& x, Rng&) const override {
    std::vector<double> ll;
    for (std::size_t i = 0; i < x.rows(); ++i) ll.push_back(ppca::marginal_logpdf(p_, x.row(i)));
    return column_table({"loglik"}, {ll});
  }

  std::vector<NamedTensor> tensors() const override {
    return {{"W", p_.W}, {"mu", Tensor::row_vector(p_.mu)}, {"noise_var", Tensor::scalar(p_.noise_var)}};
  }

  void load(const Checkpoint& ck) override {
    const Tensor& w = ck.tensor("W");
    const Tensor& mu = ck.tensor("mu");
    const Tensor& nv = ck.tensor("noise_var");
    if (ck.tensors.size() != 3 || !w.same_shape(p_.W) || mu.rows() != 1 || mu.cols() != p_.dim() || nv.size() != 1) {
      throw CheckpointError("checkpoint: ppca tensors do not match the configured shapes");
    }
    p_.W = w;
    p_.mu = mu.values();
    p_.noise_var = nv[0];
    try {
      p_.validate();
    } catch (const ContractError& e) {
      throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
  }

 private:
  Config cfg_;
  ppca::PpcaParams p_;
};

vae::VaeConfig vae_config(const Config& cfg, std::size_t dim) {
  vae::VaeConfig v;
  v.data_dim = dim;
  v.latent_dim = cfg.count("vae.latent");
  v.hidden = cfg.counts("vae.hidden");
  v.activation = activation(cfg, "vae.activation");
  v.decoder_var = cfg.real("vae.decoder_var");
  v.linear_decoder = cfg.flag("vae.linear_decoder");
  return v;
}

class VaeFamily final : public Model {
 public:
  VaeFamily(const Config& cfg, std::size_t dim, Rng& rng) : cfg_(cfg), m_(vae_config(cfg, dim), rng) {}

  std::size_t dim() const override { return m_.data_dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    nn::Optimizer opt(optimizer_config(cfg_));
    const std::size_t steps = cfg_.count("train.steps"), batch = cfg_.count("train.batch");
    const double beta = cfg_.real("vae.beta");
    std::vector<double> loss, rec, kl;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto st = vae::train_step(m_, minibatch(data, batch, rng), beta, opt, rng);
      loss.push_back(st.loss);
      rec.push_back(st.reconstruction);
      kl.push_back(st.kl);
      if (!std::isfinite(st.loss)) throw NumericError("vae: non-finite loss at step " + std::to_string(s));
    }
    return trace_table({"loss", "reconstruction", "kl"}, {loss, rec, kl});
  }

  Tensor sample(std::size_t n, Rng& rng) const override { return vae::generate(m_, n, rng); }

  Table eval(const Tensor& x, Rng& rng) const override {
    const auto mc = vae::elbo(m_, x, cfg_.count("vae.eval_mc"), rng);
    if (!m_.has_linear_decoder()) return column_table({"elbo"}, {mc});
    // Linear decoder: exact ELBO and exact log p(x) alongside the MC estimate.
    ad::NoGradGuard ng;
    const auto p = vae::as_linear_gaussian(m_);
    const auto enc = m_.encode(ad::constant(x));
    std::vector<double> exact, ll;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      linalg::DiagGaussian q;
      for (std::size_t j = 0; j < m_.latent_dim(); ++j) {
        q.mean.push_back(enc.mean.value()(i, j));
        q.var.push_back(enc.sigma.value()(i, j) * enc.sigma.value()(i, j));
      }
      exact.push_back(vae::linear_gaussian_elbo(p, x.row(i), q).joint);
      ll.push_back(ppca::marginal_logpdf(p, x.row(i)));
    }
    return column_table({"elbo", "elbo_mc", "loglik"}, {exact, mc, ll});
  }

  std::vector<NamedTensor> tensors() const override { return values_of(m_.named_parameters()); }
  void load(const Checkpoint& ck) override { assign_all(m_.named_parameters(), ck); }

 private:
  Config cfg_;
  vae::VaeModel m_;
};

ddpm::NoiseSchedule ddpm_schedule(const Config& cfg) {
  const std::size_t T = cfg.count("ddpm.T");
  if (cfg.str("ddpm.schedule") == "scaled") return ddpm::scaled_schedule(T);
  return ddpm::make_schedule(T, cfg.real("ddpm.beta_start"), cfg.real("ddpm.beta_end"));
}

class DdpmFamily final : public Model {
 public:
  DdpmFamily(const Config& cfg, std::size_t dim, Rng& rng)
      : cfg_(cfg),
        sched_(ddpm_schedule(cfg)),
        net_(dim, sched_.steps(), cfg.counts("ddpm.hidden"), rng, activation(cfg, "ddpm.activation")) {}

  std::size_t dim() const override { return net_.dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    nn::Optimizer opt(optimizer_config(cfg_));
    const auto loss = ddpm::train(net_, sched_, data, {cfg_.count("train.steps"), cfg_.count("train.batch")}, opt, rng);
    return trace_table({"loss", "loss_smoothed"}, {loss, ddpm::smooth(loss)});
  }

  Tensor sample(std::size_t n, Rng& rng) const override {
    return ddpm::sample(net_.predictor(), sched_, n, dim(), rng);
  }

  // L_simple per row: one t and ε draw per example.
  Table eval(const Tensor& x, Rng& rng) const override {
    ad::NoGradGuard ng;
    const auto pred = net_.predictor();
    std::vector<double> l;
    for (std::size_t i = 0; i < x.rows(); ++i)
      l.push_back(ddpm::loss_simple(pred, sched_, Tensor::row_vector(x.row(i)), rng).item());
    return column_table({"l_simple"}, {l});
  }

  std::vector<NamedTensor> tensors() const override { return values_of(net_.net().named_parameters("eps")); }
  std::map<std::string, std::vector<double>> arrays() const override { return {{"betas", sched_.betas()}}; }

  void load(const Checkpoint& ck) override {
    const auto it = ck.arrays.find("betas");
    if (it == ck.arrays.end() || it->second.size() != sched_.steps()) {
      throw CheckpointError("checkpoint: ddpm schedule missing or of the wrong length");
    }
    try {
      sched_ = ddpm::NoiseSchedule(it->second);
    } catch (const ContractError& e) {
      throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
    assign_all(net_.net().named_parameters("eps"), ck);
  }

 private:
  Config cfg_;
  ddpm::NoiseSchedule sched_;
  ddpm::EpsNet net_;
};

class ScoreFamily final : public Model {
 public:
  ScoreFamily(const Config& cfg, std::size_t dim, Rng& rng)
      : cfg_(cfg),
        ladder_(score::SigmaLadder::geometric(cfg.real("score.sigma_max"), cfg.real("score.sigma_min"),
                                              cfg.count("score.levels"))),
        net_(dim, cfg.counts("score.hidden"), rng, activation(cfg, "score.activation")) {}

  std::size_t dim() const override { return net_.dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    nn::Optimizer opt(optimizer_config(cfg_));
    score::TrainOptions o;
    o.steps = cfg_.count("train.steps");
    o.batch = cfg_.count("train.batch");
    o.weighting = cfg_.str("score.weighting") == "none" ? score::Weighting::kNone : score::Weighting::kSigmaSquared;
    return trace_table({"loss"}, {score::train_ms_dsm(net_, data, ladder_, o, opt, rng)});
  }

  Tensor sample(std::size_t n, Rng& rng) const override {
    return score::annealed_langevin(net_.field(), ladder_, cfg_.count("score.steps_per_level"),
                                    cfg_.real("score.eps0"), n, dim(), rng);
  }

  Table eval(const Tensor&, Rng&) const override {
    throw ConfigError("eval: score models define neither a density nor a bound to evaluate");
  }

  std::vector<NamedTensor> tensors() const override { return values_of(net_.net().named_parameters("score")); }
  std::map<std::string, std::vector<double>> arrays() const override { return {{"sigmas", ladder_.sigmas()}}; }

  void load(const Checkpoint& ck) override {
    const auto it = ck.arrays.find("sigmas");
    if (it == ck.arrays.end() || it->second.size() != ladder_.size()) {
      throw CheckpointError("checkpoint: score ladder missing or of the wrong length");
    }
    try {
      ladder_ = score::SigmaLadder(it->second);
    } catch (const ContractError& e) {
      throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
    assign_all(net_.net().named_parameters("score"), ck);
  }

 private:
  Config cfg_;
  score::SigmaLadder ladder_;
  score::ScoreNet net_;
};

flows::FlowStack make_flow(const Config& cfg, std::size_t dim, Rng& rng) {
  if (dim < 2) throw ConfigError("config key 'model': coupling flows need data of dimension at least 2");
  flows::CouplingLayer::Options o;
  o.hidden = cfg.counts("flow.hidden");
  o.activation = activation(cfg, "flow.activation");
  o.clamp_scale = cfg.flag("flow.clamp");
  return flows::make_coupling_stack(dim, cfg.count("flow.pairs"), rng, o);
}

class FlowFamily final : public Model {
 public:
  FlowFamily(const Config& cfg, std::size_t dim, Rng& rng) : cfg_(cfg), stack_(make_flow(cfg, dim, rng)) {}

  std::size_t dim() const override { return stack_.dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    nn::Optimizer opt(optimizer_config(cfg_));
    return trace_table(
        {"loss"}, {flows::flow_fit(stack_, data, {cfg_.count("train.steps"), cfg_.count("train.batch")}, opt, rng)});
  }

  Tensor sample(std::size_t n, Rng& rng) const override { return flows::flow_sample(stack_, n, rng); }

  Table eval(const Tensor& x, Rng&) const override { return column_table({"loglik"}, {flows::flow_logpdf(stack_, x)}); }

  std::vector<NamedTensor> tensors() const override { return values_of(stack_.named_parameters()); }
  void load(const Checkpoint& ck) override { assign_all(stack_.named_parameters(), ck); }

 private:
  Config cfg_;
  flows::FlowStack stack_;
};

ar::ArConfig ar_config(const Config& cfg, std::size_t dim) {
  ar::ArConfig a;
  a.dim = dim;
  a.hidden = cfg.counts("ar.hidden");
  a.activation = activation(cfg, "ar.activation");
  if (cfg.has("ar.order")) a.order = cfg.counts("ar.order");
  return a;
}

class ArFamily final : public Model {
 public:
  ArFamily(const Config& cfg, std::size_t dim, Rng& rng) : cfg_(cfg), m_(ar_config(cfg, dim), rng) {}

  std::size_t dim() const override { return m_.dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    nn::Optimizer opt(optimizer_config(cfg_));
    return trace_table({"loss"},
                       {ar::ar_fit(m_, data, {cfg_.count("train.steps"), cfg_.count("train.batch")}, opt, rng)});
  }

  Tensor sample(std::size_t n, Rng& rng) const override { return ar::ar_sample(m_, n, rng); }

  Table eval(const Tensor& x, Rng&) const override { return column_table({"loglik"}, {ar::ar_logpdf(m_, x)}); }

  std::vector<NamedTensor> tensors() const override { return values_of(m_.named_parameters()); }
  void load(const Checkpoint& ck) override { assign_all(m_.named_parameters(), ck); }

 private:
  Config cfg_;
  ar::ArModel m_;
};

nn::NamedParameters concat(nn::NamedParameters a, const nn::NamedParameters& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class GanFamily final : public Model {
 public:
  GanFamily(const Config& cfg, std::size_t dim, Rng& rng)
      : cfg_(cfg),
        g_(cfg.count("gan.latent"), dim, cfg.counts("gan.g_hidden"), rng),
        d_(dim, cfg.counts("gan.d_hidden"), rng) {}

  std::size_t dim() const override { return g_.data_dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    gan::GanOptions o;
    o.steps = cfg_.count("train.steps");
    o.batch = cfg_.count("train.batch");
    o.loss = cfg_.str("gan.loss") == "minimax" ? gan::GenLoss::kMinimax : gan::GenLoss::kNonSaturating;
    const auto tr = gan::train_gan(g_, d_, data, o, optimizer_config(cfg_), rng);
    return trace_table({"loss", "g_loss"}, {tr.d_loss, tr.g_loss});
  }

  Tensor sample(std::size_t n, Rng& rng) const override { return g_.sample_values(n, rng); }

  Table eval(const Tensor& x, Rng&) const override { return column_table({"d_prob"}, {column_of(d_.prob(x))}); }

  nn::NamedParameters named() const {
    return concat(g_.net().named_parameters("generator"), d_.net().named_parameters("discriminator"));
  }
  std::vector<NamedTensor> tensors() const override { return values_of(named()); }
  void load(const Checkpoint& ck) override { assign_all(named(), ck); }

 private:
  Config cfg_;
  gan::Generator g_;
  gan::Discriminator d_;
};

class WganFamily final : public Model {
 public:
  WganFamily(const Config& cfg, std::size_t dim, Rng& rng)
      : cfg_(cfg),
        g_(cfg.count("wgan.latent"), dim, cfg.counts("wgan.g_hidden"), rng),
        c_(dim, cfg.counts("wgan.c_hidden"), rng) {}

  std::size_t dim() const override { return g_.data_dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    gan::WganOptions o;
    o.steps = cfg_.count("train.steps");
    o.batch = cfg_.count("train.batch");
    o.lambda = cfg_.real("wgan.lambda");
    o.n_critic = cfg_.count("wgan.n_critic");
    const auto tr = gan::train_wgan_gp(g_, c_, data, o, optimizer_config(cfg_), rng);
    return trace_table({"loss", "critic_value"}, {tr.g_loss, tr.critic_value});
  }

  Tensor sample(std::size_t n, Rng& rng) const override { return g_.sample_values(n, rng); }

  // critic_gap averages to the dual estimate E_x[f] − E_G[f].
  Table eval(const Tensor& x, Rng& rng) const override {
    ad::NoGradGuard ng;
    const auto f = column_of(c_.net()(x));
    const auto fake = column_of(c_.net()(g_.sample_values(std::max<std::size_t>(x.rows(), 1), rng)));
    double fake_mean = 0.0;
    for (double v : fake) fake_mean += v / static_cast<double>(fake.size());
    std::vector<double> gap;
    for (double v : f) gap.push_back(v - fake_mean);
    return column_table({"critic", "critic_gap"}, {f, gap});
  }

  nn::NamedParameters named() const {
    return concat(g_.net().named_parameters("generator"), c_.net().named_parameters("critic"));
  }
  std::vector<NamedTensor> tensors() const override { return values_of(named()); }
  void load(const Checkpoint& ck) override { assign_all(named(), ck); }

 private:
  Config cfg_;
  gan::Generator g_;
  gan::Critic c_;
};

class EbmFamily final : public Model {
 public:
  EbmFamily(const Config& cfg, std::size_t dim, Rng& rng)
      : cfg_(cfg), net_(dim, cfg.counts("ebm.hidden"), rng, activation(cfg, "ebm.activation")) {}

  std::size_t dim() const override { return net_.dim(); }

  Table train(const Tensor& data, Rng& rng) override {
    nn::Optimizer opt(optimizer_config(cfg_));
    ebm::TrainOptions o;
    o.steps = cfg_.count("train.steps");
    o.batch = cfg_.count("train.batch");
    o.langevin_steps = cfg_.count("ebm.langevin_steps");
    o.langevin_step = cfg_.real("ebm.langevin_step");
    o.regulariser = cfg_.real("ebm.regulariser");
    return trace_table({"loss"}, {ebm::train_contrastive(net_, data, o, opt, rng)});
  }

  Tensor sample(std::size_t n, Rng& rng) const override {
    const Tensor x0 = rng.normal(n, dim());
    return ebm::ebm_langevin(net_.fn(), x0, cfg_.count("ebm.sample_steps"), cfg_.real("ebm.langevin_step"), rng);
  }

  Table eval(const Tensor& x, Rng&) const override {
    auto e = column_of(ebm::unnorm_logpdf(net_.fn(), x));
    for (double& v : e) v = -v;
    return column_table({"energy"}, {e});
  }

  std::vector<NamedTensor> tensors() const override { return values_of(net_.net().named_parameters("energy")); }
  void load(const Checkpoint& ck) override { assign_all(net_.net().named_parameters("energy"), ck); }

 private:
  Config cfg_;
  ebm::EnergyNet net_;
};

}  // namespace

std::unique_ptr<Model> make_model(const Config& cfg, std::size_t dim, Rng& rng) {
  const std::string& k = cfg.model();
  if (k == "ppca") return std::make_unique<PpcaModel>(cfg, dim);
  if (k == "vae") return std::make_unique<VaeFamily>(cfg, dim, rng);
  if (k == "ddpm") return std::make_unique<DdpmFamily>(cfg, dim, rng);
  if (k == "score") return std::make_unique<ScoreFamily>(cfg, dim, rng);
  if (k == "flow") return std::make_unique<FlowFamily>(cfg, dim, rng);
  if (k == "ar") return std::make_unique<ArFamily>(cfg, dim, rng);
  if (k == "gan") return std::make_unique<GanFamily>(cfg, dim, rng);
  if (k == "wgan") return std::make_unique<WganFamily>(cfg, dim, rng);
  if (k == "ebm") return std::make_unique<EbmFamily>(cfg, dim, rng);
  throw ConfigError("unknown model kind '" + k + "'");
}

Checkpoint make_checkpoint(const Model& m, const Config& cfg, const Rng::State& rng) {
  Checkpoint ck;
  ck.kind = cfg.model();
  ck.data_dim = m.dim();
  ck.config = cfg.values();
  ck.arrays = m.arrays();
  ck.rng = rng;
  ck.tensors = m.tensors();
  return ck;
}

std::unique_ptr<Model> restore_model(const Checkpoint& ck) {
  Config cfg;
  try {
    cfg = Config::from_map(ck.config);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  if (cfg.model() != ck.kind) throw CheckpointError("checkpoint: kind does not match the config echo");
  Rng scratch(0);
  auto m = make_model(cfg, ck.data_dim, scratch);
  m->load(ck);
  return m;
}

}  // namespace genlab::cli
