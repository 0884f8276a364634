#include "genlab/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace genlab::cli {

const std::vector<std::string> kModelKinds = {"ppca", "vae", "ddpm", "score", "flow", "ar", "gan", "wgan", "ebm"};

namespace {

enum class Type { kString, kUint, kReal, kBool, kReals, kUints, kRealLists };

struct KeySpec {
  const char* name;
  Type type;
  const char* fallback;  // nullptr: required unless `optional`
  const char* models;    // space-separated families, "" for all
  bool optional = false;
};

// Default training steps depend on the family; filled in resolve().
const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"model", Type::kString, nullptr, ""},
      {"seed", Type::kUint, nullptr, ""},
      {"output", Type::kString, "run", ""},

      {"data.kind", Type::kString, nullptr, ""},
      {"data.n", Type::kUint, "2000", ""},
      {"data.noise", Type::kReal, nullptr, "", true},
      {"data.r_inner", Type::kReal, nullptr, "", true},
      {"data.r_outer", Type::kReal, nullptr, "", true},
      {"data.mean", Type::kReals, nullptr, "", true},
      {"data.cov", Type::kReals, nullptr, "", true},
      {"data.weights", Type::kReals, nullptr, "", true},
      {"data.means", Type::kRealLists, nullptr, "", true},
      {"data.covs", Type::kRealLists, nullptr, "", true},

      {"train.steps", Type::kUint, nullptr, "vae ddpm score flow ar gan wgan ebm", true},
      {"train.batch", Type::kUint, "128", "vae ddpm score flow ar gan wgan ebm"},
      {"train.lr", Type::kReal, "0.001", "vae ddpm score flow ar gan wgan ebm"},
      {"train.optimizer", Type::kString, "adam", "vae ddpm score flow ar gan wgan ebm"},
      {"train.beta1", Type::kReal, "0.9", "vae ddpm score flow ar gan wgan ebm"},
      {"train.beta2", Type::kReal, "0.999", "vae ddpm score flow ar gan wgan ebm"},

      {"ppca.k", Type::kUint, "1", "ppca"},
      {"ppca.iters", Type::kUint, "100", "ppca"},
      {"ppca.tol", Type::kReal, "1e-08", "ppca"},

      {"vae.latent", Type::kUint, "2", "vae"},
      {"vae.hidden", Type::kUints, "64", "vae"},
      {"vae.activation", Type::kString, "tanh", "vae"},
      {"vae.decoder_var", Type::kReal, "0.1", "vae"},
      {"vae.beta", Type::kReal, "1", "vae"},
      {"vae.linear_decoder", Type::kBool, "false", "vae"},
      {"vae.eval_mc", Type::kUint, "16", "vae"},

      {"ddpm.T", Type::kUint, "100", "ddpm"},
      {"ddpm.schedule", Type::kString, "scaled", "ddpm"},
      {"ddpm.beta_start", Type::kReal, nullptr, "ddpm", true},
      {"ddpm.beta_end", Type::kReal, nullptr, "ddpm", true},
      {"ddpm.hidden", Type::kUints, "128,128", "ddpm"},
      {"ddpm.activation", Type::kString, "tanh", "ddpm"},

      {"score.sigma_max", Type::kReal, "3", "score"},
      {"score.sigma_min", Type::kReal, "0.01", "score"},
      {"score.levels", Type::kUint, "10", "score"},
      {"score.hidden", Type::kUints, "128,128", "score"},
      {"score.activation", Type::kString, "softplus", "score"},
      {"score.weighting", Type::kString, "sigma2", "score"},
      {"score.steps_per_level", Type::kUint, "100", "score"},
      {"score.eps0", Type::kReal, "2e-05", "score"},

      {"flow.pairs", Type::kUint, "6", "flow"},
      {"flow.hidden", Type::kUints, "64", "flow"},
      {"flow.activation", Type::kString, "tanh", "flow"},
      {"flow.clamp", Type::kBool, "true", "flow"},

      {"ar.hidden", Type::kUints, "64", "ar"},
      {"ar.activation", Type::kString, "tanh", "ar"},
      {"ar.order", Type::kUints, nullptr, "ar", true},

      {"gan.latent", Type::kUint, "2", "gan"},
      {"gan.g_hidden", Type::kUints, "64,64", "gan"},
      {"gan.d_hidden", Type::kUints, "64,64", "gan"},
      {"gan.loss", Type::kString, "nonsat", "gan"},

      {"wgan.latent", Type::kUint, "2", "wgan"},
      {"wgan.g_hidden", Type::kUints, "64,64", "wgan"},
      {"wgan.c_hidden", Type::kUints, "64,64", "wgan"},
      {"wgan.lambda", Type::kReal, "10", "wgan"},
      {"wgan.n_critic", Type::kUint, "5", "wgan"},

      {"ebm.hidden", Type::kUints, "64,64", "ebm"},
      {"ebm.activation", Type::kString, "softplus", "ebm"},
      {"ebm.langevin_steps", Type::kUint, "100", "ebm"},
      {"ebm.langevin_step", Type::kReal, "0.01", "ebm"},
      {"ebm.regulariser", Type::kReal, "0.0001", "ebm"},
      {"ebm.sample_steps", Type::kUint, "500", "ebm"},
  };
  return keys;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : schema())
    if (name == k.name) return &k;
  return nullptr;
}

bool applies(const KeySpec& k, const std::string& model) {
  const std::string m = k.models;
  if (m.empty()) return true;
  std::istringstream ss(m);
  std::string w;
  while (ss >> w)
    if (w == model) return true;
  return false;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(s);
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_real(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc{} && p == e;
}

bool parse_uint(const std::string& s, std::uint64_t& v) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key '" + key + "': invalid value '" + value + "' (" + what + ")");
}

void check_type(const std::string& key, const std::string& value, Type t) {
  double d = 0.0;
  std::uint64_t u = 0;
  switch (t) {
    case Type::kString:
      if (value.empty()) bad_value(key, value, "expected a non-empty string");
      break;
    case Type::kUint:
      if (!parse_uint(value, u)) bad_value(key, value, "expected a non-negative integer");
      break;
    case Type::kReal:
      if (!parse_real(value, d) || !std::isfinite(d)) bad_value(key, value, "expected a finite number");
      break;
    case Type::kBool:
      if (value != "true" && value != "false") bad_value(key, value, "expected true or false");
      break;
    case Type::kReals:
      for (const auto& c : split(value, ','))
        if (!parse_real(c, d) || !std::isfinite(d)) bad_value(key, value, "expected comma-separated numbers");
      break;
    case Type::kUints:
      for (const auto& c : split(value, ','))
        if (!parse_uint(c, u)) bad_value(key, value, "expected comma-separated non-negative integers");
      break;
    case Type::kRealLists:
      for (const auto& group : split(value, ';'))
        for (const auto& c : split(group, ','))
          if (!parse_real(c, d) || !std::isfinite(d))
            bad_value(key, value, "expected ';'-separated lists of comma-separated numbers");
      break;
  }
}

void require_choice(const std::string& key, const std::string& value, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (value == o) return;
  std::string list;
  for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
  throw ConfigError("config key '" + key + "': '" + value + "' is not one of " + list);
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": missing key");
    if (c.values_.count(key)) throw ConfigError("config key '" + key + "' is set twice");
    c.values_[key] = value;
  }
  c.resolve();
  return c;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in);
}

Config Config::from_map(const std::map<std::string, std::string>& values) {
  Config c;
  c.values_ = values;
  c.resolve();
  return c;
}

void Config::resolve() {
  for (const char* req : {"model", "seed", "data.kind"}) {
    if (!values_.count(req)) throw ConfigError(std::string("config is missing required key '") + req + "'");
  }
  const std::string model = values_.at("model");
  if (std::find(kModelKinds.begin(), kModelKinds.end(), model) == kModelKinds.end()) {
    std::string list;
    for (const auto& k : kModelKinds) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("config key 'model': '" + model + "' is not one of " + list);
  }
  for (const auto& [key, value] : values_) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    if (!applies(*spec, model)) {
      throw ConfigError("config key '" + key + "' does not apply to model '" + model + "'");
    }
    check_type(key, value, spec->type);
  }

  const std::string kind = values_.at("data.kind");
  require_choice("data.kind", kind, {"gaussian", "gmm", "two_rings", "moons"});
  const std::map<std::string, std::vector<std::string>> data_keys = {
      {"data.noise", {"two_rings", "moons"}},  {"data.r_inner", {"two_rings"}}, {"data.r_outer", {"two_rings"}},
      {"data.mean", {"gaussian"}},             {"data.cov", {"gaussian"}},      {"data.weights", {"gmm"}},
      {"data.means", {"gmm"}},                 {"data.covs", {"gmm"}}};
  for (const auto& [key, kinds] : data_keys) {
    if (values_.count(key) && std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
      throw ConfigError("config key '" + key + "' does not apply to data.kind '" + kind + "'");
    }
  }
  if (kind == "gmm") {
    for (const char* k : {"data.weights", "data.means", "data.covs"})
      if (!values_.count(k)) throw ConfigError(std::string("config is missing required key '") + k + "' for gmm data");
  }
  if (model == "ddpm" && (!values_.count("ddpm.schedule") || values_.at("ddpm.schedule") == "scaled")) {
    for (const char* k : {"ddpm.beta_start", "ddpm.beta_end"})
      if (values_.count(k)) throw ConfigError(std::string("config key '") + k + "' requires ddpm.schedule = linear");
  }

  // defaults
  for (const auto& k : schema()) {
    if (values_.count(k.name) || !k.fallback || !applies(k, model)) continue;
    values_[k.name] = k.fallback;
  }
  if (kind == "two_rings") {
    values_.try_emplace("data.noise", "0.05");
    values_.try_emplace("data.r_inner", "1");
    values_.try_emplace("data.r_outer", "2");
  } else if (kind == "moons") {
    values_.try_emplace("data.noise", "0.1");
  } else if (kind == "gaussian") {
    values_.try_emplace("data.mean", "0,0");
  }
  if (model == "ddpm" && values_.at("ddpm.schedule") == "linear") {
    values_.try_emplace("ddpm.beta_start", "0.0001");
    values_.try_emplace("ddpm.beta_end", "0.02");
  }
  if (model != "ppca") {
    static const std::map<std::string, const char*> steps = {{"vae", "3000"}, {"ddpm", "5000"}, {"score", "3000"},
                                                             {"flow", "3000"}, {"ar", "3000"},  {"gan", "2000"},
                                                             {"wgan", "2000"}, {"ebm", "500"}};
    values_.try_emplace("train.steps", steps.at(model));
  }

  // choices
  auto choice = [&](const char* key, std::initializer_list<const char*> options) {
    if (values_.count(key)) require_choice(key, values_.at(key), options);
  };
  for (const char* k : {"vae.activation", "ddpm.activation", "score.activation", "flow.activation", "ar.activation",
                        "ebm.activation"})
    choice(k, {"tanh", "softplus", "identity"});
  choice("train.optimizer", {"adam", "sgd"});
  choice("ddpm.schedule", {"scaled", "linear"});
  choice("score.weighting", {"sigma2", "none"});
  choice("gan.loss", {"nonsat", "minimax"});

  // ranges
  auto positive = [&](const char* key) {
    if (values_.count(key) && !(real(key) > 0.0)) throw ConfigError(std::string("config key '") + key + "' must be positive");
  };
  for (const char* k : {"train.steps", "train.batch", "train.lr", "ppca.k", "ppca.iters", "vae.latent",
                        "vae.decoder_var", "vae.eval_mc", "ddpm.T", "score.sigma_max", "score.sigma_min",
                        "score.levels", "score.steps_per_level", "score.eps0", "flow.pairs", "gan.latent",
                        "wgan.latent", "wgan.n_critic", "ebm.langevin_step", "data.n", "ddpm.beta_start",
                        "ddpm.beta_end"})
    positive(k);
  if (has("train.lr") && real("train.lr") <= 0.0) throw ConfigError("config key 'train.lr' must be positive");
  if (model == "ddpm" && str("ddpm.schedule") == "scaled" && count("ddpm.T") <= 20) {
    throw ConfigError("config key 'ddpm.T' must exceed 20 for the scaled schedule");
  }
  if (model == "score" && real("score.sigma_min") >= real("score.sigma_max")) {
    throw ConfigError("config key 'score.sigma_min' must be below score.sigma_max");
  }
  for (const char* k : {"vae.hidden", "ddpm.hidden", "score.hidden", "flow.hidden", "ar.hidden", "gan.g_hidden",
                        "gan.d_hidden", "wgan.g_hidden", "wgan.c_hidden", "ebm.hidden"}) {
    if (!values_.count(k)) continue;
    for (std::size_t w : counts(k))
      if (w == 0) throw ConfigError(std::string("config key '") + k + "': widths must be positive");
  }
  try {
    dataset().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config data.*: ") + e.what());
  }
}

std::uint64_t Config::seed() const {
  std::uint64_t v = 0;
  parse_uint(values_.at("seed"), v);
  return v;
}

std::string Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config key '" + key + "' is not set");
  return it->second;
}

double Config::real(const std::string& key) const {
  double v = 0.0;
  const std::string s = str(key);
  if (!parse_real(s, v)) bad_value(key, s, "expected a number");
  return v;
}

std::size_t Config::count(const std::string& key) const {
  std::uint64_t v = 0;
  const std::string s = str(key);
  if (!parse_uint(s, v)) bad_value(key, s, "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool Config::flag(const std::string& key) const { return str(key) == "true"; }

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& c : split(str(key), ',')) {
    double v = 0.0;
    parse_real(c, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> Config::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& c : split(str(key), ',')) {
    std::uint64_t v = 0;
    parse_uint(c, v);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

namespace {

Tensor square_matrix(const std::string& key, const std::vector<double>& v, std::size_t d) {
  if (v.size() != d * d) {
    throw ConfigError("config key '" + key + "': expected " + std::to_string(d * d) + " row-major entries, got " +
                      std::to_string(v.size()));
  }
  return Tensor(d, d, v);
}

}  // namespace

data::DatasetSpec Config::dataset() const {
  const std::string kind = str("data.kind");
  const std::size_t n = count("data.n");
  if (kind == "two_rings") return data::DatasetSpec::two_rings(real("data.r_inner"), real("data.r_outer"), real("data.noise"), n);
  if (kind == "moons") return data::DatasetSpec::moons(real("data.noise"), n);
  if (kind == "gaussian") {
    const auto mean = reals("data.mean");
    const Tensor cov = has("data.cov") ? square_matrix("data.cov", reals("data.cov"), mean.size())
                                       : Tensor::identity(mean.size());
    return data::DatasetSpec::gaussian(mean, cov, n);
  }
  const auto weights = reals("data.weights");
  const auto means = split(str("data.means"), ';');
  const auto covs = split(str("data.covs"), ';');
  if (means.size() != weights.size() || covs.size() != weights.size()) {
    throw ConfigError("config keys 'data.weights', 'data.means' and 'data.covs' must list the same number of components");
  }
  std::vector<data::Component> comps;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    std::vector<double> mean, cov;
    for (const auto& c : split(means[i], ',')) mean.push_back(std::stod(c));
    for (const auto& c : split(covs[i], ',')) cov.push_back(std::stod(c));
    comps.push_back({mean, square_matrix("data.covs", cov, mean.size())});
  }
  return data::DatasetSpec::gmm(weights, std::move(comps), n);
}

}  // namespace genlab::cli
