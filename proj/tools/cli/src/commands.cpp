#include "genlab/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "genlab/cli/checkpoint.hpp"
#include "genlab/cli/config.hpp"
#include "genlab/cli/models.hpp"
#include "genlab/cli/svg.hpp"
#include "genlab/csv.hpp"
#include "genlab/datasets.hpp"
#include "genlab/density_lab.hpp"
#include "genlab/errors.hpp"
#include "genlab/parallel.hpp"

namespace genlab::cli {

namespace fs = std::filesystem;

namespace {

// Stream indices under the run seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kTrainStream = 3;

void write_csv(const std::string& path, const std::vector<std::string>& header, const Tensor& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  csv::write(out, header, rows);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

Tensor training_data(const Config& cfg) {
  Rng data_rng = Rng(cfg.seed()).split(kDataStream);
  return data::generate(cfg.dataset(), data_rng).x;
}

struct TrainArgs {
  std::string config;
  std::string out;
  bool svg = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Config cfg = Config::load(a.config);
  const std::string dir = a.out.empty() ? cfg.str("output") : a.out;
  fs::create_directories(dir);

  const Rng root(cfg.seed());
  Rng init = root.split(kInitStream);
  Rng rng = root.split(kTrainStream);
  const Tensor data = training_data(cfg);
  auto model = make_model(cfg, data.cols(), init);
  const Table metrics = model->train(data, rng);

  const std::string ckpt = (fs::path(dir) / "model.ckpt.json").string();
  save_checkpoint(make_checkpoint(*model, cfg, rng.state()), ckpt);
  write_csv((fs::path(dir) / "metrics.csv").string(), metrics.header, metrics.rows);
  if (a.svg) {
    svg::Series s{metrics.rows.column(0), metrics.rows.column(1)};
    svg::write_file((fs::path(dir) / "loss.svg").string(), svg::lines({s}, cfg.model() + " training loss", "step", "loss"));
  }
  out << "trained " << cfg.model() << " on " << data.rows() << " points; ";
  if (metrics.rows.rows() > 0) out << "final loss " << csv::format_double(metrics.rows(metrics.rows.rows() - 1, 1)) << "; ";
  out << "wrote " << ckpt << '\n';
  return kOk;
}

struct SampleArgs {
  std::string checkpoint;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out = "samples.csv";
  std::string svg;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const auto model = restore_model(ck);
  Rng rng(a.seed);
  const Tensor x = a.n == 0 ? Tensor(0, model->dim()) : model->sample(a.n, rng);
  if (!x.all_finite()) throw NumericError("sample: non-finite samples");
  ensure_parent(a.out);
  write_csv(a.out, csv::sample_header(model->dim()), x);
  if (!a.svg.empty()) {
    if (model->dim() == 2) {
      ensure_parent(a.svg);
      svg::write_file(a.svg, svg::scatter(x, ck.kind + " samples"));
    } else {
      out << "note: --svg skipped, scatter needs d = 2 (d = " << model->dim() << ")\n";
    }
  }
  out << "wrote " << a.n << " samples to " << a.out << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string out = "eval.csv";
  std::string summary;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const auto model = restore_model(ck);
  std::ifstream in(a.data);
  if (!in) throw ConfigError("cannot open dataset '" + a.data + "'");
  csv::Table table;
  try {
    table = csv::read(in);
  } catch (const ContractError& e) {
    throw ConfigError("dataset '" + a.data + "': " + e.what());
  }
  if (table.header.size() != model->dim()) {
    throw ConfigError("dataset '" + a.data + "' has " + std::to_string(table.header.size()) +
                      " columns; the model expects " + std::to_string(model->dim()));
  }
  if (table.values.rows() == 0) throw ConfigError("dataset '" + a.data + "' has no rows");
  Rng rng(a.seed);
  const Table m = model->eval(table.values, rng);

  const std::size_t n = m.rows.rows(), k = m.header.size();
  std::vector<std::string> header{"row"};
  header.insert(header.end(), m.header.begin(), m.header.end());
  Tensor rows(n, k + 1);
  std::vector<std::string> mean_header;
  Tensor means(1, k);
  for (const auto& h : m.header) mean_header.push_back(h + "_mean");
  for (std::size_t i = 0; i < n; ++i) {
    rows(i, 0) = static_cast<double>(i);
    for (std::size_t c = 0; c < k; ++c) {
      rows(i, c + 1) = m.rows(i, c);
      means(0, c) += m.rows(i, c);
    }
  }
  for (std::size_t c = 0; c < k; ++c) means(0, c) /= static_cast<double>(n);
  if (!means.all_finite()) throw NumericError("eval: non-finite metric");

  ensure_parent(a.out);
  write_csv(a.out, header, rows);
  std::string summary = a.summary;
  if (summary.empty()) {
    fs::path p(a.out);
    summary = (p.parent_path() / (p.stem().string() + "_summary.csv")).string();
  }
  ensure_parent(summary);
  write_csv(summary, mean_header, means);
  for (std::size_t c = 0; c < k; ++c) out << mean_header[c] << " = " << csv::format_double(means(0, c)) << '\n';
  return kOk;
}

struct DataArgs {
  std::string config;
  std::string out = "data.csv";
};

int cmd_data(const DataArgs& a, std::ostream& out) {
  const Config cfg = Config::load(a.config);
  const Tensor x = training_data(cfg);
  ensure_parent(a.out);
  write_csv(a.out, csv::sample_header(x.cols()), x);
  out << "wrote " << x.rows() << " points to " << a.out << '\n';
  return kOk;
}

// ---- lab ----

std::vector<std::string> time_header(std::size_t steps, double T, const std::vector<std::size_t>& keep) {
  std::vector<std::string> h{"path"};
  for (std::size_t k : keep) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "x@%.6g", T * static_cast<double>(k) / static_cast<double>(steps));
    h.emplace_back(buf);
  }
  return h;
}

std::vector<std::size_t> recorded(std::size_t steps, std::size_t record) {
  if (record < 2) throw ConfigError("--record must be at least 2");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < record; ++i) {
    const std::size_t k = static_cast<std::size_t>(std::llround(static_cast<double>(i) * steps / (record - 1.0)));
    if (keep.empty() || k != keep.back()) keep.push_back(k);
  }
  return keep;
}

// Rows are paths, columns the recorded times.
void write_paths(const std::string& path, const Tensor& full, double T, std::size_t record, const std::string& svg_path,
                 const std::string& title) {
  const std::size_t steps = full.cols() - 1;
  const auto keep = recorded(steps, record);
  Tensor rows(full.rows(), keep.size() + 1);
  for (std::size_t i = 0; i < full.rows(); ++i) {
    rows(i, 0) = static_cast<double>(i);
    for (std::size_t j = 0; j < keep.size(); ++j) rows(i, j + 1) = full(i, keep[j]);
  }
  ensure_parent(path);
  write_csv(path, time_header(steps, T, keep), rows);
  if (!svg_path.empty()) {
    std::vector<svg::Series> series;
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = T * static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t i = 0; i < std::min<std::size_t>(full.rows(), 20); ++i) {
      series.push_back({t, std::vector<double>(full.row(i).begin(), full.row(i).end())});
    }
    ensure_parent(svg_path);
    svg::write_file(svg_path, svg::lines(series, title, "t", "x"));
  }
}

double column_variance(const Tensor& full, std::size_t col) {
  const auto v = full.column(col);
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? s / static_cast<double>(v.size() - 1) : 0.0;
}

struct BrownianArgs {
  std::size_t paths = 5, steps = 1000, record = 101;
  double T = 1.0;
  std::uint64_t seed = 0;
  std::string out = "brownian.csv", svg;
};

int lab_brownian(const BrownianArgs& a, std::ostream& out) {
  if (a.paths == 0 || a.steps == 0) throw ConfigError("--paths and --steps must be positive");
  if (!(a.T > 0.0)) throw ConfigError("--T must be positive");
  const Tensor w = lab::brownian_paths(a.paths, a.T, a.steps, Rng(a.seed));
  write_paths(a.out, w, a.T, a.record, a.svg, "Brownian paths");
  out << "Var(W_T) across paths = " << csv::format_double(column_variance(w, a.steps)) << " (T = " << a.T << ")\n";
  return kOk;
}

struct OuArgs {
  double alpha = 1.0, sigma = 1.0, x0 = 0.0, T = 10.0, dt = 0.01;
  std::size_t paths = 1000, record = 11;
  std::uint64_t seed = 0;
  std::string out = "ou.csv", svg;
};

int lab_ou(const OuArgs& a, std::ostream& out) {
  if (a.paths == 0) throw ConfigError("--paths must be positive");
  if (!(a.alpha > 0.0) || a.sigma < 0.0 || !(a.dt > 0.0) || !(a.T > 0.0) || a.dt * a.alpha >= 1.0) {
    throw ConfigError("ou needs alpha > 0, sigma >= 0, T > 0 and 0 < dt < 1/alpha");
  }
  const Rng root(a.seed);
  std::vector<std::vector<double>> paths(a.paths);
  parallel_for(0, a.paths, static_cast<std::size_t>(a.T / a.dt) * 8, [&](std::size_t i) {
    Rng r = root.split(i);
    paths[i] = lab::ou_simulate(a.alpha, a.sigma, a.x0, a.T, a.dt, r);
  });
  Tensor full(a.paths, paths[0].size());
  for (std::size_t i = 0; i < a.paths; ++i) std::copy(paths[i].begin(), paths[i].end(), full.row(i).begin());
  write_paths(a.out, full, a.T, a.record, a.svg, "Ornstein-Uhlenbeck paths");
  const auto m = lab::ou_analytic_moments(a.alpha, a.sigma, a.x0, a.T);
  out << "Var(X_T) across paths = " << csv::format_double(column_variance(full, full.cols() - 1))
      << "; analytic " << csv::format_double(m.var) << '\n';
  return kOk;
}

struct FpArgs {
  std::string drift = "ou";
  double alpha = 1.0, g = std::sqrt(2.0), T = 10.0, std0 = 0.5;
  std::optional<double> mean0;  // 2.5 for ou, 1 for double-well
  std::string out = "fp.csv", summary, svg;
};

int lab_fp(const FpArgs& a, std::ostream& out) {
  if (!(a.T > 0.0) || !(a.g > 0.0) || !(a.std0 > 0.0)) throw ConfigError("fp needs T, g and std0 positive");
  lab::Grid1d grid;
  std::function<double(double)> drift;
  std::function<double(double)> log_stationary;
  if (a.drift == "ou") {
    if (!(a.alpha > 0.0)) throw ConfigError("--alpha must be positive");
    const double var = a.g * a.g / (2.0 * a.alpha);
    drift = [alpha = a.alpha](double x) { return -alpha * x; };
    log_stationary = [var](double x) { return -0.5 * x * x / var; };
  } else {
    // U(x) = (x² − 1)², stationary ∝ exp(−2U/g²)
    grid.x_min = -2.5;
    grid.x_max = 2.5;
    grid.n_points = 251;
    drift = [](double x) { return -4.0 * x * (x * x - 1.0); };
    log_stationary = [g = a.g](double x) { return -2.0 * (x * x - 1.0) * (x * x - 1.0) / (g * g); };
  }
  try {
    grid.validate(a.g);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("fp: ") + e.what());
  }
  const double mean0 = a.mean0.value_or(a.drift == "ou" ? 2.5 : 1.0);
  const auto p0 = lab::tabulate(grid, [&](double x) {
    const double z = (x - mean0) / a.std0;
    return std::exp(-0.5 * z * z) / (a.std0 * std::sqrt(2.0 * M_PI));
  });
  std::vector<double> ref = lab::tabulate(grid, [&](double x) { return std::exp(log_stationary(x)); });
  const double z = lab::grid_mass(grid, ref);
  for (double& v : ref) v /= z;
  std::vector<double> p;
  try {
    p = lab::fokker_planck_1d(drift, a.g, grid, p0, a.T);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("fp: ") + e.what());
  }

  Tensor rows(grid.n_points, 4);
  const auto xs = grid.points();
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    rows(i, 0) = xs[i];
    rows(i, 1) = p0[i];
    rows(i, 2) = p[i];
    rows(i, 3) = ref[i];
  }
  ensure_parent(a.out);
  write_csv(a.out, {"x", "p0", "p", "p_stationary"}, rows);
  const double l1 = lab::grid_l1(grid, p, ref);
  const double mass = lab::grid_mass(grid, p);
  std::string summary = a.summary;
  if (summary.empty()) {
    fs::path o(a.out);
    summary = (o.parent_path() / (o.stem().string() + "_summary.csv")).string();
  }
  ensure_parent(summary);
  write_csv(summary, {"T", "mass", "l1_stationary"}, Tensor(1, 3, {a.T, mass, l1}));
  if (!a.svg.empty()) {
    ensure_parent(a.svg);
    svg::write_file(a.svg, svg::lines({{xs, p0}, {xs, p}, {xs, ref}}, "Fokker-Planck (" + a.drift + ")", "x", "p"));
  }
  out << "mass " << csv::format_double(mass) << ", L1 to stationary " << csv::format_double(l1) << '\n';
  return kOk;
}

struct LiouvilleArgs {
  double rate_x = -0.5, rate_y = 0.3, x0 = 1.0, y0 = 1.0, T = 2.0, dt = 0.01;
  std::string out = "liouville.csv";
};

// dx/dt = diag(a, b) x: the log-density along a trajectory changes by −(a + b)t.
int lab_liouville(const LiouvilleArgs& a, std::ostream& out) {
  if (!(a.T > 0.0) || !(a.dt > 0.0)) throw ConfigError("liouville needs T and dt positive");
  const auto steps = static_cast<std::size_t>(std::llround(a.T / a.dt));
  if (steps == 0) throw ConfigError("liouville: T/dt rounds to zero steps");
  const Tensor rates = Tensor::diagonal(std::vector<double>{a.rate_x, a.rate_y});
  Tensor traj(steps + 1, 2);
  for (std::size_t k = 0; k <= steps; ++k) {
    const Tensor e = lab::matrix_exp_diag(rates, a.dt * static_cast<double>(k));
    traj(k, 0) = e(0, 0) * a.x0;
    traj(k, 1) = e(1, 1) * a.y0;
  }
  const double div = a.rate_x + a.rate_y;
  const auto div_f = [div](std::span<const double>, double) { return div; };
  Tensor rows(steps + 1, 5);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = a.dt * static_cast<double>(k);
    rows(k, 0) = t;
    rows(k, 1) = traj(k, 0);
    rows(k, 2) = traj(k, 1);
    rows(k, 3) = k == 0 ? 0.0 : lab::liouville_logdensity_delta(div_f, slice_rows(traj, 0, k + 1), a.dt);
    rows(k, 4) = -div * t;
  }
  ensure_parent(a.out);
  write_csv(a.out, {"t", "x0", "x1", "delta_logp", "delta_logp_exact"}, rows);
  out << "delta log p at T = " << csv::format_double(rows(steps, 3)) << " (exact "
      << csv::format_double(rows(steps, 4)) << ")\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"genlab: generative-model training, sampling and density-lab demos", "genlab"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "worker threads for batch-parallel sections")->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("config", ta.config, "config file")->required();
  train->add_option("--out", ta.out, "output directory (overrides the config's output key)");
  train->add_flag("--svg", ta.svg, "also write loss.svg");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "draw samples from a checkpoint");
  sample->add_option("checkpoint", sa.checkpoint, "checkpoint file")->required();
  sample->add_option("--n", sa.n, "number of samples")->capture_default_str();
  sample->add_option("--seed", sa.seed, "sampling seed")->required();
  sample->add_option("--out", sa.out, "samples CSV")->capture_default_str();
  sample->add_option("--svg", sa.svg, "scatter plot (d = 2 only)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "per-example metrics of a checkpoint on a dataset CSV");
  eval->add_option("checkpoint", ea.checkpoint, "checkpoint file")->required();
  eval->add_option("data", ea.data, "dataset CSV with header x0,x1,...")->required();
  eval->add_option("--out", ea.out, "per-example CSV")->capture_default_str();
  eval->add_option("--summary", ea.summary, "mean-metric CSV (default <out>_summary.csv)");
  eval->add_option("--seed", ea.seed, "seed for Monte-Carlo metrics")->capture_default_str();

  DataArgs da;
  auto* data = app.add_subcommand("data", "write the dataset a config trains on");
  data->add_option("config", da.config, "config file")->required();
  data->add_option("--out", da.out, "dataset CSV")->capture_default_str();

  auto* lab = app.add_subcommand("lab", "density-lab demos");
  lab->require_subcommand(1);
  BrownianArgs ba;
  auto* brown = lab->add_subcommand("brownian", "Brownian path ensemble");
  brown->add_option("--paths", ba.paths)->capture_default_str();
  brown->add_option("--steps", ba.steps)->capture_default_str();
  brown->add_option("--T", ba.T)->capture_default_str();
  brown->add_option("--record", ba.record, "recorded time points per path")->capture_default_str();
  brown->add_option("--seed", ba.seed)->capture_default_str();
  brown->add_option("--out", ba.out)->capture_default_str();
  brown->add_option("--svg", ba.svg);
  OuArgs oa;
  auto* ou = lab->add_subcommand("ou", "Ornstein-Uhlenbeck path ensemble");
  ou->add_option("--alpha", oa.alpha)->capture_default_str();
  ou->add_option("--sigma", oa.sigma)->capture_default_str();
  ou->add_option("--x0", oa.x0)->capture_default_str();
  ou->add_option("--T", oa.T)->capture_default_str();
  ou->add_option("--dt", oa.dt)->capture_default_str();
  ou->add_option("--paths", oa.paths)->capture_default_str();
  ou->add_option("--record", oa.record, "recorded time points per path")->capture_default_str();
  ou->add_option("--seed", oa.seed)->capture_default_str();
  ou->add_option("--out", oa.out)->capture_default_str();
  ou->add_option("--svg", oa.svg);
  FpArgs fa;
  auto* fp = lab->add_subcommand("fp", "1-D Fokker-Planck grid evolution");
  fp->add_option("--drift", fa.drift)->check(CLI::IsMember({"ou", "double-well"}))->capture_default_str();
  fp->add_option("--alpha", fa.alpha)->capture_default_str();
  fp->add_option("--g", fa.g, "diffusion coefficient")->capture_default_str();
  fp->add_option("--T", fa.T)->capture_default_str();
  fp->add_option("--mean0", fa.mean0, "initial Gaussian mean (default 2.5 for ou, 1 for double-well)");
  fp->add_option("--std0", fa.std0, "initial Gaussian std")->capture_default_str();
  fp->add_option("--out", fa.out)->capture_default_str();
  fp->add_option("--summary", fa.summary, "summary CSV (default <out>_summary.csv)");
  fp->add_option("--svg", fa.svg);
  LiouvilleArgs la;
  auto* liou = lab->add_subcommand("liouville", "log-density change along a linear ODE trajectory");
  liou->add_option("--rate-x", la.rate_x)->capture_default_str();
  liou->add_option("--rate-y", la.rate_y)->capture_default_str();
  liou->add_option("--x0", la.x0)->capture_default_str();
  liou->add_option("--y0", la.y0)->capture_default_str();
  liou->add_option("--T", la.T)->capture_default_str();
  liou->add_option("--dt", la.dt)->capture_default_str();
  liou->add_option("--out", la.out)->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "genlab: " << e.what() << '\n';
    return kConfig;
  }

  try {
    set_num_threads(threads);
    if (*train) return cmd_train(ta, out);
    if (*sample) return cmd_sample(sa, out);
    if (*eval) return cmd_eval(ea, out);
    if (*data) return cmd_data(da, out);
    if (*brown) return lab_brownian(ba, out);
    if (*ou) return lab_ou(oa, out);
    if (*fp) return lab_fp(fa, out);
    if (*liou) return lab_liouville(la, out);
    err << "genlab: no command\n";
    return kConfig;
  } catch (const VersionError& e) {
    err << "genlab: " << e.what() << '\n';
    return kVersion;
  } catch (const NumericError& e) {
    err << "genlab: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConfigError& e) {
    err << "genlab: " << e.what() << '\n';
    return kConfig;
  } catch (const CheckpointError& e) {
    err << "genlab: " << e.what() << '\n';
    return kConfig;
  } catch (const ContractError& e) {
    err << "genlab: invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    err << "genlab: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "genlab: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace genlab::cli
