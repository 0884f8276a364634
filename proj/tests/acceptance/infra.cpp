#include "harness.hpp"

#ifdef GENLAB_HAVE_CLI

#include <filesystem>
#include <fstream>
#include <sstream>

#include "genlab/cli/checkpoint.hpp"
#include "genlab/cli/commands.hpp"

namespace fs = std::filesystem;

namespace acceptance {

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int genlab(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out, e;
  const int code = genlab::cli::run(args, out, e);
  if (err) *err = e.str();
  return code;
}

std::string config_for(const std::string& model) {
  std::string c = "model = " + model + "\nseed = 17\ndata.kind = moons\ndata.n = 400\n";
  if (model != "ppca") c += "train.steps = 60\ntrain.batch = 32\n";
  if (model == "ebm") c += "ebm.langevin_steps = 5\nebm.sample_steps = 20\n";
  if (model == "score") c += "score.steps_per_level = 5\n";
  return c;
}

// Runs args twice with every output path under run_a/ and run_b/, and
// reports whether each listed file came out byte-identical.
bool twice_identical(const fs::path& root, const std::vector<std::string>& args,
                     const std::vector<std::string>& files, std::string& why) {
  std::string first;
  for (const char* run : {"run_a", "run_b"}) {
    std::vector<std::string> a;
    for (const auto& s : args) {
      std::string v = s;
      if (const auto pos = v.find("{dir}"); pos != std::string::npos) v.replace(pos, 5, (root / run).string());
      a.push_back(v);
    }
    fs::create_directories(root / run);
    std::string err;
    if (const int code = genlab(a, &err); code != 0) {
      why = "exit " + std::to_string(code) + ": " + err;
      return false;
    }
  }
  for (const auto& f : files) {
    const std::string a = slurp(root / "run_a" / f), b = slurp(root / "run_b" / f);
    if (a.empty() || a != b) {
      why = f + (a.empty() ? " missing" : " differs");
      return false;
    }
  }
  return true;
}

}  // namespace

void criterion_12(Report& r) {
  const fs::path root = fs::temp_directory_path() / "genlab_acceptance_infra";
  fs::remove_all(root);
  fs::create_directories(root);

  for (const std::string model : {"ppca", "vae", "ddpm", "score", "flow", "ar", "gan", "wgan", "ebm"}) {
    const fs::path dir = root / model;
    fs::create_directories(dir);
    const std::string cfg = (dir / "run.cfg").string();
    std::ofstream(cfg, std::ios::binary) << config_for(model);

    std::string why;
    const bool train = twice_identical(dir, {"train", cfg, "--out", "{dir}"}, {"metrics.csv", "model.ckpt.json"}, why);
    r.expect(train, model + ": two identical train runs give identical metrics and checkpoint", why);
    if (!train) continue;

    const fs::path ck = dir / "run_a" / "model.ckpt.json";
    const std::string bytes = slurp(ck);
    const auto loaded = genlab::cli::load_checkpoint(ck.string());
    const fs::path again = dir / "resaved.ckpt.json";
    genlab::cli::save_checkpoint(loaded, again.string());
    r.expect(genlab::cli::to_json(loaded) == bytes && slurp(again) == bytes,
             model + ": checkpoint save → load → save is byte-identical");

    const bool sample = twice_identical(
        dir, {"sample", ck.string(), "--seed", "5", "--n", "200", "--out", "{dir}/samples.csv"}, {"samples.csv"}, why);
    r.expect(sample, model + ": sample deterministic per seed", why);

    if (model != "score") {
      const bool eval = twice_identical(dir,
                                        {"data", cfg, "--out", "{dir}/data.csv"}, {"data.csv"}, why) &&
                        twice_identical(dir,
                                        {"eval", ck.string(), (dir / "run_a" / "data.csv").string(), "--out",
                                         "{dir}/eval.csv"},
                                        {"eval.csv", "eval_summary.csv"}, why);
      r.expect(eval, model + ": data and eval deterministic", why);
    }
  }

  {
    // thread count must not change results
    const fs::path dir = root / "threads";
    fs::create_directories(dir / "run_a");
    fs::create_directories(dir / "run_b");
    const std::string cfg = (dir / "run.cfg").string();
    std::ofstream(cfg, std::ios::binary) << config_for("ddpm");
    const int a = genlab({"train", cfg, "--out", (dir / "run_a").string()});
    const int b = genlab({"--threads", "3", "train", cfg, "--out", (dir / "run_b").string()});
    const bool same = a == 0 && b == 0 &&
                      slurp(dir / "run_a" / "metrics.csv") == slurp(dir / "run_b" / "metrics.csv") &&
                      slurp(dir / "run_a" / "model.ckpt.json") == slurp(dir / "run_b" / "model.ckpt.json");
    r.expect(same, "train with --threads 3 matches the single-threaded run");
  }

  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> labs = {
      {{"lab", "brownian", "--paths", "50", "--seed", "3", "--out", "{dir}/brownian.csv"}, {"brownian.csv"}},
      {{"lab", "ou", "--paths", "50", "--seed", "3", "--out", "{dir}/ou.csv"}, {"ou.csv"}},
      {{"lab", "fp", "--T", "1", "--out", "{dir}/fp.csv"}, {"fp.csv", "fp_summary.csv"}},
      {{"lab", "liouville", "--out", "{dir}/liouville.csv"}, {"liouville.csv"}},
  };
  for (const auto& [args, files] : labs) {
    std::string why;
    r.expect(twice_identical(root / ("lab_" + args[1]), args, files, why), "lab " + args[1] + " deterministic", why);
  }

  fs::remove_all(root);
}

}  // namespace acceptance

#else

namespace acceptance {

void criterion_12(Report& r) { r.expect(false, "CLI not built (configure with GENLAB_BUILD_TOOLS=ON)"); }

}  // namespace acceptance

#endif
