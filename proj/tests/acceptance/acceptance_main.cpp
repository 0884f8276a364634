// Runs the twelve acceptance criteria; one PASS/FAIL line per criterion.
// Usage: acceptance [-v] [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <set>
#include <string>

#include "harness.hpp"

using namespace acceptance;

namespace {

struct Criterion {
  int id;
  const char* title;
  void (*fn)(Report&);
};

const Criterion kCriteria[] = {
    {1, "autodiff soundness", criterion_01},
    {2, "PCA / symmetric eigendecomposition", criterion_02},
    {3, "PPCA", criterion_03},
    {4, "VAE", criterion_04},
    {5, "DDPM", criterion_05},
    {6, "density lab", criterion_06},
    {7, "score models", criterion_07},
    {8, "normalising flows", criterion_08},
    {9, "autoregressive models", criterion_09},
    {10, "adversarial models", criterion_10},
    {11, "energy-based models", criterion_11},
    {12, "infrastructure", criterion_12},
};

}  // namespace

int main(int argc, char** argv) {
  bool verbose = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "-v") verbose = true;
    else only.insert(std::atoi(a.c_str()));
  }
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Report r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(r);
    } catch (const std::exception& e) {
      r.expect(false, "exception", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = r.passed();
    failed += ok ? 0 : 1;
    std::printf("%s %2d %s (%zu checks, %.1f s)\n", ok ? "PASS" : "FAIL", c.id, c.title, r.checks().size(), secs);
    for (const auto& k : r.checks()) {
      if (verbose || !k.ok) std::printf("       %s %s: %s\n", k.ok ? "ok  " : "FAIL", k.what.c_str(), k.detail.c_str());
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
