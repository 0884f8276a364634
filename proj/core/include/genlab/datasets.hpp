#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genlab/linalg.hpp"
#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"

namespace genlab::data {

enum class Kind { kGaussian, kGmm, kTwoRings, kMoons };

std::string_view to_string(Kind k);
Kind kind_from_string(std::string_view name);

struct Component {
  std::vector<double> mean;
  Tensor cov;
};

struct DatasetSpec {
  Kind kind = Kind::kGaussian;
  std::size_t n = 1000;
  // gaussian: components[0]; gmm: all components with weights.
  std::vector<double> weights;
  std::vector<Component> components;
  // two_rings
  double r_inner = 1.0;
  double r_outer = 2.0;
  // two_rings (radial) and moons (isotropic) noise std
  double noise = 0.05;

  static DatasetSpec gaussian(std::vector<double> mean, Tensor cov, std::size_t n);
  static DatasetSpec gmm(std::vector<double> weights, std::vector<Component> components, std::size_t n);
  static DatasetSpec two_rings(double r_inner, double r_outer, double noise, std::size_t n);
  static DatasetSpec moons(double noise, std::size_t n);

  std::size_t dim() const;
  void validate() const;
};

struct AnalyticDensity {
  std::function<double(std::span<const double>)> logpdf;
  std::function<std::vector<double>(std::span<const double>)> score;
};

struct Dataset {
  Tensor x;
  // Present for the gaussian and gmm kinds.
  std::optional<AnalyticDensity> density;
};

// Deterministic per (spec, rng state). Gaussian and single-component gmm specs
// consume the stream identically.
Dataset generate(const DatasetSpec& spec, Rng& rng);

linalg::GaussianMixture mixture_of(const DatasetSpec& spec);

// Distance from a point to the noiseless two-moons curves. Moon 0 is the upper
// unit half-circle (cos t, sin t); moon 1 is (1 − cos t, 1 − sin t − 0.5),
// t ∈ [0, π].
double moons_manifold_distance(std::span<const double> p);

// Fraction of rows whose radius lies in [lo, hi].
double radial_band_fraction(const Tensor& x, double lo, double hi);

}  // namespace genlab::data
