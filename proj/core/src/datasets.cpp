#include "genlab/datasets.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <numbers>

#include "genlab/errors.hpp"

namespace genlab::data {

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::kGaussian:
      return "gaussian";
    case Kind::kGmm:
      return "gmm";
    case Kind::kTwoRings:
      return "two_rings";
    case Kind::kMoons:
      return "moons";
  }
  return "gaussian";
}

Kind kind_from_string(std::string_view name) {
  if (name == "gaussian") return Kind::kGaussian;
  if (name == "gmm") return Kind::kGmm;
  if (name == "two_rings") return Kind::kTwoRings;
  if (name == "moons") return Kind::kMoons;
  throw ContractError("unknown dataset kind '" + std::string(name) + "'");
}

DatasetSpec DatasetSpec::gaussian(std::vector<double> mean, Tensor cov, std::size_t n) {
  DatasetSpec s;
  s.kind = Kind::kGaussian;
  s.n = n;
  s.weights = {1.0};
  s.components.push_back({std::move(mean), std::move(cov)});
  return s;
}

DatasetSpec DatasetSpec::gmm(std::vector<double> weights, std::vector<Component> components,
                             std::size_t n) {
  DatasetSpec s;
  s.kind = Kind::kGmm;
  s.n = n;
  s.weights = std::move(weights);
  s.components = std::move(components);
  return s;
}

DatasetSpec DatasetSpec::two_rings(double r_inner, double r_outer, double noise, std::size_t n) {
  DatasetSpec s;
  s.kind = Kind::kTwoRings;
  s.n = n;
  s.r_inner = r_inner;
  s.r_outer = r_outer;
  s.noise = noise;
  return s;
}

DatasetSpec DatasetSpec::moons(double noise, std::size_t n) {
  DatasetSpec s;
  s.kind = Kind::kMoons;
  s.n = n;
  s.noise = noise;
  return s;
}

std::size_t DatasetSpec::dim() const {
  switch (kind) {
    case Kind::kGaussian:
    case Kind::kGmm:
      return components.empty() ? 0 : components.front().mean.size();
    case Kind::kTwoRings:
    case Kind::kMoons:
      return 2;
  }
  return 0;
}

void DatasetSpec::validate() const {
  switch (kind) {
    case Kind::kGaussian:
      require(components.size() == 1, "dataset gaussian: exactly one component required");
      break;
    case Kind::kGmm:
      require(!components.empty(), "dataset gmm: at least one component required");
      require(weights.size() == components.size(), "dataset gmm: weights/components mismatch");
      break;
    case Kind::kTwoRings:
      require(r_inner > 0.0 && r_outer > r_inner, "dataset two_rings: need 0 < r_inner < r_outer");
      require(noise >= 0.0, "dataset two_rings: noise must be non-negative");
      break;
    case Kind::kMoons:
      require(noise >= 0.0, "dataset moons: noise must be non-negative");
      break;
  }
  if (kind == Kind::kGaussian || kind == Kind::kGmm) {
    for (const auto& c : components) {
      require(!c.mean.empty(), "dataset: component mean must be non-empty");
      require(c.cov.rows() == c.mean.size() && c.cov.cols() == c.mean.size(),
              "dataset: covariance shape must match mean");
    }
  }
}

linalg::GaussianMixture mixture_of(const DatasetSpec& spec) {
  spec.validate();
  require(spec.kind == Kind::kGaussian || spec.kind == Kind::kGmm,
          "mixture_of: only gaussian and gmm datasets have analytic densities");
  std::vector<linalg::MvGaussian> comps;
  for (const auto& c : spec.components) comps.emplace_back(c.mean, c.cov);
  std::vector<double> w = spec.kind == Kind::kGaussian ? std::vector<double>{1.0} : spec.weights;
  return linalg::GaussianMixture(std::move(w), std::move(comps));
}

Dataset generate(const DatasetSpec& spec, Rng& rng) {
  spec.validate();
  Dataset out;
  switch (spec.kind) {
    case Kind::kGaussian:
    case Kind::kGmm: {
      auto mix = std::make_shared<linalg::GaussianMixture>(mixture_of(spec));
      out.x = mix->sample(spec.n, rng);
      out.density = AnalyticDensity{
          [mix](std::span<const double> x) { return mix->logpdf(x); },
          [mix](std::span<const double> x) { return mix->score(x); }};
      break;
    }
    case Kind::kTwoRings: {
      out.x = Tensor(spec.n, 2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        const double r = rng.uniform() < 0.5 ? spec.r_inner : spec.r_outer;
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        const double rr = r + spec.noise * rng.normal();
        out.x(i, 0) = rr * std::cos(theta);
        out.x(i, 1) = rr * std::sin(theta);
      }
      break;
    }
    case Kind::kMoons: {
      out.x = Tensor(spec.n, 2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        const bool upper = rng.uniform() < 0.5;
        const double t = std::numbers::pi * rng.uniform();
        double x = upper ? std::cos(t) : 1.0 - std::cos(t);
        double y = upper ? std::sin(t) : 1.0 - std::sin(t) - 0.5;
        x += spec.noise * rng.normal();
        y += spec.noise * rng.normal();
        out.x(i, 0) = x;
        out.x(i, 1) = y;
      }
      break;
    }
  }
  return out;
}

namespace {

// Distance to the arc {c + (cos t, s·sin t) : t ∈ [0, π]} of a unit circle.
double arc_distance(double px, double py, double cx, double cy, double s) {
  const double dx = px - cx, dy = (py - cy) * s;
  const double r = std::hypot(dx, dy);
  if (dy >= 0.0) return std::abs(r - 1.0);
  return std::min(std::hypot(dx - 1.0, dy), std::hypot(dx + 1.0, dy));
}

}  // namespace

double moons_manifold_distance(std::span<const double> p) {
  require(p.size() == 2, "moons_manifold_distance: points must be 2-D");
  return std::min(arc_distance(p[0], p[1], 0.0, 0.0, 1.0), arc_distance(p[0], p[1], 1.0, 0.5, -1.0));
}

double radial_band_fraction(const Tensor& x, double lo, double hi) {
  if (x.rows() == 0) return 0.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = std::sqrt(squared_norm(x.row(i)));
    if (r >= lo && r <= hi) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(x.rows());
}

}  // namespace genlab::data
