#include "genlab/density_lab.hpp"

#include <algorithm>
#include <cmath>

#include "genlab/errors.hpp"
#include "genlab/parallel.hpp"

namespace genlab::lab {

namespace {

std::size_t step_count(double T, double dt) {
  require(dt > 0.0, "time step must be positive");
  require(T >= 0.0, "horizon must be non-negative");
  return static_cast<std::size_t>(std::llround(T / dt));
}

}  // namespace

std::vector<double> brownian_path(double T, std::size_t n_steps, Rng& rng) {
  require(n_steps >= 1, "brownian_path: n_steps must be at least 1");
  require(T > 0.0, "brownian_path: T must be positive");
  const double sd = std::sqrt(T / static_cast<double>(n_steps));
  std::vector<double> w(n_steps + 1, 0.0);
  for (std::size_t k = 1; k <= n_steps; ++k) w[k] = w[k - 1] + sd * rng.normal();
  return w;
}

Tensor brownian_paths(std::size_t n_paths, double T, std::size_t n_steps, const Rng& rng) {
  Tensor out(n_paths, n_steps + 1);
  parallel_for(0, n_paths, n_paths * n_steps * 20, [&](std::size_t i) {
    Rng r = rng.split(i);
    const auto w = brownian_path(T, n_steps, r);
    std::copy(w.begin(), w.end(), out.row(i).begin());
  });
  return out;
}

std::vector<double> ou_simulate(double alpha, double sigma, double x0, double T, double dt, Rng& rng) {
  require(alpha > 0.0, "ou_simulate: alpha must be positive");
  require(sigma >= 0.0, "ou_simulate: sigma must be non-negative");
  require(dt > 0.0 && dt < 1.0 / alpha, "ou_simulate: need 0 < dt < 1/alpha");
  Sde1d sde{[alpha](double x, double) { return -alpha * x; }, [sigma](double) { return sigma; }};
  return euler_maruyama(sde, x0, T, dt, rng);
}

Moments ou_analytic_moments(double alpha, double sigma, double x0, double t) {
  require(alpha > 0.0, "ou_analytic_moments: alpha must be positive");
  return {x0 * std::exp(-alpha * t), sigma * sigma * (1.0 - std::exp(-2.0 * alpha * t)) / (2.0 * alpha)};
}

std::vector<double> euler_maruyama(const Sde1d& sde, double x0, double T, double dt, Rng& rng) {
  const std::size_t n = step_count(T, dt);
  const double sq = std::sqrt(dt);
  std::vector<double> path(n + 1);
  path[0] = x0;
  double x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double g = sde.diffusion(t);
    x = x + sde.drift(x, t) * dt + g * sq * rng.normal();
    if (!std::isfinite(x)) {
      throw NumericError("euler_maruyama: non-finite state at step " + std::to_string(k + 1));
    }
    path[k + 1] = x;
  }
  return path;
}

std::vector<double> Grid1d::points() const {
  std::vector<double> p(n_points);
  for (std::size_t i = 0; i < n_points; ++i) p[i] = x(i);
  return p;
}

void Grid1d::validate(double g) const {
  require(n_points >= 3, "grid: need at least 3 points");
  require(x_max > x_min, "grid: x_max must exceed x_min");
  require(dt > 0.0, "grid: dt must be positive");
  const double ratio = g * g * dt / (dx() * dx());
  if (ratio > 0.5 * (1.0 + 1e-12)) {
    throw ContractError("grid: diffusion number g^2 dt / dx^2 = " + std::to_string(ratio) +
                        " exceeds 0.5; reduce dt");
  }
}

double grid_mass(const Grid1d& grid, std::span<const double> p) {
  double m = 0.0;
  for (double v : p) m += v;
  return m * grid.dx();
}

double grid_l1(const Grid1d& grid, std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("grid_l1: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s * grid.dx();
}

std::vector<double> tabulate(const Grid1d& grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) v[i] = f(grid.x(i));
  return v;
}

std::vector<double> fokker_planck_1d(const std::function<double(double)>& drift, double g,
                                     const Grid1d& grid, std::span<const double> p0, double T) {
  grid.validate(g);
  const std::size_t n = grid.n_points;
  if (p0.size() != n) throw DimensionError("fokker_planck_1d: p0 length does not match the grid");
  for (double v : p0) require(v >= 0.0 && std::isfinite(v), "fokker_planck_1d: p0 must be non-negative");
  const double dx = grid.dx();

  // Drift at the n − 1 interior interfaces x_{i+½}.
  std::vector<double> f(n - 1);
  double f_max = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    f[i] = drift(grid.x(i) + 0.5 * dx);
    f_max = std::max(f_max, std::abs(f[i]));
  }
  if (f_max * grid.dt / dx > 0.5 * (1.0 + 1e-12)) {
    throw ContractError("fokker_planck_1d: advection number |f| dt / dx = " +
                        std::to_string(f_max * grid.dt / dx) + " exceeds 0.5; reduce dt");
  }

  std::size_t steps = static_cast<std::size_t>(std::ceil(T / grid.dt - 1e-9));
  const double dt = steps == 0 ? 0.0 : T / static_cast<double>(steps);
  const double diff = 0.5 * g * g / dx;
  std::vector<double> p(p0.begin(), p0.end()), flux(n - 1);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double up = f[i] > 0.0 ? p[i] : p[i + 1];
      flux[i] = f[i] * up - diff * (p[i + 1] - p[i]);
    }
    const double r = dt / dx;
    p[0] -= r * flux[0];
    for (std::size_t i = 1; i + 1 < n; ++i) p[i] -= r * (flux[i] - flux[i - 1]);
    p[n - 1] += r * flux[n - 2];
  }
  return p;
}

double liouville_logdensity_delta(const std::function<double(std::span<const double>, double)>& div_f,
                                  const Tensor& trajectory, double dt) {
  require(dt > 0.0, "liouville_logdensity_delta: dt must be positive");
  double acc = 0.0;
  double prev = trajectory.rows() ? div_f(trajectory.row(0), 0.0) : 0.0;
  for (std::size_t k = 1; k < trajectory.rows(); ++k) {
    const double cur = div_f(trajectory.row(k), static_cast<double>(k) * dt);
    acc += 0.5 * dt * (prev + cur);
    prev = cur;
  }
  return -acc;
}

Tensor matrix_exp_diag(const Tensor& rates, double t) {
  require(rates.rows() == rates.cols(), "matrix_exp_diag: matrix must be square");
  const std::size_t n = rates.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      require(i == j || rates(i, j) == 0.0, "matrix_exp_diag: input must be diagonal");
  Tensor out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = std::exp(rates(i, i) * t);
  return out;
}

Tensor matrix_exp_series(const Tensor& a, double t, std::size_t terms) {
  require(a.rows() == a.cols(), "matrix_exp_series: matrix must be square");
  const Tensor at = a * t;
  Tensor term = Tensor::identity(a.rows());
  Tensor sum = term;
  for (std::size_t k = 1; k < terms; ++k) {
    term = matmul(term, at) * (1.0 / static_cast<double>(k));
    sum = sum + term;
  }
  return sum;
}

}  // namespace genlab::lab
