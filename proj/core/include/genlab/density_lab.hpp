#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"

namespace genlab::lab {

// W_0 = 0 followed by n_steps iid N(0, T/n_steps) increments.
std::vector<double> brownian_path(double T, std::size_t n_steps, Rng& rng);
// n_paths × (n_steps + 1); path i uses rng.split(i).
Tensor brownian_paths(std::size_t n_paths, double T, std::size_t n_steps, const Rng& rng);

// X ← X − αXΔt + σ√Δt ε; round(T/dt) steps. Requires α > 0, σ ≥ 0, dt < 1/α.
std::vector<double> ou_simulate(double alpha, double sigma, double x0, double T, double dt, Rng& rng);

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};
// mean x0 e^{−αt}, variance σ²(1 − e^{−2αt})/(2α).
Moments ou_analytic_moments(double alpha, double sigma, double x0, double t);

struct Sde1d {
  std::function<double(double x, double t)> drift;
  std::function<double(double t)> diffusion;
};

// X ← X + f(X, t)Δt + g(t)√Δt ε; round(T/dt) steps. NumericError on a
// non-finite state.
std::vector<double> euler_maruyama(const Sde1d& sde, double x0, double T, double dt, Rng& rng);

// Uniform cell-centred grid over [x_min, x_max] with an explicit time step.
struct Grid1d {
  double x_min = -6.0;
  double x_max = 6.0;
  std::size_t n_points = 601;
  double dt = 1e-4;

  double dx() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
  double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
  std::vector<double> points() const;
  // Throws ContractError unless n_points ≥ 3 and g²·dt/Δx² ≤ 0.5.
  void validate(double g) const;
};

// Riemann sum Σ p_i Δx.
double grid_mass(const Grid1d& grid, std::span<const double> p);
// Σ |p_i − q_i| Δx.
double grid_l1(const Grid1d& grid, std::span<const double> p, std::span<const double> q);
// Density values of f on the grid.
std::vector<double> tabulate(const Grid1d& grid, const std::function<double(double)>& f);

// ∂_t p = −∂_x(f p) + (g²/2) ∂_xx p with upwind transport, central diffusion
// and zero-flux walls, stepped to time T (final step shortened to land on T).
// Throws ContractError when the diffusion or advection number exceeds 0.5.
std::vector<double> fokker_planck_1d(const std::function<double(double)>& drift, double g,
                                     const Grid1d& grid, std::span<const double> p0, double T);

// −∫ ∇·f(x(t), t) dt along a sampled trajectory (trapezoid rule); row k of
// trajectory is the state at t = k·dt.
double liouville_logdensity_delta(const std::function<double(std::span<const double>, double)>& div_f,
                                  const Tensor& trajectory, double dt);

// exp(A t) for diagonal A. ContractError for a non-diagonal input.
Tensor matrix_exp_diag(const Tensor& rates, double t);
// Σ_{k<terms} (A t)^k / k!
Tensor matrix_exp_series(const Tensor& a, double t, std::size_t terms = 20);

}  // namespace genlab::lab
