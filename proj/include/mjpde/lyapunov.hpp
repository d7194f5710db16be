#pragma once

#include <span>
#include <vector>

#include "mjpde/kernel.hpp"
#include "mjpde/model.hpp"
#include "mjpde/pde.hpp"

namespace mjpde {

// Weights of the functional V = int theta^T D_j(x) theta dx with
// D_j = Diag{ exp(-nu x / lambda_i)/lambda_i, a exp(nu x / mu)/mu }.
struct LyapunovParams {
  double nu = 0.0;
  double a = 0.0;
};

// Checks a > max_j (q1j^2 + q2j^2 + q3j^2) over the given modes and nu > 0.
void validate_params(const LyapunovParams& p, const std::vector<Mode>& modes);

// The four perturbation terms of the beta equation in mode j, sampled with
// the same stencils as kernel_residuals so that they reduce to the kernel
// residuals at the nominal mode. f1, f2 live on the x-nodes; f3, f4 on the
// triangle nodes where the corresponding stencil exists.
struct PerturbationFunctions {
  int mesh = 0;
  std::vector<Vec3> f1;     // x-node rows
  std::vector<double> f2;   // x-node scalars
  std::vector<Vec3> f3;     // per (i,j), j < i, i >= 1, row-major
  std::vector<double> f4;   // per (i,j), 1 <= j <= i, i >= 1
  double sup_f1 = 0.0, sup_f2 = 0.0, sup_f3 = 0.0,sup_f4 = 0.0;

  double max_sup() const {
    return std::max({sup_f1, sup_f2, sup_f3, sup_f4});
  }
};

double evaluate_V(const FieldState& s, const KernelSolution& ks,
                  const Mode& mode_j, const LyapunovParams& p);

PerturbationFunctions perturbation_functions(const KernelSolution& ks,
                                             const Mode& mode_j,
                                             const Mode& nominal);

// Empirical candidate for the constant bounding sup||f_i|| / ||X_j - X_0||.
// dist == 0 returns 0 for identically zero f and +inf otherwise.
double perturbation_bound_ratio(const PerturbationFunctions& pf, double dist);

// Least-squares fit of log(series) over the trailing tail_fraction of the
// time range. rate is the decay exponent, amplitude = exp(intercept) is the
// fitted prefactor, and varsigma = amplitude / series.front() normalizes it
// to the initial value.
struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double varsigma = 0.0;
};

DecayFit decay_fit(std::span<const double> t_grid, std::span<const double> series,
                   double tail_fraction);

// decay_fit after clipping away the trailing numerical floor (entries at or
// below max(series) * 1e-13).
DecayFit decay_fit_clipped(std::span<const double> t_grid,
                           std::span<const double> series, double tail_fraction);

// Builds a v_series hook for simulate(); mode indices address mode_set.
VEvaluator make_v_evaluator(const KernelSolution& ks,
                            const std::vector<Mode>& mode_set,
                            const LyapunovParams& p);

// a = (1 + margin) * max_j sum_k q_kj^2 over modes and nominal (floor
// `margin` when every Q vanishes); nu from a logarithmic sweep, keeping the
// smallest value whose nominal closed-loop V decays at a positive fitted
// rate.
LyapunovParams choose_params(const MarkovSpec& spec, const Mode& nominal,
                             const KernelSolution& ks, const Grid& grid,
                             double horizon, double margin);

}  // namespace mjpde
