#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mjpde/model.hpp"

namespace mjpde {

// Forward solution of the mode-occupation probabilities for the configured
// initial law.
struct KolmogorovSolution {
  std::vector<double> t_grid;
  std::vector<std::vector<double>> p;  // one r-vector per stamp

  // Linear interpolation in t; throws ValidationError outside the range.
  std::vector<double> at(double t) const;
};

// Right-continuous step function of mode indices; jumps[0] is (0, initial).
struct ModePath {
  std::vector<std::pair<double, int>> jumps;
  double horizon = 0.0;

  static ModePath frozen(int mode_index, double horizon);
  int mode_at(double t) const;
};

double default_dt_ode(const MarkovSpec& spec);  // min(0.01, 0.1/rate_cap)

// Integrates dP_j/dt = -c_j P_j + sum_k P_k tau_kj with classical RK4 from
// the initial distribution; steps are aligned to rate-interval boundaries and
// the vector is renormalized whenever the sum drifts beyond 1e-12.
KolmogorovSolution kolmogorov_forward(const MarkovSpec& spec, double horizon,
                                      double dt_ode);

// Samples one mode path. Constant rates use exponential holding times; for
// piecewise-constant rates candidate events are thinned against the largest
// outgoing rate of the current mode. Deterministic given the seed.
ModePath sample_path(const MarkovSpec& spec, double horizon, uint64_t seed);

// E ||X(t) - X0|| = sum_j P_j(0,t) * mode_distance(mode_j, nominal).
double expected_distance(const MarkovSpec& spec, const KolmogorovSolution& ksol,
                         const Mode& nominal, double t);

void save_kolmogorov_csv(const KolmogorovSolution& ksol,
                         const std::filesystem::path& path);
void save_path_csv(const ModePath& path, const std::filesystem::path& file);

}  // namespace mjpde
