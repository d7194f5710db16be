#pragma once

#include "mjpde/kernel.hpp"
#include "mjpde/model.hpp"

namespace mjpde {

// Target coordinates: rows 0..2 are alpha = w+, row 3 is beta.
struct TargetState {
  std::array<std::vector<double>, 4> theta;
  double t = 0.0;

  int n_cells() const { return static_cast<int>(theta[0].size()) - 1; }
};

// Volterra transform: alpha = w+, beta(x) = w-(x) - int_0^x (K(x,xi) w+(xi)
// + N(x,xi) w-(xi)) dxi with composite trapezoidal quadrature on the shared
// grid. Requires ks.mesh == state grid.
TargetState apply_transform(const KernelSolution& ks, const FieldState& s);

// Exact inverse of the discretized transform: the quadrature makes the map
// lower triangular in x, so w-(x_i) is recovered by forward substitution.
FieldState apply_inverse(const KernelSolution& ks, const TargetState& ts);

// Boundary control U = -R0 w+(1) + int_0^1 (K(1,xi) w+(xi) + N(1,xi) w-(xi)) dxi.
double control_input(const KernelSolution& ks, const Mode& nominal,
                     const FieldState& s);

}  // namespace mjpde
