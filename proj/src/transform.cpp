#include "mjpde/transform.hpp"

#include <cmath>

namespace mjpde {

namespace {

void require_compatible(int mesh, int n_cells) {
  if (mesh != n_cells)
    throw ValidationError("kernel mesh (" + std::to_string(mesh) +
                          ") does not match the field grid (" +
                          std::to_string(n_cells) + ")");
}

}  // namespace

TargetState apply_transform(const KernelSolution& ks, const FieldState& s) {
  const int n = s.n_cells();
  require_compatible(ks.mesh, n);
  const double h = 1.0 / n;

  TargetState ts;
  ts.t = s.t;
  for (int c = 0; c < 3; ++c) ts.theta[c] = s.w[c];
  ts.theta[3].assign(static_cast<size_t>(n) + 1, 0.0);

  ts.theta[3][0] = s.w[3][0];
  for (int i = 1; i <= n; ++i) {
    double integral = 0.0;
    for (int j = 0; j <= i; ++j) {
      const double wgt = (j == 0 || j == i) ? 0.5 * h : h;
      const Vec3 kij = ks.k_at(i, j);
      double val = ks.n.at(i, j) * s.w[3][static_cast<size_t>(j)];
      for (int c = 0; c < 3; ++c) val += kij[c] * s.w[c][static_cast<size_t>(j)];
      integral += wgt * val;
    }
    ts.theta[3][static_cast<size_t>(i)] = s.w[3][static_cast<size_t>(i)] - integral;
  }
  return ts;
}

FieldState apply_inverse(const KernelSolution& ks, const TargetState& ts) {
  const int n = ts.n_cells();
  require_compatible(ks.mesh, n);
  const double h = 1.0 / n;

  FieldState s;
  s.t = ts.t;
  for (int c = 0; c < 3; ++c) s.w[c] = ts.theta[c];
  s.w[3].assign(static_cast<size_t>(n) + 1, 0.0);

  s.w[3][0] = ts.theta[3][0];
  for (int i = 1; i <= n; ++i) {
    // Everything except the j = i contribution of w- is already known.
    double known = 0.0;
    for (int j = 0; j < i; ++j) {
      const double wgt = (j == 0) ? 0.5 * h : h;
      const Vec3 kij = ks.k_at(i, j);
      double val = ks.n.at(i, j) * s.w[3][static_cast<size_t>(j)];
      for (int c = 0; c < 3; ++c) val += kij[c] * s.w[c][static_cast<size_t>(j)];
      known += wgt * val;
    }
    const Vec3 kii = ks.k_at(i, i);
    for (int c = 0; c < 3; ++c)
      known += 0.5 * h * kii[c] * s.w[c][static_cast<size_t>(i)];
    const double denom = 1.0 - 0.5 * h * ks.n.at(i, i);
    s.w[3][static_cast<size_t>(i)] =
        (ts.theta[3][static_cast<size_t>(i)] + known) / denom;
  }
  return s;
}

double control_input(const KernelSolution& ks, const Mode& nominal,
                     const FieldState& s) {
  const int n = s.n_cells();
  require_compatible(ks.mesh, n);
  const double h = 1.0 / n;

  double u = 0.0;
  for (int c = 0; c < 3; ++c)
    u -= nominal.r_bound[c] * s.w[c][static_cast<size_t>(n)];
  for (int j = 0; j <= n; ++j) {
    const double wgt = (j == 0 || j == n) ? 0.5 * h : h;
    const Vec3 ktop = ks.k_at(n, j);
    double val = ks.n.at(n, j) * s.w[3][static_cast<size_t>(j)];
    for (int c = 0; c < 3; ++c) val += ktop[c] * s.w[c][static_cast<size_t>(j)];
    u += wgt * val;
  }
  return u;
}

}  // namespace mjpde
