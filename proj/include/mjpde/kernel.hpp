#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "mjpde/model.hpp"

namespace mjpde {

// Scalar field on the triangle {0 <= xi <= x <= 1} discretized with nodes
// (i h, j h), j <= i, h = 1/mesh. Interpolation is piecewise linear on the
// two triangles of each cell, so only in-domain nodes are ever touched.
class TriArray {
 public:
  TriArray() = default;
  explicit TriArray(int mesh)
      : mesh_(mesh),
        v_(static_cast<size_t>(mesh + 1) * static_cast<size_t>(mesh + 2) / 2, 0.0) {}

  int mesh() const { return mesh_; }
  double h() const { return 1.0 / mesh_; }
  size_t size() const { return v_.size(); }

  double& at(int i, int j) { return v_[index(i, j)]; }
  double at(int i, int j) const { return v_[index(i, j)]; }

  // P1 interpolation at (x, xi) with xi <= x.
  double interp(double x, double xi) const;

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * static_cast<size_t>(i + 1) / 2 +
           static_cast<size_t>(j);
  }

 private:
  int mesh_ = 0;
  std::vector<double> v_;
};

// Residuals of the four kernel equations. Interior equations are measured
// with one-sided finite differences along the characteristic directions;
// boundary equations are algebraic.
struct ResidualReport {
  double interior_k_max = 0.0, interior_k_l2 = 0.0;  // transport equation of K
  double interior_n_max = 0.0, interior_n_l2 = 0.0;  // transport equation of N
  double diag_max = 0.0, diag_l2 = 0.0;              // diagonal condition on K
  double edge_max = 0.0, edge_l2 = 0.0;              // xi = 0 condition on N

  double max_interior() const { return std::max(interior_k_max, interior_n_max); }
  double max_boundary() const { return std::max(diag_max, edge_max); }
  double max_all() const { return std::max(max_interior(), max_boundary()); }
};

// Discretized backstepping kernels K(x,xi) = (k1,k2,k3) and N(x,xi) on the
// triangle, together with the convergence record of the fixed-point solve.
struct KernelSolution {
  int mesh = 0;
  std::array<TriArray, 3> k;
  TriArray n;
  ResidualReport residual_report;
  int iterations = 0;
  bool converged = true;
  std::vector<double> iterate_deltas;  // successive-approximation max-norm gaps

  static KernelSolution zeros(int mesh);

  double h() const { return 1.0 / mesh; }
  Vec3 k_at(int i, int j) const {
    return {k[0].at(i, j), k[1].at(i, j), k[2].at(i, j)};
  }
  double n_at(int i, int j) const { return n.at(i, j); }
};

// Solves the kernel equations by successive approximation of the equivalent
// Volterra integral equations along characteristics. Stops when consecutive
// iterates differ by less than tol in max norm.
KernelSolution solve_kernels(const Mode& nominal, int mesh_resolution,
                             double tol = 1e-10, int max_iter = 200);

// Independent residual evaluation of a kernel solution against a mode.
ResidualReport kernel_residuals(const KernelSolution& ks, const Mode& nominal);

// CSV round trip (x, xi, k1, k2, k3, n); values reload bit-exactly.
void save_kernel_csv(const KernelSolution& ks, const std::filesystem::path& path);
KernelSolution load_kernel_csv(const std::filesystem::path& path);

}  // namespace mjpde
