// Backstepping kernel solver.
//
// With mu the magnitude of the leftward speed and Lambda+ = diag(l1,l2,l3),
// the row kernel K = (k1,k2,k3) and the scalar kernel N satisfy on the
// triangle {0 <= xi <= x <= 1}
//
//   mu K_x - K_xi Lambda+      = K Sigma++(xi) + N Sigma-+(xi),
//   mu (N_x + N_xi)            = K Sigma+-(xi),
//   k_c(x,x)                   = -sigma-+_c(x) / (mu + l_c),
//   N(x,0)                     = K(x,0) Lambda+ Q / mu.
//
// Each k_c is constant along (dx,dxi) = (mu, -l_c) up to the source term, so
// its characteristic through (x,xi) meets the diagonal at
// x_f = (l_c x + mu xi)/(mu + l_c). N is transported along (1,1) from the
// xi = 0 edge; on the uniform triangle mesh those characteristics pass
// exactly through grid nodes. The solve iterates the integral form of the
// equations (successive approximations), with P1 interpolation at
// characteristic sample points and trapezoidal quadrature along paths.

#include "mjpde/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mjpde/csv.hpp"

namespace mjpde {

double TriArray::interp(double x, double xi) const {
  const double hh = h();
  x = std::clamp(x, 0.0, 1.0);
  xi = std::clamp(xi, 0.0, x);
  const double gx = x / hh;
  const double gxi = xi / hh;
  int ci = std::min(static_cast<int>(gx), mesh_ - 1);
  int cj = std::min(static_cast<int>(gxi), mesh_ - 1);
  double u = gx - ci;
  double v = gxi - cj;
  if (cj == ci && v > u) v = u;  // rounding guard in diagonal cells
  if (v <= u)
    return (1.0 - u) * at(ci, cj) + (u - v) * at(ci + 1, cj) + v * at(ci + 1, cj + 1);
  return (1.0 - v) * at(ci, cj) + (v - u) * at(ci, cj + 1) + u * at(ci + 1, cj + 1);
}

KernelSolution KernelSolution::zeros(int mesh) {
  KernelSolution ks;
  ks.mesh = mesh;
  for (auto& comp : ks.k) comp = TriArray(mesh);
  ks.n = TriArray(mesh);
  return ks;
}

namespace {

struct SigmaNodes {
  std::vector<Mat3> pp;
  std::vector<Vec3> pm;
  std::vector<Vec3> mp;
};

SigmaNodes sample_sigma(const Mode& m, int mesh) {
  SigmaNodes s;
  s.pp.resize(static_cast<size_t>(mesh) + 1);
  s.pm.resize(static_cast<size_t>(mesh) + 1);
  s.mp.resize(static_cast<size_t>(mesh) + 1);
  for (int i = 0; i <= mesh; ++i) {
    const double x = static_cast<double>(i) / mesh;
    s.pp[static_cast<size_t>(i)] = m.sigma_pp(x);
    s.pm[static_cast<size_t>(i)] = m.sigma_pm(x);
    s.mp[static_cast<size_t>(i)] = m.sigma_mp(x);
  }
  return s;
}

// K sweep: integrate each component from its diagonal foot point using the
// previous iterate in the source term.
void sweep_k(KernelSolution& out, const KernelSolution& prev, const Mode& nominal) {
  const int mesh = out.mesh;
  const double h = 1.0 / mesh;
  const double mu = nominal.mu_minus;
  const bool no_source = nominal.sigma_pp.is_zero() && nominal.sigma_mp.is_zero();

  for (int c = 0; c < 3; ++c) {
    const double lam = nominal.lambda_plus[c];
    const double denom = mu + lam;
    const double step_speed = std::max(mu, lam);
    TriArray& kc = out.k[c];
    for (int i = 1; i <= mesh; ++i) {
      const double x = i * h;
      for (int j = 0; j < i; ++j) {
        const double xi = j * h;
        const double sstar = (x - xi) / denom;
        const double xf = (lam * x + mu * xi) / denom;
        double val = -nominal.sigma_mp(xf)[c] / denom;
        if (!no_source) {
          const auto g = [&](double s) {
            const double xs = xf + mu * s;
            const double xis = xf - lam * s;
            const Mat3 spp = nominal.sigma_pp(xis);
            const double smp_c = nominal.sigma_mp(xis)[c];
            double acc = prev.n.interp(xs, xis) * smp_c;
            for (int l = 0; l < 3; ++l)
              acc += prev.k[l].interp(xs, xis) * spp[l][c];
            return acc;
          };
          const int nsub =
              std::max(1, static_cast<int>(std::ceil(step_speed * sstar / h - 1e-12)));
          const double ds = sstar / nsub;
          double sum = 0.5 * (g(0.0) + g(sstar));
          for (int m = 1; m < nsub; ++m) sum += g(m * ds);
          val += ds * sum;
        }
        kc.at(i, j) = val;
      }
    }
  }
}

// N sweep: edge data from the freshly updated K, then exact-node transport
// integrals along the (1,1) characteristics.
void sweep_n(KernelSolution& out, const Mode& nominal, const SigmaNodes& sigma) {
  const int mesh = out.mesh;
  const double h = 1.0 / mesh;
  const double mu = nominal.mu_minus;

  for (int i = 0; i <= mesh; ++i) {
    double bc = 0.0;
    for (int c = 0; c < 3; ++c)
      bc += out.k[c].at(i, 0) * nominal.lambda_plus[c] * nominal.q_bound[c];
    out.n.at(i, 0) = bc / mu;
  }

  const bool no_source = nominal.sigma_pm.is_zero();
  for (int i = 1; i <= mesh; ++i) {
    for (int j = 1; j <= i; ++j) {
      double val = out.n.at(i - j, 0);
      if (!no_source) {
        const auto g = [&](int k) {
          const Vec3& spm = sigma.pm[static_cast<size_t>(k)];
          return out.k[0].at(i - j + k, k) * spm[0] +
                 out.k[1].at(i - j + k, k) * spm[1] +
                 out.k[2].at(i - j + k, k) * spm[2];
        };
        double sum = 0.5 * (g(0) + g(j));
        for (int k = 1; k < j; ++k) sum += g(k);
        val += (h / mu) * sum;
      }
      out.n.at(i, j) = val;
    }
  }
}

double max_gap(const KernelSolution& a, const KernelSolution& b) {
  double gap = 0.0;
  for (int c = 0; c < 3; ++c)
    for (size_t idx = 0; idx < a.k[c].data().size(); ++idx)
      gap = std::max(gap, std::abs(a.k[c].data()[idx] - b.k[c].data()[idx]));
  for (size_t idx = 0; idx < a.n.data().size(); ++idx)
    gap = std::max(gap, std::abs(a.n.data()[idx] - b.n.data()[idx]));
  return gap;
}

}  // namespace

KernelSolution solve_kernels(const Mode& nominal, int mesh_resolution, double tol,
                             int max_iter) {
  if (mesh_resolution < 8)
    throw ValidationError("kernel mesh resolution must be at least 8");
  if (!(tol > 0.0)) throw ValidationError("kernel tolerance must be positive");
  if (max_iter < 1) throw ValidationError("kernel max_iter must be at least 1");
  nominal.validate();

  const int mesh = mesh_resolution;
  const double h = 1.0 / mesh;
  const double mu = nominal.mu_minus;
  const SigmaNodes sigma = sample_sigma(nominal, mesh);

  KernelSolution cur = KernelSolution::zeros(mesh);

  // Diagonal boundary values are imposed, not iterated.
  for (int c = 0; c < 3; ++c) {
    const double denom = mu + nominal.lambda_plus[c];
    for (int i = 0; i <= mesh; ++i)
      cur.k[c].at(i, i) = -sigma.mp[static_cast<size_t>(i)][c] / denom;
  }

  // Iterate zero: pure boundary-data extension along the characteristics.
  for (int c = 0; c < 3; ++c) {
    const double lam = nominal.lambda_plus[c];
    const double denom = mu + lam;
    for (int i = 1; i <= mesh; ++i)
      for (int j = 0; j < i; ++j) {
        const double xf = (lam * i * h + mu * j * h) / denom;
        cur.k[c].at(i, j) = -nominal.sigma_mp(xf)[c] / denom;
      }
  }
  for (int i = 0; i <= mesh; ++i) {
    double bc = 0.0;
    for (int c = 0; c < 3; ++c)
      bc += cur.k[c].at(i, 0) * nominal.lambda_plus[c] * nominal.q_bound[c];
    cur.n.at(i, 0) = bc / mu;
  }
  for (int i = 1; i <= mesh; ++i)
    for (int j = 1; j <= i; ++j) cur.n.at(i, j) = cur.n.at(i - j, 0);

  KernelSolution next = cur;
  std::vector<double> deltas;
  bool converged = false;
  int performed = 0;
  double delta = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    sweep_k(next, cur, nominal);
    sweep_n(next, nominal, sigma);
    delta = max_gap(next, cur);
    deltas.push_back(delta);
    std::swap(cur, next);
    performed = it;
    if (delta < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw KernelSolveFailure(performed, delta);

  cur.iterations = performed;
  cur.converged = true;
  cur.iterate_deltas = std::move(deltas);
  cur.residual_report = kernel_residuals(cur, nominal);
  return cur;
}

ResidualReport kernel_residuals(const KernelSolution& ks, const Mode& nominal) {
  if (ks.mesh < 1) throw ValidationError("kernel solution has an empty mesh");
  nominal.validate();

  const int mesh = ks.mesh;
  const double h = 1.0 / mesh;
  const double mu = nominal.mu_minus;
  const SigmaNodes sigma = sample_sigma(nominal, mesh);

  ResidualReport rep;
  double sum_k = 0.0, sum_n = 0.0, sum_diag = 0.0, sum_edge = 0.0;

  // Transport equation of K, one-sided differences along the characteristic
  // direction (backward in x, forward in xi).
  for (int i = 1; i <= mesh; ++i) {
    for (int j = 0; j < i; ++j) {
      const Vec3 kij = ks.k_at(i, j);
      const Mat3& spp = sigma.pp[static_cast<size_t>(j)];
      const Vec3& smp = sigma.mp[static_cast<size_t>(j)];
      const double nij = ks.n.at(i, j);
      for (int c = 0; c < 3; ++c) {
        const double lam = nominal.lambda_plus[c];
        const double dx = (ks.k[c].at(i, j) - ks.k[c].at(i - 1, j)) / h;
        const double dxi = (ks.k[c].at(i, j + 1) - ks.k[c].at(i, j)) / h;
        const double source =
            kij[0] * spp[0][c] + kij[1] * spp[1][c] + kij[2] * spp[2][c] +
            nij * smp[c];
        const double r = mu * dx - lam * dxi - source;
        rep.interior_k_max = std::max(rep.interior_k_max, std::abs(r));
        sum_k += r * r;
      }
    }
  }

  // Transport equation of N along the (1,1) direction.
  for (int i = 1; i <= mesh; ++i) {
    for (int j = 1; j <= i; ++j) {
      const Vec3 kij = ks.k_at(i, j);
      const Vec3& spm = sigma.pm[static_cast<size_t>(j)];
      const double dd = (ks.n.at(i, j) - ks.n.at(i - 1, j - 1)) / h;
      const double r = mu * dd - dot(kij, spm);
      rep.interior_n_max = std::max(rep.interior_n_max, std::abs(r));
      sum_n += r * r;
    }
  }

  for (int i = 0; i <= mesh; ++i) {
    const Vec3& smp = sigma.mp[static_cast<size_t>(i)];
    for (int c = 0; c < 3; ++c) {
      const double r =
          (-mu - nominal.lambda_plus[c]) * ks.k[c].at(i, i) - smp[c];
      rep.diag_max = std::max(rep.diag_max, std::abs(r));
      sum_diag += r * r;
    }
    double bc = 0.0;
    for (int c = 0; c < 3; ++c)
      bc += ks.k[c].at(i, 0) * nominal.lambda_plus[c] * nominal.q_bound[c];
    const double r = -mu * ks.n.at(i, 0) + bc;
    rep.edge_max = std::max(rep.edge_max, std::abs(r));
    sum_edge += r * r;
  }

  rep.interior_k_l2 = std::sqrt(h * h * sum_k);
  rep.interior_n_l2 = std::sqrt(h * h * sum_n);
  rep.diag_l2 = std::sqrt(h * sum_diag);
  rep.edge_l2 = std::sqrt(h * sum_edge);
  return rep;
}

void save_kernel_csv(const KernelSolution& ks, const std::filesystem::path& path) {
  CsvWriter out(path, {"x", "xi", "k1", "k2", "k3", "n"});
  const double h = ks.h();
  for (int i = 0; i <= ks.mesh; ++i)
    for (int j = 0; j <= i; ++j) {
      out.add(i * h);
      out.add(j * h);
      out.add(ks.k[0].at(i, j));
      out.add(ks.k[1].at(i, j));
      out.add(ks.k[2].at(i, j));
      out.add(ks.n.at(i, j));
      out.end_row();
    }
  out.commit();
}

KernelSolution load_kernel_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header != std::vector<std::string>{"x", "xi", "k1", "k2", "k3", "n"})
    throw ValidationError("unexpected kernel CSV header in " + path.string());
  const size_t count = table.rows.size();
  const int mesh =
      static_cast<int>(std::lround((std::sqrt(8.0 * count + 1.0) - 3.0) / 2.0));
  if (mesh < 1 ||
      static_cast<size_t>(mesh + 1) * static_cast<size_t>(mesh + 2) / 2 != count)
    throw ValidationError("kernel CSV row count does not form a triangle mesh");

  KernelSolution ks = KernelSolution::zeros(mesh);
  for (const auto& row : table.rows) {
    const int i = static_cast<int>(std::lround(row[0] * mesh));
    const int j = static_cast<int>(std::lround(row[1] * mesh));
    if (i < 0 || i > mesh || j < 0 || j > i)
      throw ValidationError("kernel CSV node outside the triangle");
    ks.k[0].at(i, j) = row[2];
    ks.k[1].at(i, j) = row[3];
    ks.k[2].at(i, j) = row[4];
    ks.n.at(i, j) = row[5];
  }
  return ks;
}

}  // namespace mjpde
