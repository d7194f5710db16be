// Lyapunov functional, perturbation terms of the stochastic target system,
// and empirical decay-rate fits.

#include "mjpde/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mjpde/transform.hpp"

namespace mjpde {

namespace {

double sum_q_sq(const Mode& m) {
  return dot(m.q_bound, m.q_bound);
}

}  // namespace

void validate_params(const LyapunovParams& p, const std::vector<Mode>& modes) {
  if (!(p.nu > 0.0)) throw ValidationError("nu must be positive");
  if (!(p.a > 0.0)) throw ValidationError("a must be positive");
  for (const auto& m : modes)
    if (!(p.a > sum_q_sq(m)))
      throw ValidationError("a must exceed q1^2 + q2^2 + q3^2 for every mode");
}

double evaluate_V(const FieldState& s, const KernelSolution& ks,
                  const Mode& mode_j, const LyapunovParams& p) {
  const TargetState ts = apply_transform(ks, s);
  const int n = ts.n_cells();
  const double h = 1.0 / n;

  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const size_t ui = static_cast<size_t>(i);
    double val = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double lam = mode_j.lambda_plus[c];
      const double wgt = std::exp(-p.nu * x / lam) / lam;
      val += wgt * ts.theta[c][ui] * ts.theta[c][ui];
    }
    const double mu = mode_j.mu_minus;
    const double wgt_beta = p.a * std::exp(p.nu * x / mu) / mu;
    val += wgt_beta * ts.theta[3][ui] * ts.theta[3][ui];
    acc += (i == 0 || i == n) ? 0.5 * val : val;
  }
  return acc * h;
}

PerturbationFunctions perturbation_functions(const KernelSolution& ks,
                                             const Mode& mode_j,
                                             const Mode& nominal) {
  if (ks.mesh < 1) throw ValidationError("kernel solution has an empty mesh");
  mode_j.validate();
  nominal.validate();

  const int mesh = ks.mesh;
  const double h = 1.0 / mesh;
  const double mu_j = mode_j.mu_minus;

  PerturbationFunctions pf;
  pf.mesh = mesh;
  pf.f1.resize(static_cast<size_t>(mesh) + 1);
  pf.f2.resize(static_cast<size_t>(mesh) + 1);

  // f1 = Sigma-+_j(x) + mu_j K(x,x) + K(x,x) Lambda+_j   (on the diagonal)
  // f2 = -K(x,0) Lambda+_j Q_j + mu_j N(x,0)             (on the edge)
  for (int i = 0; i <= mesh; ++i) {
    const double x = i * h;
    const Vec3 smp = mode_j.sigma_mp(x);
    const Vec3 kd = ks.k_at(i, i);
    Vec3 f1{};
    for (int c = 0; c < 3; ++c)
      f1[c] = smp[c] + mu_j * kd[c] + kd[c] * mode_j.lambda_plus[c];
    pf.f1[static_cast<size_t>(i)] = f1;
    pf.sup_f1 = std::max(pf.sup_f1, norm2(f1));

    const Vec3 k0 = ks.k_at(i, 0);
    double f2 = mu_j * ks.n.at(i, 0);
    for (int c = 0; c < 3; ++c)
      f2 -= k0[c] * mode_j.lambda_plus[c] * mode_j.q_bound[c];
    pf.f2[static_cast<size_t>(i)] = f2;
    pf.sup_f2 = std::max(pf.sup_f2, std::abs(f2));
  }

  // f3 and f4 use the same one-sided stencils as kernel_residuals, so both
  // reduce to the kernel-equation residuals when mode_j is the nominal mode.
  pf.f3.reserve(static_cast<size_t>(mesh) * static_cast<size_t>(mesh + 1) / 2);
  pf.f4.reserve(static_cast<size_t>(mesh) * static_cast<size_t>(mesh + 1) / 2);
  for (int i = 1; i <= mesh; ++i) {
    for (int j = 0; j < i; ++j) {
      const double xi = j * h;
      const Mat3 spp = mode_j.sigma_pp(xi);
      const Vec3 smp = mode_j.sigma_mp(xi);
      const Vec3 kij = ks.k_at(i, j);
      const double nij = ks.n.at(i, j);
      Vec3 f3{};
      for (int c = 0; c < 3; ++c) {
        const double dx = (ks.k[c].at(i, j) - ks.k[c].at(i - 1, j)) / h;
        const double dxi = (ks.k[c].at(i, j + 1) - ks.k[c].at(i, j)) / h;
        f3[c] = mu_j * dx - mode_j.lambda_plus[c] * dxi -
                (kij[0] * spp[0][c] + kij[1] * spp[1][c] + kij[2] * spp[2][c]) -
                nij * smp[c];
      }
      pf.f3.push_back(f3);
      pf.sup_f3 = std::max(pf.sup_f3, norm2(f3));
    }
    for (int j = 1; j <= i; ++j) {
      const double xi = j * h;
      const Vec3 spm = mode_j.sigma_pm(xi);
      const double dd = (ks.n.at(i, j) - ks.n.at(i - 1, j - 1)) / h;
      const double f4 = mu_j * dd - dot(ks.k_at(i, j), spm);
      pf.f4.push_back(f4);
      pf.sup_f4 = std::max(pf.sup_f4, std::abs(f4));
    }
  }
  return pf;
}

double perturbation_bound_ratio(const PerturbationFunctions& pf, double dist) {
  if (dist < 0.0) throw ValidationError("distance must be non-negative");
  const double sup = pf.max_sup();
  if (dist == 0.0)
    return sup == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return sup / dist;
}

DecayFit decay_fit(std::span<const double> t_grid, std::span<const double> series,
                   double tail_fraction) {
  if (t_grid.size() != series.size() || t_grid.size() < 2)
    throw ValidationError("decay_fit needs two aligned samples at least");
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
    throw ValidationError("tail_fraction must lie in (0, 1]");

  const double t0 = t_grid.front();
  const double t1 = t_grid.back();
  const double t_min = t1 - tail_fraction * (t1 - t0);

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < t_min) continue;
    if (!(series[i] > 0.0))
      throw NumericalError(
          "decay_fit tail contains non-positive values; clip the tail before "
          "fitting");
    const double y = std::log(series[i]);
    sx += t_grid[i];
    sy += y;
    sxx += t_grid[i] * t_grid[i];
    sxy += t_grid[i] * y;
    ++count;
  }
  if (count < 2) throw ValidationError("decay_fit tail holds fewer than 2 samples");

  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) throw NumericalError("decay_fit: degenerate time grid");
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;

  DecayFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  fit.varsigma = series.front() > 0.0
                     ? fit.amplitude / series.front()
                     : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

DecayFit decay_fit_clipped(std::span<const double> t_grid,
                           std::span<const double> series, double tail_fraction) {
  if (t_grid.size() != series.size() || t_grid.empty())
    throw ValidationError("decay_fit needs aligned samples");
  double peak = 0.0;
  for (double v : series) peak = std::max(peak, v);
  if (!(peak > 0.0)) throw NumericalError("decay_fit: series is identically zero");
  const double floor = peak * 1e-13;
  size_t last = 0;
  for (size_t i = 0; i < series.size(); ++i)
    if (series[i] > floor) last = i;
  return decay_fit(t_grid.subspan(0, last + 1), series.subspan(0, last + 1),
                   tail_fraction);
}

VEvaluator make_v_evaluator(const KernelSolution& ks,
                            const std::vector<Mode>& mode_set,
                            const LyapunovParams& p) {
  return [&ks, mode_set, p](const FieldState& s, int mode_idx) {
    return evaluate_V(s, ks, mode_set[static_cast<size_t>(mode_idx)], p);
  };
}

LyapunovParams choose_params(const MarkovSpec& spec, const Mode& nominal,
                             const KernelSolution& ks, const Grid& grid,
                             double horizon, double margin) {
  if (!(margin > 0.0)) throw ValidationError("margin must be positive");

  double base = sum_q_sq(nominal);
  for (const auto& m : spec.modes) base = std::max(base, sum_q_sq(m));
  const double a = base > 0.0 ? (1.0 + margin) * base : margin;

  SimConfig cfg;
  cfg.grid = grid;
  cfg.horizon = horizon;
  cfg.controller = ControllerType::NominalBackstepping;

  std::ostringstream tried;
  for (double decade = 1e-4; decade <= 1.0 + 1e-12; decade *= 10.0) {
    for (double mult : {1.0, 2.0, 5.0}) {
      const double nu = decade * mult;
      if (nu > 1.0 + 1e-12) break;
      const LyapunovParams params{nu, a};
      const Trajectory traj = simulate_deterministic(
          cfg, nominal, nominal, ks, make_v_evaluator(ks, {nominal}, params));
      try {
        const DecayFit fit =
            decay_fit_clipped(traj.t_grid, traj.v_series, 0.5);
        tried << "nu=" << nu << " rate=" << fit.rate << "; ";
        if (fit.rate > 0.0) return params;
      } catch (const NumericalError&) {
        tried << "nu=" << nu << " fit failed; ";
      }
    }
  }
  throw NumericalError("nu sweep found no positive nominal decay rate (" +
                       tried.str() + ")");
}

}  // namespace mjpde
