// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. The CLI binary path is taken
// from argv[1] for the end-to-end determinism checks.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mjpde/experiment.hpp"
#include "mjpde/lyapunov.hpp"
#include "mjpde/markov.hpp"
#include "mjpde/pde.hpp"
#include "mjpde/transform.hpp"
#include "test_util.hpp"

using namespace mjpde;
using namespace mjpde::testutil;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;

  void report(int number, const std::string& name, bool ok,
              const std::string& detail) {
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": "
              << name << " (" << detail << ")" << std::endl;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

int run_cli(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

double sup_rel_diff(const std::vector<double>& t_coarse,
                    const std::vector<double>& p_coarse,
                    const std::vector<double>& t_fine,
                    const std::vector<double>& p_fine) {
  double peak = 0.0;
  for (double v : p_coarse) peak = std::max(peak, v);
  double diff = 0.0;
  for (size_t i = 0; i < t_coarse.size(); ++i) {
    const double t = t_coarse[i];
    auto it = std::lower_bound(t_fine.begin(), t_fine.end(), t);
    size_t hi = std::min<size_t>(static_cast<size_t>(it - t_fine.begin()),
                                 t_fine.size() - 1);
    double fine;
    if (hi == 0 || t_fine[hi] == t) {
      fine = p_fine[hi];
    } else {
      const size_t lo = hi - 1;
      const double w = (t - t_fine[lo]) / (t_fine[hi] - t_fine[lo]);
      fine = (1.0 - w) * p_fine[lo] + w * p_fine[hi];
    }
    diff = std::max(diff, std::abs(p_coarse[i] - fine));
  }
  return diff / peak;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  Harness h;
  const Scenario sc = scenario_v();

  // --- Criterion 1: kernel correctness -----------------------------------
  KernelSolution ks100, ks200;
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Vec3 sigma{0.01, -0.02, 0.015};
    const Mode cc = constant_coefficient_mode(sigma);
    const KernelSolution ks = solve_kernels(cc, 200);
    double err = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double expected = -sigma[c] / (cc.mu_minus + cc.lambda_plus[c]);
      for (double v : ks.k[c].data())
        err = std::max(err, std::abs(v - expected));
    }
    for (double v : ks.n.data()) err = std::max(err, std::abs(v));
    const double elapsed = seconds_since(t0);

    ks100 = solve_kernels(sc.nominal, 100, 1e-11, 300);
    ks200 = solve_kernels(sc.nominal, 200, 1e-11, 300);
    const KernelSolution ks400 = solve_kernels(sc.nominal, 400, 1e-11, 300);
    const auto order = [](double coarse, double fine) {
      return std::log2(coarse / fine);
    };
    const double ok1 = order(ks100.residual_report.interior_k_max,
                             ks200.residual_report.interior_k_max);
    const double ok2 = order(ks200.residual_report.interior_k_max,
                             ks400.residual_report.interior_k_max);
    const double on1 = order(ks100.residual_report.interior_n_max,
                             ks200.residual_report.interior_n_max);
    const double on2 = order(ks200.residual_report.interior_n_max,
                             ks400.residual_report.interior_n_max);
    const double worst = std::min({ok1, ok2, on1, on2});

    h.report(1, "kernel correctness",
             err <= 1e-8 && elapsed < 60.0 && worst >= 0.8,
             "closed-form err " + fmt(err) + ", solve " + fmt(elapsed) +
                 " s, residual orders K " + fmt(ok1) + "/" + fmt(ok2) + " N " +
                 fmt(on1) + "/" + fmt(on2));
  }

  // --- Criterion 2: transform consistency --------------------------------
  {
    double rt_err = 0.0;
    for (uint64_t seed : {501ull, 502ull, 503ull}) {
      const FieldState w = FourierField::random(seed).sample(200);
      const FieldState back = apply_inverse(ks200, apply_transform(ks200, w));
      rt_err = std::max(rt_err, max_abs_diff(back, w) / max_abs(w));
    }

    const Vec3 kconst{0.3, 0.2, -0.25};
    const double nconst = 0.15;
    const FourierField field = FourierField::random(777);
    std::vector<double> lnn, lne;
    for (int n : {50, 100, 200}) {
      const KernelSolution cks = constant_kernels(n, kconst, nconst);
      const TargetState ts = apply_transform(cks, field.sample(n));
      double err = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) / n;
        double beta = field.eval(3, x) - nconst * field.antiderivative(3, x);
        for (int c = 0; c < 3; ++c)
          beta -= kconst[c] * field.antiderivative(c, x);
        err = std::max(err, std::abs(ts.theta[3][static_cast<size_t>(i)] - beta));
      }
      lnn.push_back(std::log(static_cast<double>(n)));
      lne.push_back(std::log(err));
    }
    // Least-squares slope of ln err against ln N; expect about -2.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lnn.size(); ++i) {
      sx += lnn[i];
      sy += lne[i];
      sxx += lnn[i] * lnn[i];
      sxy += lnn[i] * lne[i];
    }
    const double m = static_cast<double>(lnn.size());
    const double slope = -(m * sxy - sx * sy) / (m * sxx - sx * sx);

    h.report(2, "transform consistency",
             rt_err <= 1e-6 && slope >= 1.7 && slope <= 2.3,
             "round-trip rel err " + fmt(rt_err) + ", quadrature order " +
                 fmt(slope));
  }

  // --- Criteria 3 and 4: closed-loop boundary and nominal stability ------
  Trajectory traj100;
  {
    const auto t0 = std::chrono::steady_clock::now();
    SimConfig cfg = sc.sim;
    cfg.grid = Grid{100, 0.9};
    cfg.snapshot_stride = 1;
    traj100 = simulate_deterministic(cfg, sc.nominal, sc.nominal, ks100);
    const double run100 = seconds_since(t0);

    double worst_ratio = 0.0;
    double init_max = 0.0;
    {
      const TargetState ts0 = apply_transform(ks100, traj100.snapshots.front());
      for (const auto& row : ts0.theta)
        for (double v : row) init_max = std::max(init_max, std::abs(v));
    }
    // The t = 0 snapshot is the given initial data, which need not satisfy
    // the boundary condition; the criterion applies to computed steps.
    for (const auto& snap : traj100.snapshots) {
      if (snap.t == 0.0) continue;
      const TargetState ts = apply_transform(ks100, snap);
      double tmax = 0.0;
      for (const auto& row : ts.theta)
        for (double v : row) tmax = std::max(tmax, std::abs(v));
      if (tmax < 1e-12 * init_max) continue;
      worst_ratio = std::max(worst_ratio, std::abs(ts.theta[3].back()) / tmax);
    }
    h.report(3, "closed-loop boundary cancellation", worst_ratio <= 1e-4,
             "max |beta(1)| / max |theta| = " + fmt(worst_ratio));

    const auto t1 = std::chrono::steady_clock::now();
    SimConfig cfg200 = sc.sim;
    cfg200.grid = Grid{200, 0.9};
    cfg200.snapshot_stride = 0;
    const Trajectory traj200 =
        simulate_deterministic(cfg200, sc.nominal, sc.nominal, ks200);
    const double run200 = seconds_since(t1);

    const double ratio = traj100.p_series.back() / traj100.p_series.front();
    const DecayFit fit = decay_fit_clipped(traj100.t_grid, traj100.p_series, 0.5);
    const double grid_diff = sup_rel_diff(traj100.t_grid, traj100.p_series,
                                          traj200.t_grid, traj200.p_series);
    h.report(4, "nominal stability",
             ratio < 0.01 && fit.rate > 0.0 && grid_diff <= 0.10 &&
                 run100 < 120.0 && run200 < 120.0,
             "p(400)/p(0) = " + fmt(ratio) + ", zeta = " + fmt(fit.rate) +
                 ", grid diff " + fmt(grid_diff) + ", runtimes " + fmt(run100) +
                 "/" + fmt(run200) + " s");
  }

  // --- Criterion 5: Markov engine -----------------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const KolmogorovSolution sol =
        kolmogorov_forward(sc.markov, 400.0, default_dt_ode(sc.markov));
    double drift = 0.0;
    for (const auto& p : sol.p) {
      double sum = 0.0;
      for (double v : p) sum += v;
      drift = std::max(drift, std::abs(sum - 1.0));
    }

    const Mode m = reference_mode_no_sigma();
    const auto chain =
        MarkovSpec::constant_rates({m, m}, {{0.0, 1.0}, {2.0, 0.0}}, {1.0, 0.0});
    const KolmogorovSolution csol = kolmogorov_forward(chain, 20.0, 0.005);
    // Stationary law of the generator: left null vector (2/3, 1/3).
    const auto tail = csol.at(20.0);
    const double stat_err =
        std::max(std::abs(tail[0] - 2.0 / 3.0), std::abs(tail[1] - 1.0 / 3.0));

    const KolmogorovSolution psol = kolmogorov_forward(chain, 5.0, 0.005);
    bool paths_ok = true;
    std::vector<ModePath> paths;
    paths.reserve(10000);
    for (int i = 0; i < 10000; ++i)
      paths.push_back(sample_path(chain, 5.0, 20000 + static_cast<uint64_t>(i)));
    for (double t : {0.5, 1.0, 2.0, 3.0, 5.0}) {
      int c0 = 0;
      for (const auto& p : paths)
        if (p.mode_at(t) == 0) ++c0;
      const double emp = c0 / 10000.0;
      const double prob = psol.at(t)[0];
      const double sigma = std::sqrt(prob * (1.0 - prob) / 10000.0);
      if (std::abs(emp - prob) > 3.0 * sigma) paths_ok = false;
    }
    const double elapsed = seconds_since(t0);
    h.report(5, "Markov engine",
             drift <= 1e-10 && stat_err <= 1e-8 && paths_ok && elapsed < 30.0,
             "drift " + fmt(drift) + ", stationary err " + fmt(stat_err) +
                 ", paths " + (paths_ok ? "3-sigma ok" : "3-sigma FAIL") +
                 ", " + fmt(elapsed) + " s");
  }

  // --- Criterion 6: perturbation functions --------------------------------
  {
    const auto pf0 = perturbation_functions(ks100, sc.nominal, sc.nominal);
    const ResidualReport& r = ks100.residual_report;
    const bool vanish = pf0.sup_f1 <= 10.0 * std::max(r.diag_max, 1e-12) &&
                        pf0.sup_f2 <= 10.0 * std::max(r.edge_max, 1e-12) &&
                        pf0.sup_f3 <= 10.0 * std::max(r.interior_k_max, 1e-12) &&
                        pf0.sup_f4 <= 10.0 * std::max(r.interior_n_max, 1e-12);

    const auto ratio_at = [&](double s) {
      Mode m = sc.nominal;
      m.mu_minus = sc.nominal.mu_minus + s * 0.004;
      std::vector<Vec3> coeffs = sc.nominal.sigma_mp.coefficients();
      for (auto& c : coeffs) c = scale(c, 1.0 + 0.3 * s);
      m.sigma_mp = SpatialCoeff<Vec3>::polynomial(coeffs);
      return perturbation_bound_ratio(perturbation_functions(ks100, m, sc.nominal),
                          mode_distance(m, sc.nominal));
    };
    const double r1 = ratio_at(1.0);
    const double dev = std::max(std::abs(ratio_at(0.25) - r1),
                                std::abs(ratio_at(0.5) - r1)) /
                       r1;
    h.report(6, "perturbation functions", vanish && dev <= 0.05,
             std::string("nominal f ") + (vanish ? "vanishes" : "DOES NOT vanish") +
                 ", scaling deviation " + fmt(100.0 * dev) + "%");
  }

  // --- Criterion 7: mean-square stability ---------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleOptions opts;
    opts.n_paths = 100;
    opts.base_seed = 1;
    opts.workers = 4;

    SimConfig cfg = sc.sim;
    cfg.grid = Grid{100, 0.9};
    cfg.snapshot_stride = 0;
    const EnsembleResult e100 =
        run_ensemble(cfg, sc.markov, sc.nominal, ks100, opts);

    SimConfig cfg2 = cfg;
    cfg2.grid = Grid{200, 0.9};
    const EnsembleResult e200 =
        run_ensemble(cfg2, sc.markov, sc.nominal, ks200, opts);

    const double ratio = e100.mean_p.back() / e100.mean_p.front();
    const double zeta_shift =
        std::abs(e200.fitted.rate - e100.fitted.rate) / e100.fitted.rate;
    const double elapsed = seconds_since(t0);
    h.report(7, "mean-square stability",
             e100.fitted.rate > 0.0 && ratio < 0.01 && zeta_shift < 0.15 &&
                 elapsed < 1800.0,
             "zeta " + fmt(e100.fitted.rate) + " (N=200: " +
                 fmt(e200.fitted.rate) + ", shift " + fmt(100.0 * zeta_shift) +
                 "%), mean ratio " + fmt(ratio) + ", " + fmt(elapsed) + " s");
  }

  // --- Criterion 8: robustness contrast ------------------------------------
  {
    const Scenario dst = scenario_destabilizing();
    const KernelSolution ks_dst = solve_kernels(dst.nominal, 100);

    SimConfig open = dst.sim;
    open.grid = Grid{100, 0.9};
    open.controller = ControllerType::ZeroInput;
    open.snapshot_stride = 0;
    const Trajectory t_open =
        simulate_deterministic(open, dst.nominal, dst.nominal, ks_dst);

    SimConfig closed = open;
    closed.controller = ControllerType::NominalBackstepping;
    const Trajectory t_closed =
        simulate_deterministic(closed, dst.nominal, dst.nominal, ks_dst);

    const double growth = t_open.p_series.back() / t_open.p_series.front();
    const double decay = t_closed.p_series.back() / t_closed.p_series.front();
    h.report(8, "robustness contrast", growth > 1.0 && decay < 1.0,
             "open-loop p(400)/p(0) = " + fmt(growth) +
                 ", closed-loop = " + fmt(decay));
  }

  // --- Criterion 9: determinism and the check subcommand ------------------
  {
    bool ok = true;
    std::string detail;
    if (cli.empty()) {
      ok = false;
      detail = "CLI binary path missing (argv[1])";
    } else {
      const fs::path work =
          fs::temp_directory_path() /
          ("mjpde_acceptance_" + std::to_string(::getpid()));
      fs::remove_all(work);
      fs::create_directories(work);
      const std::string cfg_dir = (work / "cfg").string();
      const std::string q = "\"" + cli + "\"";

      ok = run_cli(q + " scenario-v --out " + cfg_dir + " > /dev/null") == 0;
      const std::string cfg = cfg_dir + "/scenario_v.json";
      const std::string common = " --config " + cfg +
                                 " --paths 6 --grid 50 --set experiment.horizon=200"
                                 " > /dev/null";
      if (ok)
        ok = run_cli(q + " ensemble --out " + (work / "r1").string() + common) == 0;
      if (ok)
        ok = run_cli(q + " ensemble --out " + (work / "r2").string() + common) == 0;
      if (ok) {
        const bool same_mean = slurp(work / "r1" / "ensemble.csv") ==
                               slurp(work / "r2" / "ensemble.csv");
        const bool same_path = slurp(work / "r1" / "paths" / "3.csv") ==
                               slurp(work / "r2" / "paths" / "3.csv");
        const bool nonempty = !slurp(work / "r1" / "ensemble.csv").empty();
        ok = same_mean && same_path && nonempty;
        detail = same_mean && same_path ? "byte-identical reruns"
                                        : "rerun outputs differ";
      }
      int check_rc = -1;
      if (ok) {
        check_rc = run_cli(q + " check --config " + cfg + " > /dev/null");
        ok = check_rc == 0;
        detail += ", check exit " + std::to_string(check_rc);
      }
      fs::remove_all(work);
    }
    h.report(9, "determinism and shipped-config check", ok, detail);
  }

  std::cout << (h.failures == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(h.failures) +
                                      " criterion(s) FAILED")
            << std::endl;
  return h.failures == 0 ? 0 : 1;
}
