#include "mjpde/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mjpde/config.hpp"
#include "mjpde/csv.hpp"
#include "mjpde/errors.hpp"
#include "mjpde/experiment.hpp"
#include "mjpde/kernel.hpp"
#include "mjpde/lyapunov.hpp"
#include "mjpde/markov.hpp"
#include "mjpde/pde.hpp"
#include "mjpde/transform.hpp"

namespace mjpde {

namespace {

Config load_from(const Command& cmd) {
  if (cmd.config_path.empty())
    throw ValidationError("subcommand '" + cmd.subcommand + "' needs --config");
  std::vector<std::string> overrides = cmd.overrides;
  if (cmd.grid_n) overrides.push_back("grid.n_cells=" + std::to_string(*cmd.grid_n));
  if (cmd.paths)
    overrides.push_back("experiment.paths=" + std::to_string(*cmd.paths));
  if (cmd.seed)
    overrides.push_back("experiment.base_seed=" + std::to_string(*cmd.seed));
  return load_config(cmd.config_path, overrides);
}

KernelSolution solve_for(const Config& cfg, int mesh) {
  return solve_kernels(cfg.nominal, mesh, cfg.controller.kernel_tol,
                       cfg.controller.kernel_max_iter);
}

std::string residual_text(const ResidualReport& r) {
  std::ostringstream os;
  os << "  interior K: max " << format_double(r.interior_k_max) << ", l2 "
     << format_double(r.interior_k_l2) << "\n"
     << "  interior N: max " << format_double(r.interior_n_max) << ", l2 "
     << format_double(r.interior_n_l2) << "\n"
     << "  diagonal:   max " << format_double(r.diag_max) << ", l2 "
     << format_double(r.diag_l2) << "\n"
     << "  edge:       max " << format_double(r.edge_max) << ", l2 "
     << format_double(r.edge_l2) << "\n";
  return os.str();
}

void write_series_csv(const Trajectory& traj, const std::filesystem::path& file) {
  CsvWriter out(file, {"t", "p", "v", "u", "mode"});
  for (size_t i = 0; i < traj.t_grid.size(); ++i) {
    out.add(traj.t_grid[i]);
    out.add(traj.p_series[i]);
    out.add(traj.v_series[i]);
    out.add(traj.u_series[i]);
    out.add(traj.mode_series[i]);
    out.end_row();
  }
  out.commit();
}

void write_snapshot_csv(const FieldState& s, const std::filesystem::path& file) {
  CsvWriter out(file, {"x", "w1", "w2", "w3", "w4"});
  const int n = s.n_cells();
  for (int i = 0; i <= n; ++i) {
    out.add(static_cast<double>(i) / n);
    for (const auto& row : s.w) out.add(row[static_cast<size_t>(i)]);
    out.end_row();
  }
  out.commit();
}

std::string snapshot_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "snapshot_%012.6f.csv", t);
  return buf;
}

int cmd_scenario_v(const Command& cmd) {
  std::filesystem::create_directories(cmd.output_dir);
  const auto path = cmd.output_dir / "scenario_v.json";
  write_text_atomic(path, scenario_v_json().dump(2) + "\n");
  // Companion configuration whose open-loop system grows; useful for
  // demonstrating the controller against a genuinely unstable plant.
  const auto dst = cmd.output_dir / "destabilizing.json";
  write_text_atomic(dst, scenario_destabilizing_json().dump(2) + "\n");
  std::cout << "wrote " << path.string() << " and " << dst.string() << "\n";
  return 0;
}

int cmd_kernel(const Command& cmd) {
  const Config cfg = load_from(cmd);
  const KernelSolution ks = solve_for(cfg, cfg.kernel_mesh());
  std::filesystem::create_directories(cmd.output_dir);
  save_kernel_csv(ks, cmd.output_dir / "kernels.csv");

  std::ostringstream os;
  os << "kernel solve\n"
     << "  mesh: " << ks.mesh << "\n"
     << "  iterations: " << ks.iterations << "\n"
     << "  final delta: "
     << format_double(ks.iterate_deltas.empty() ? 0.0 : ks.iterate_deltas.back())
     << "\n"
     << "residuals\n"
     << residual_text(ks.residual_report);
  write_text_atomic(cmd.output_dir / "kernel_report.txt", os.str());
  std::cout << os.str();
  return 0;
}

int cmd_simulate(const Command& cmd) {
  const Config cfg = load_from(cmd);
  const SimConfig sim = cfg.sim_config();
  const bool closed = cfg.controller.type == ControllerType::NominalBackstepping;
  const KernelSolution ks =
      closed ? solve_for(cfg, cfg.grid.n_cells) : KernelSolution::zeros(cfg.grid.n_cells);

  VEvaluator v_eval;
  if (closed) {
    const LyapunovParams params =
        choose_params(cfg.markov, cfg.nominal, ks, cfg.grid, cfg.experiment.horizon,
                      cfg.experiment.lyapunov_margin);
    v_eval = make_v_evaluator(ks, cfg.markov.modes, params);
    std::cout << "lyapunov params: a=" << format_double(params.a)
              << " nu=" << format_double(params.nu) << "\n";
  }

  Trajectory traj;
  std::filesystem::create_directories(cmd.output_dir);
  if (cmd.seed) {
    const ModePath path = sample_path(cfg.markov, sim.horizon, *cmd.seed);
    save_path_csv(path, cmd.output_dir / "path.csv");
    traj = simulate(sim, path, cfg.markov.modes, cfg.nominal, ks, v_eval);
  } else {
    traj = simulate_deterministic(sim, cfg.nominal, cfg.nominal, ks, v_eval);
  }

  write_series_csv(traj, cmd.output_dir / "series.csv");
  for (const auto& snap : traj.snapshots)
    write_snapshot_csv(snap, cmd.output_dir / snapshot_name(snap.t));

  const double p0 = traj.p_series.front();
  const double pT = traj.p_series.back();
  std::cout << "p(0)=" << format_double(p0) << " p(T)=" << format_double(pT);
  if (p0 > 0.0) std::cout << " ratio=" << format_double(pT / p0);
  std::cout << "\n";
  return 0;
}

int cmd_kolmogorov(const Command& cmd) {
  const Config cfg = load_from(cmd);
  const double dt = cfg.experiment.kolmogorov_dt > 0.0 ? cfg.experiment.kolmogorov_dt
                                                       : default_dt_ode(cfg.markov);
  const KolmogorovSolution ksol =
      kolmogorov_forward(cfg.markov, cfg.experiment.horizon, dt);
  std::filesystem::create_directories(cmd.output_dir);
  save_kolmogorov_csv(ksol, cmd.output_dir / "kolmogorov.csv");

  std::vector<double> dists;
  dists.reserve(cfg.markov.n_modes());
  for (const auto& m : cfg.markov.modes)
    dists.push_back(mode_distance(m, cfg.nominal));
  CsvWriter out(cmd.output_dir / "expected_distance.csv", {"t", "e_dist"});
  for (size_t i = 0; i < ksol.t_grid.size(); ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < dists.size(); ++j) acc += ksol.p[i][j] * dists[j];
    out.add(ksol.t_grid[i]);
    out.add(acc);
    out.end_row();
  }
  out.commit();
  std::cout << "wrote " << (cmd.output_dir / "kolmogorov.csv").string() << " ("
            << ksol.t_grid.size() << " stamps)\n";
  return 0;
}

int cmd_ensemble(const Command& cmd) {
  const Config cfg = load_from(cmd);
  const SimConfig sim = cfg.sim_config();
  const bool closed = cfg.controller.type == ControllerType::NominalBackstepping;
  const KernelSolution ks =
      closed ? solve_for(cfg, cfg.grid.n_cells) : KernelSolution::zeros(cfg.grid.n_cells);

  EnsembleOptions opts;
  opts.n_paths = cfg.experiment.paths;
  opts.base_seed = cfg.experiment.base_seed;
  opts.stream_dir = cmd.output_dir / "paths";
  opts.tail_fraction = cfg.experiment.tail_fraction;
  const EnsembleResult res = run_ensemble(sim, cfg.markov, cfg.nominal, ks, opts);

  std::filesystem::create_directories(cmd.output_dir);
  {
    CsvWriter out(cmd.output_dir / "ensemble.csv", {"t", "mean_p", "ci"});
    for (size_t i = 0; i < res.t_grid.size(); ++i) {
      out.add(res.t_grid[i]);
      out.add(res.mean_p[i]);
      out.add(res.ci_halfwidth[i]);
      out.end_row();
    }
    out.commit();
  }

  std::ostringstream os;
  os << "ensemble\n"
     << "  paths: " << res.n_paths << " (diverged: " << res.diverged_seeds.size()
     << ")\n"
     << "  mean_p(0): " << format_double(res.mean_p.front()) << "\n"
     << "  mean_p(T): " << format_double(res.mean_p.back()) << "\n";
  if (res.mean_p.front() > 0.0)
    os << "  ratio: " << format_double(res.mean_p.back() / res.mean_p.front())
       << "\n";
  os << "  fitted decay: zeta=" << format_double(res.fitted.rate)
     << " varsigma=" << format_double(res.fitted.varsigma)
     << " amplitude=" << format_double(res.fitted.amplitude) << "\n";

  if (closed) {
    const LyapunovParams params =
        choose_params(cfg.markov, cfg.nominal, ks, cfg.grid, cfg.experiment.horizon,
                      cfg.experiment.lyapunov_margin);
    os << "lyapunov parameters\n  a=" << format_double(params.a)
       << " nu=" << format_double(params.nu) << "\n";
    os << "empirical perturbation bound per mode\n";
    for (size_t j = 0; j < cfg.markov.n_modes(); ++j) {
      const double dist = mode_distance(cfg.markov.modes[j], cfg.nominal);
      const auto pf = perturbation_functions(ks, cfg.markov.modes[j], cfg.nominal);
      os << "  mode " << j << ": dist=" << format_double(dist);
      if (dist > 0.0)
        os << " ratio=" << format_double(perturbation_bound_ratio(pf, dist)) << "\n";
      else
        os << " (nominal; sup f=" << format_double(pf.max_sup()) << ")\n";
    }
  }

  const double dt =
      cfg.experiment.kolmogorov_dt > 0.0 ? cfg.experiment.kolmogorov_dt
                                         : default_dt_ode(cfg.markov);
  const KolmogorovSolution ksol =
      kolmogorov_forward(cfg.markov, cfg.experiment.horizon, dt);
  os << "expected distance\n";
  double max_dist = 0.0;
  for (size_t i = 0; i < ksol.t_grid.size(); ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < cfg.markov.n_modes(); ++j)
      acc += ksol.p[i][j] * mode_distance(cfg.markov.modes[j], cfg.nominal);
    max_dist = std::max(max_dist, acc);
  }
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double t = frac * cfg.experiment.horizon;
    os << "  t=" << format_double(t) << ": "
       << format_double(expected_distance(cfg.markov, ksol, cfg.nominal, t)) << "\n";
  }
  os << "  max over horizon: " << format_double(max_dist) << "\n";

  write_text_atomic(cmd.output_dir / "report.txt", os.str());
  std::cout << os.str();
  return 0;
}

int cmd_check(const Command& cmd) {
  const Config cfg = load_from(cmd);
  bool all_pass = true;
  const auto report = [&](bool ok, const std::string& name,
                          const std::string& detail) {
    all_pass = all_pass && ok;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
  };

  // Kernel residuals: boundary identities at machine level, interior
  // residuals shrinking under refinement, monotone fixed-point deltas.
  const int mesh = cfg.kernel_mesh();
  const KernelSolution ks = solve_for(cfg, mesh);
  const KernelSolution ks_fine = solve_for(cfg, 2 * mesh);
  {
    double kmax = 0.0;
    for (int c = 0; c < 3; ++c)
      for (double v : ks.k[c].data()) kmax = std::max(kmax, std::abs(v));
    const double bscale = 1e-9 * (1.0 + kmax);
    report(ks.residual_report.max_boundary() <= bscale, "kernel boundary residuals",
           "max " + format_double(ks.residual_report.max_boundary()));

    bool monotone = true;
    for (size_t i = 2; i < ks.iterate_deltas.size(); ++i)
      if (ks.iterate_deltas[i] > ks.iterate_deltas[i - 1]) monotone = false;
    report(monotone, "kernel fixed-point deltas non-increasing",
           std::to_string(ks.iterations) + " iterations");

    const double rk = ks.residual_report.interior_k_max;
    const double rk2 = ks_fine.residual_report.interior_k_max;
    const double rn = ks.residual_report.interior_n_max;
    const double rn2 = ks_fine.residual_report.interior_n_max;
    const bool shrink = (rk2 <= rk / 1.4 || rk <= 1e-12) &&
                        (rn2 <= rn / 1.4 || rn <= 1e-12);
    report(shrink, "kernel interior residuals shrink under refinement",
           "K " + format_double(rk) + " -> " + format_double(rk2) + ", N " +
               format_double(rn) + " -> " + format_double(rn2));
  }

  // Transform round trip on a smooth field at the simulation grid.
  const int n = cfg.grid.n_cells;
  const KernelSolution ks_grid = (mesh == n) ? ks : solve_for(cfg, n);
  {
    FieldState field = FieldState::zero(n);
    for (int i = 0; i <= n; ++i) {
      const double x = static_cast<double>(i) / n;
      field.w[0][static_cast<size_t>(i)] = std::sin(2.0 * M_PI * x);
      field.w[1][static_cast<size_t>(i)] = std::cos(M_PI * x);
      field.w[2][static_cast<size_t>(i)] = x * (1.0 - x);
      field.w[3][static_cast<size_t>(i)] = std::sin(3.0 * M_PI * x) + 0.5;
    }
    const FieldState back = apply_inverse(ks_grid, apply_transform(ks_grid, field));
    double err = 0.0, scale = 0.0;
    for (int r = 0; r < 4; ++r)
      for (int i = 0; i <= n; ++i) {
        err = std::max(err, std::abs(back.w[r][static_cast<size_t>(i)] -
                                     field.w[r][static_cast<size_t>(i)]));
        scale = std::max(scale, std::abs(field.w[r][static_cast<size_t>(i)]));
      }
    report(err <= 1e-8 * scale, "transform round trip",
           "rel err " + format_double(err / scale));
  }

  // Probability conservation.
  {
    const double dt = cfg.experiment.kolmogorov_dt > 0.0
                          ? cfg.experiment.kolmogorov_dt
                          : default_dt_ode(cfg.markov);
    const KolmogorovSolution ksol =
        kolmogorov_forward(cfg.markov, cfg.experiment.horizon, dt);
    double drift = 0.0;
    for (const auto& p : ksol.p) {
      double sum = 0.0;
      for (double v : p) {
        sum += v;
        if (v < -1e-12) drift = std::max(drift, -v);
      }
      drift = std::max(drift, std::abs(sum - 1.0));
    }
    report(drift <= 1e-10, "probability conservation", "drift " + format_double(drift));
  }

  // Perturbation functions vanish at the nominal mode.
  {
    const auto pf = perturbation_functions(ks_grid, cfg.nominal, cfg.nominal);
    const ResidualReport& r = ks_grid.residual_report;
    const double floor = 1e-12;
    const bool ok = pf.sup_f1 <= 10.0 * std::max(r.diag_max, floor) &&
                    pf.sup_f2 <= 10.0 * std::max(r.edge_max, floor) &&
                    pf.sup_f3 <= 10.0 * std::max(r.interior_k_max, floor) &&
                    pf.sup_f4 <= 10.0 * std::max(r.interior_n_max, floor);
    report(ok, "perturbation functions vanish at nominal",
           "sup f = " + format_double(pf.max_sup()));
  }

  // Nominal closed-loop decay with the chosen Lyapunov parameters.
  {
    const LyapunovParams params =
        choose_params(cfg.markov, cfg.nominal, ks_grid, cfg.grid,
                      cfg.experiment.horizon, cfg.experiment.lyapunov_margin);
    const SimConfig sim = [&] {
      SimConfig s = cfg.sim_config();
      s.controller = ControllerType::NominalBackstepping;
      return s;
    }();
    const Trajectory traj = simulate_deterministic(
        sim, cfg.nominal, cfg.nominal, ks_grid,
        make_v_evaluator(ks_grid, {cfg.nominal}, params));

    const DecayFit fit_p =
        decay_fit_clipped(traj.t_grid, traj.p_series, cfg.experiment.tail_fraction);
    const DecayFit fit_v =
        decay_fit_clipped(traj.t_grid, traj.v_series, cfg.experiment.tail_fraction);
    report(fit_p.rate > 0.0 && fit_v.rate > 0.0, "nominal closed-loop decay",
           "zeta_p " + format_double(fit_p.rate) + ", zeta_V " +
               format_double(fit_v.rate));

    // Step monotonicity of V after one transport period, above the floor.
    double sup_sigma = 0.0;
    for (int i = 0; i <= 16; ++i) {
      const double x = i / 16.0;
      sup_sigma = std::max(sup_sigma, spectral_norm(cfg.nominal.sigma_pp(x)) +
                                          norm2(cfg.nominal.sigma_pm(x)) +
                                          norm2(cfg.nominal.sigma_mp(x)));
    }
    const double dt = traj.t_grid[1] - traj.t_grid[0];
    const double eps_scheme = 10.0 * dt * (params.nu + sup_sigma);
    const double t_transport =
        1.0 / std::min({cfg.nominal.lambda_plus[0], cfg.nominal.lambda_plus[1],
                        cfg.nominal.lambda_plus[2], cfg.nominal.mu_minus});
    const double v_floor = traj.v_series.front() * 1e-12;
    bool monotone = true;
    double worst = 0.0;
    for (size_t i = 0; i + 1 < traj.v_series.size(); ++i) {
      if (traj.t_grid[i] < t_transport) continue;
      if (traj.v_series[i] <= v_floor) continue;
      const double ratio = traj.v_series[i + 1] / traj.v_series[i];
      worst = std::max(worst, ratio);
      if (ratio > 1.0 + eps_scheme) monotone = false;
    }
    report(monotone, "V step-monotone after one transport period",
           "worst ratio " + format_double(worst) + ", slack " +
               format_double(1.0 + eps_scheme));
  }

  if (!all_pass) throw NumericalError("check found failing invariants");
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace

int run_command(const Command& cmd) {
  try {
    if (cmd.subcommand == "scenario-v") return cmd_scenario_v(cmd);
    if (cmd.subcommand == "kernel") return cmd_kernel(cmd);
    if (cmd.subcommand == "simulate") return cmd_simulate(cmd);
    if (cmd.subcommand == "kolmogorov") return cmd_kolmogorov(cmd);
    if (cmd.subcommand == "ensemble") return cmd_ensemble(cmd);
    if (cmd.subcommand == "check") return cmd_check(cmd);
    throw ValidationError("unknown subcommand: " + cmd.subcommand);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mjpde
