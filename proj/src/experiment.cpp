#include "mjpde/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "mjpde/csv.hpp"

namespace mjpde {

namespace {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MJPDE_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 2;
}

std::filesystem::path path_file(const std::filesystem::path& dir, uint64_t seed) {
  return dir / (std::to_string(seed) + ".csv");
}

void save_path_series(const std::filesystem::path& file, const Trajectory& traj) {
  CsvWriter out(file, {"t", "p", "u", "mode"});
  for (size_t i = 0; i < traj.t_grid.size(); ++i) {
    out.add(traj.t_grid[i]);
    out.add(traj.p_series[i]);
    out.add(traj.u_series[i]);
    out.add(traj.mode_series[i]);
    out.end_row();
  }
  out.commit();
}

}  // namespace

EnsembleResult run_ensemble(const SimConfig& cfg, const MarkovSpec& spec,
                            const Mode& nominal, const KernelSolution& ks,
                            const EnsembleOptions& opts) {
  if (opts.n_paths < 2) throw ValidationError("ensemble needs at least 2 paths");
  spec.validate();

  const bool stream = !opts.stream_dir.empty();
  if (stream) std::filesystem::create_directories(opts.stream_dir);

  struct Slot {
    std::vector<double> t;
    std::vector<double> p;
    bool diverged = false;
  };
  std::vector<Slot> slots(static_cast<size_t>(opts.n_paths));

  std::atomic<int> next{0};
  std::mutex io_mutex;
  const auto worker = [&]() {
    while (true) {
      const int idx = next.fetch_add(1);
      if (idx >= opts.n_paths) return;
      const uint64_t seed = opts.base_seed + static_cast<uint64_t>(idx);
      Slot& slot = slots[static_cast<size_t>(idx)];

      if (stream) {
        const auto file = path_file(opts.stream_dir, seed);
        if (std::filesystem::exists(file)) {
          const CsvTable table = read_csv(file);
          slot.t.reserve(table.rows.size());
          slot.p.reserve(table.rows.size());
          for (const auto& row : table.rows) {
            slot.t.push_back(row[0]);
            slot.p.push_back(row[1]);
          }
          continue;
        }
      }

      try {
        const ModePath path = sample_path(spec, cfg.horizon, seed);
        const Trajectory traj = simulate(cfg, path, spec.modes, nominal, ks);
        slot.t = traj.t_grid;
        slot.p = traj.p_series;
        if (stream) {
          std::lock_guard<std::mutex> lock(io_mutex);
          save_path_series(path_file(opts.stream_dir, seed), traj);
        }
      } catch (const SimulationDiverged&) {
        slot.diverged = true;
      }
    }
  };

  const int n_workers = std::min(resolve_workers(opts.workers), opts.n_paths);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  EnsembleResult result;
  result.n_paths = opts.n_paths;
  for (int i = 0; i < opts.n_paths; ++i)
    if (slots[static_cast<size_t>(i)].diverged)
      result.diverged_seeds.push_back(opts.base_seed + static_cast<uint64_t>(i));

  const size_t n_ok = static_cast<size_t>(opts.n_paths) - result.diverged_seeds.size();
  if (result.diverged_seeds.size() * 100 > static_cast<size_t>(opts.n_paths))
    throw NumericalError(std::to_string(result.diverged_seeds.size()) + " of " +
                         std::to_string(opts.n_paths) +
                         " paths diverged (more than 1%)");
  if (n_ok < 2) throw NumericalError("fewer than 2 paths completed");

  // Shared stamps; reduction in seed order keeps the result independent of
  // worker scheduling.
  const std::vector<double>* t_ref = nullptr;
  for (const auto& slot : slots)
    if (!slot.diverged) {
      if (!t_ref) t_ref = &slot.t;
      else if (slot.t.size() != t_ref->size())
        throw NumericalError("paths produced differing time grids");
    }
  result.t_grid = *t_ref;

  const size_t n_stamps = result.t_grid.size();
  result.mean_p.assign(n_stamps, 0.0);
  result.ci_halfwidth.assign(n_stamps, 0.0);
  for (const auto& slot : slots) {
    if (slot.diverged) continue;
    for (size_t s = 0; s < n_stamps; ++s) result.mean_p[s] += slot.p[s];
  }
  for (double& v : result.mean_p) v /= static_cast<double>(n_ok);
  if (n_ok >= 2) {
    for (size_t s = 0; s < n_stamps; ++s) {
      double ssq = 0.0;
      for (const auto& slot : slots) {
        if (slot.diverged) continue;
        const double d = slot.p[s] - result.mean_p[s];
        ssq += d * d;
      }
      const double sd = std::sqrt(ssq / static_cast<double>(n_ok - 1));
      result.ci_halfwidth[s] = 1.96 * sd / std::sqrt(static_cast<double>(n_ok));
    }
  }

  double peak = 0.0;
  for (double v : result.mean_p) peak = std::max(peak, v);
  if (peak > 0.0)
    result.fitted =
        decay_fit_clipped(result.t_grid, result.mean_p, opts.tail_fraction);
  return result;
}

EnsembleResult run_ensemble(const SimConfig& cfg, const MarkovSpec& spec,
                            const Mode& nominal, const KernelSolution& ks,
                            int n_paths, uint64_t base_seed) {
  EnsembleOptions opts;
  opts.n_paths = n_paths;
  opts.base_seed = base_seed;
  return run_ensemble(cfg, spec, nominal, ks, opts);
}

namespace {

Mode reference_nominal() {
  Mode m;
  m.lambda_plus = {0.0081, 0.0037, 0.0065};
  m.mu_minus = 0.024;
  m.q_bound = {-12.29, -3.0, 8.45};
  m.r_bound = {0.0011, -0.1601, 0.0034};
  // Default coupling preset: small, smooth, spatially varying repository
  // defaults; edit the configuration to change them.
  const Mat3 cyc{Vec3{0.0, 1.0, 0.0}, Vec3{0.0, 0.0, 1.0}, Vec3{1.0, 0.0, 0.0}};
  m.sigma_pp = SpatialCoeff<Mat3>::polynomial({scale(cyc, 0.0015), scale(cyc, 0.0005)});
  const Vec3 vpm{1.0, 0.8, 0.6};
  m.sigma_pm = SpatialCoeff<Vec3>::polynomial({scale(vpm, 0.004), scale(vpm, -0.001)});
  const Vec3 vmp{0.5, 1.0, 0.75};
  m.sigma_mp = SpatialCoeff<Vec3>::polynomial({scale(vmp, 0.003), scale(vmp, 0.002)});
  return m;
}

}  // namespace

Scenario scenario_v() {
  Scenario sc;
  sc.nominal = reference_nominal();

  const std::array<double, 5> mu{0.02, 0.023, 0.024, 0.025, 0.03};
  std::vector<Mode> modes;
  modes.reserve(mu.size());
  for (double m : mu) {
    Mode mode = sc.nominal;
    mode.mu_minus = m;
    modes.push_back(mode);
  }

  // Repo-default transition rates: nearest-neighbour chain, rate 0.01.
  std::vector<std::vector<double>> tau(5, std::vector<double>(5, 0.0));
  for (int i = 0; i < 5; ++i) {
    if (i > 0) tau[static_cast<size_t>(i)][static_cast<size_t>(i - 1)] = 0.01;
    if (i < 4) tau[static_cast<size_t>(i)][static_cast<size_t>(i + 1)] = 0.01;
  }
  sc.markov = MarkovSpec::constant_rates(std::move(modes), std::move(tau),
                                         {0.02, 0.32, 0.32, 0.32, 0.02});

  sc.sim.grid = Grid{100, 0.9};
  sc.sim.horizon = 400.0;
  sc.sim.initial_condition = "sinusoidal";
  sc.sim.controller = ControllerType::NominalBackstepping;
  sc.sim.snapshot_stride = 200;
  sc.kernel_mesh = 100;
  return sc;
}

Scenario scenario_destabilizing() {
  Scenario sc;
  sc.nominal = reference_nominal();
  // Constant two-way coupling on the slow channel, strong enough that the
  // open-loop system grows.
  sc.nominal.sigma_pp = SpatialCoeff<Mat3>::zero();
  sc.nominal.sigma_pm = SpatialCoeff<Vec3>::constant({0.0, 0.04, 0.0});
  sc.nominal.sigma_mp = SpatialCoeff<Vec3>::constant({0.0, 0.04, 0.0});

  sc.markov = MarkovSpec::constant_rates({sc.nominal},
                                         {std::vector<double>{0.0}}, {1.0});
  sc.sim.grid = Grid{100, 0.9};
  sc.sim.horizon = 400.0;
  sc.sim.initial_condition = "sinusoidal";
  sc.sim.controller = ControllerType::NominalBackstepping;
  sc.sim.snapshot_stride = 200;
  sc.kernel_mesh = 100;
  return sc;
}

}  // namespace mjpde
