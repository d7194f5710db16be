#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mjpde/kernel.hpp"
#include "mjpde/lyapunov.hpp"
#include "mjpde/markov.hpp"
#include "mjpde/model.hpp"
#include "mjpde/pde.hpp"

namespace mjpde {

struct EnsembleResult {
  std::vector<double> t_grid;
  std::vector<double> mean_p;        // Monte-Carlo estimate of E[p(t)]
  std::vector<double> ci_halfwidth;  // 95% normal-approximation halfwidth
  int n_paths = 0;
  DecayFit fitted;
  std::vector<uint64_t> diverged_seeds;
};

struct EnsembleOptions {
  int n_paths = 100;
  uint64_t base_seed = 1;
  int workers = 0;  // 0 -> MJPDE_WORKERS env var, else hardware concurrency
  // When set, per-path series stream to <dir>/<seed>.csv as they finish and
  // existing files are reused, which makes interrupted ensembles resumable.
  std::filesystem::path stream_dir;
  double tail_fraction = 0.5;
};

// Simulates n_paths mode paths with seeds base_seed .. base_seed+n-1 and
// averages p(t) pointwise. The reduction runs in seed order, so the result is
// bit-identical for any worker count. Individual diverged paths are recorded;
// more than 1% of them fails the ensemble.
EnsembleResult run_ensemble(const SimConfig& cfg, const MarkovSpec& spec,
                            const Mode& nominal, const KernelSolution& ks,
                            const EnsembleOptions& opts);

EnsembleResult run_ensemble(const SimConfig& cfg, const MarkovSpec& spec,
                            const Mode& nominal, const KernelSolution& ks,
                            int n_paths, uint64_t base_seed);

// Built-in reproduction scenario: five modes differing only in the leftward
// speed, sinusoidal initial data, horizon 400.
struct Scenario {
  SimConfig sim;
  MarkovSpec markov;
  Mode nominal;
  int kernel_mesh = 100;
  double kernel_tol = 1e-10;
  int kernel_max_iter = 200;
};

Scenario scenario_v();

// Companion configuration whose in-domain coupling makes the open-loop
// system grow; used to demonstrate that the controller does nontrivial work.
Scenario scenario_destabilizing();

}  // namespace mjpde
