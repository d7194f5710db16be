#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mjpde/kernel.hpp"
#include "mjpde/markov.hpp"
#include "mjpde/model.hpp"

namespace mjpde {

enum class ControllerType { NominalBackstepping, ZeroInput };

struct SimConfig {
  Grid grid;
  double horizon = 400.0;
  std::string initial_condition = "sinusoidal";
  // Sampled 4 x (N+1) initial data; overrides the named preset when present.
  std::optional<std::array<std::vector<double>, 4>> initial_field;
  ControllerType controller = ControllerType::NominalBackstepping;
  int snapshot_stride = 0;  // <= 0 keeps only the first and last snapshot
};

struct Trajectory {
  std::vector<double> t_grid;
  std::vector<double> p_series;  // int_0^1 ||w||^2 dx
  std::vector<double> v_series;  // filled through the v_eval hook, else 0
  std::vector<double> u_series;
  std::vector<int> mode_series;
  std::vector<FieldState> snapshots;
};

// Hook used to fill v_series; receives the state and the active mode index.
using VEvaluator = std::function<double(const FieldState&, int)>;

// First-order upwind simulation of the switching closed-loop (or open-loop)
// system driven by a mode path over mode_set. The control input is resolved
// implicitly at the x = 1 boundary so that the discrete target boundary
// condition is met exactly when the active mode equals the nominal one.
Trajectory simulate(const SimConfig& cfg, const ModePath& path,
                    const std::vector<Mode>& mode_set, const Mode& nominal,
                    const KernelSolution& ks, const VEvaluator& v_eval = {});

// Single fixed mode, no jumps.
Trajectory simulate_deterministic(const SimConfig& cfg, const Mode& mode,
                                  const Mode& nominal, const KernelSolution& ks,
                                  const VEvaluator& v_eval = {});

}  // namespace mjpde
