#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mjpde/experiment.hpp"
#include "mjpde/model.hpp"
#include "mjpde/pde.hpp"

namespace mjpde {

struct ControllerConfig {
  ControllerType type = ControllerType::NominalBackstepping;
  int kernel_mesh = 0;  // 0 -> tied to the grid resolution
  double kernel_tol = 1e-10;
  int kernel_max_iter = 200;
};

struct ExperimentConfig {
  double horizon = 400.0;
  std::string initial_condition = "sinusoidal";
  // Sampled 4 x (N+1) initial data; takes precedence over the named preset.
  std::optional<std::array<std::vector<double>, 4>> initial_field;
  int snapshot_stride = 200;
  int paths = 100;
  uint64_t base_seed = 1;
  double tail_fraction = 0.5;
  double lyapunov_margin = 0.05;
  double kolmogorov_dt = 0.0;  // 0 -> min(0.01, 0.1/rate_cap)
};

struct Config {
  Mode nominal;
  MarkovSpec markov;
  Grid grid;
  ControllerConfig controller;
  ExperimentConfig experiment;

  SimConfig sim_config() const;
  int kernel_mesh() const {
    return controller.kernel_mesh > 0 ? controller.kernel_mesh : grid.n_cells;
  }
  void validate() const;
};

Config config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const Config& c);

Config load_config(const std::filesystem::path& path,
                   const std::vector<std::string>& overrides = {});

// Dotted-path override "grid.n_cells=200"; the value is parsed as a JSON
// literal, falling back to a string.
void apply_override(nlohmann::json& j, const std::string& key_eq_value);

// JSON form of the built-in scenarios (the loader normalizes the negative
// lambda_minus values these carry).
nlohmann::json scenario_v_json();
nlohmann::json scenario_destabilizing_json();

}  // namespace mjpde
