#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mjpde {

struct Command {
  std::string subcommand;  // kernel | simulate | kolmogorov | ensemble | check | scenario-v
  std::filesystem::path config_path;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> overrides;  // key=value, dotted paths
  std::optional<int> paths;
  std::optional<uint64_t> seed;
  std::optional<int> grid_n;
};

// Executes one subcommand. Returns 0 on success, 1 on validation failure and
// 2 on numerical failure; diagnostics go to stderr.
int run_command(const Command& cmd);

}  // namespace mjpde
