#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mjpde/config.hpp"
#include "mjpde/csv.hpp"
#include "test_util.hpp"

using namespace mjpde;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "mjpde_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::trunc);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("the built-in scenario round-trips through JSON") {
  const json j = scenario_v_json();
  const Config c = config_from_json(j);

  CHECK(c.nominal.mu_minus == 0.024);  // normalized from the negative value
  REQUIRE(c.markov.n_modes() == 5);
  const std::array<double, 5> mus{0.02, 0.023, 0.024, 0.025, 0.03};
  for (size_t i = 0; i < 5; ++i) CHECK(c.markov.modes[i].mu_minus == mus[i]);
  CHECK(c.grid.n_cells == 100);
  CHECK(c.controller.kernel_mesh == 100);
  CHECK(c.experiment.horizon == 400.0);

  // Inherited modes share the nominal couplings.
  const Scenario sc = scenario_v();
  for (size_t i = 0; i < 5; ++i) {
    CHECK(mode_distance(c.markov.modes[i], sc.markov.modes[i]) ==
          doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("the committed scenario files match the built-in scenarios") {
  const fs::path root = MJPDE_SOURCE_DIR;
  const Config v = load_config(root / "configs" / "scenario_v.json");
  const Config built = config_from_json(scenario_v_json());
  CHECK(mode_distance(v.nominal, built.nominal) == 0.0);
  REQUIRE(v.markov.n_modes() == built.markov.n_modes());
  for (size_t j = 0; j < v.markov.n_modes(); ++j)
    CHECK(v.markov.modes[j].mu_minus == built.markov.modes[j].mu_minus);
  CHECK(v.markov.rates.front().matrix == built.markov.rates.front().matrix);

  const Config d = load_config(root / "configs" / "destabilizing.json");
  const Config built_d = config_from_json(scenario_destabilizing_json());
  CHECK(mode_distance(d.nominal, built_d.nominal) == 0.0);
}

TEST_CASE("config serialization round-trips") {
  const json j = scenario_destabilizing_json();
  const Config c = config_from_json(j);
  const Config back = config_from_json(config_to_json(c));
  CHECK(back.nominal.mu_minus == c.nominal.mu_minus);
  CHECK(back.markov.n_modes() == c.markov.n_modes());
  CHECK(back.grid.n_cells == c.grid.n_cells);
  CHECK(back.experiment.paths == c.experiment.paths);
  CHECK(mode_distance(back.nominal, c.nominal) == 0.0);
}

TEST_CASE("dotted-path overrides") {
  json j = scenario_v_json();
  apply_override(j, "grid.n_cells=200");
  apply_override(j, "experiment.base_seed=7");
  apply_override(j, "controller.type=zero_input");
  const Config c = config_from_json(j);
  CHECK(c.grid.n_cells == 200);
  CHECK(c.experiment.base_seed == 7);
  CHECK(c.controller.type == ControllerType::ZeroInput);

  json j2 = scenario_v_json();
  apply_override(j2, "grid.nope=1");
  CHECK_THROWS_AS(config_from_json(j2), ValidationError);
  CHECK_THROWS_AS(apply_override(j2, "missing-equals"), ValidationError);
}

TEST_CASE("malformed config files are rejected before computation") {
  const auto path = write_temp("broken.json", "{ not json");
  CHECK_THROWS_AS(load_config(path), ValidationError);

  const auto missing = std::filesystem::temp_directory_path() / "does_not_exist.json";
  CHECK_THROWS_AS(load_config(missing), ValidationError);

  json j = scenario_v_json();
  j["markov"]["initial_distribution"] = {0.5, 0.1, 0.1, 0.1, 0.1};  // sums to 0.9
  const auto bad = write_temp("bad_dist.json", j.dump());
  CHECK_THROWS_AS(load_config(bad), ValidationError);

  json j2 = scenario_v_json();
  j2["markov"]["rates"][0][0] = 0.5;  // nonzero diagonal
  CHECK_THROWS_AS(config_from_json(j2), ValidationError);

  json j3 = scenario_v_json();
  j3["markov"]["rates"][0][1] = -0.2;
  CHECK_THROWS_AS(config_from_json(j3), ValidationError);
}

TEST_CASE("sampled initial fields pass through the config") {
  json j = scenario_v_json();
  const size_t n = 17;  // 16 cells
  json rows = json::array();
  for (int r = 0; r < 4; ++r) rows.push_back(std::vector<double>(n, 1.0));
  j["experiment"]["initial_field"] = rows;
  j["grid"]["n_cells"] = 16;
  const Config c = config_from_json(j);
  REQUIRE(c.experiment.initial_field.has_value());
  CHECK((*c.experiment.initial_field)[3].size() == n);
  CHECK(c.sim_config().initial_field.has_value());

  j["experiment"]["initial_field"] = json::array({std::vector<double>(n, 1.0)});
  CHECK_THROWS_AS(config_from_json(j), ValidationError);
}

TEST_CASE("negative leftward speeds are normalized on load") {
  json j = scenario_v_json();
  CHECK(j["modes"]["nominal"]["lambda_minus"].get<double>() == -0.024);
  const Config c = config_from_json(j);
  CHECK(c.nominal.mu_minus == 0.024);
}

TEST_CASE("format_double round-trips doubles exactly") {
  std::mt19937_64 rng(5);
  std::vector<double> values{1.0 / 3.0, 0.1, 1e-308, 1.7976931348623157e308,
                             0.0, 2.0, 231.4466};
  for (int i = 0; i < 100; ++i)
    values.push_back(std::ldexp(testutil::u01(rng) - 0.5,
                                static_cast<int>(testutil::u01(rng) * 80) - 40));
  for (double v : values) {
    const std::string s = format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::bit_cast<uint64_t>(back) == std::bit_cast<uint64_t>(v));
  }
}

TEST_CASE("csv writer commits atomically") {
  const auto dir = std::filesystem::temp_directory_path() / "mjpde_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "table.csv";

  {
    CsvWriter out(path, {"a", "b"});
    out.add(1.5);
    out.add(-2);
    out.end_row();
    // No commit: nothing may appear.
  }
  CHECK(!std::filesystem::exists(path));
  CHECK(!std::filesystem::exists(dir / "table.csv.tmp"));

  {
    CsvWriter out(path, {"a", "b"});
    out.add(0.12345678901234567);
    out.add(42);
    out.end_row();
    out.commit();
  }
  REQUIRE(std::filesystem::exists(path));
  const CsvTable table = read_csv(path);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0][0] == 0.12345678901234567);
  CHECK(table.rows[0][1] == 42.0);
  std::filesystem::remove_all(dir);
}
