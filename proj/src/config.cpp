#include "mjpde/config.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

namespace mjpde {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ValidationError("unknown key '" + key + "' in " + where);
}

Vec3 parse_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(where + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Mat3 parse_mat3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(where + " must be a 3x3 array");
  Mat3 m;
  for (size_t r = 0; r < 3; ++r) m[r] = parse_vec3(j[r], where + " row");
  return m;
}

json vec3_to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json mat3_to_json(const Mat3& m) {
  return json::array({vec3_to_json(m[0]), vec3_to_json(m[1]), vec3_to_json(m[2])});
}

template <class M>
M parse_entry(const json& j, const std::string& where);

template <>
Vec3 parse_entry<Vec3>(const json& j, const std::string& where) {
  return parse_vec3(j, where);
}

template <>
Mat3 parse_entry<Mat3>(const json& j, const std::string& where) {
  return parse_mat3(j, where);
}

json entry_to_json(const Vec3& v) { return vec3_to_json(v); }
json entry_to_json(const Mat3& m) { return mat3_to_json(m); }

template <class M>
SpatialCoeff<M> parse_coeff(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  check_keys(j, {"kind", "value", "coeffs", "x", "values"}, where);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return SpatialCoeff<M>::zero();
  if (kind == "constant")
    return SpatialCoeff<M>::constant(parse_entry<M>(j.at("value"), where));
  if (kind == "polynomial") {
    std::vector<M> coeffs;
    for (const auto& c : j.at("coeffs"))
      coeffs.push_back(parse_entry<M>(c, where + " coefficient"));
    return SpatialCoeff<M>::polynomial(std::move(coeffs));
  }
  if (kind == "sampled") {
    std::vector<double> xs = j.at("x").get<std::vector<double>>();
    std::vector<M> values;
    for (const auto& v : j.at("values"))
      values.push_back(parse_entry<M>(v, where + " sample"));
    return SpatialCoeff<M>::sampled(std::move(xs), std::move(values));
  }
  throw ValidationError(where + ": unknown coefficient kind '" + kind + "'");
}

template <class M>
json coeff_to_json(const SpatialCoeff<M>& c) {
  json j;
  switch (c.kind()) {
    case SpatialCoeff<M>::Kind::Zero:
      j["kind"] = "zero";
      break;
    case SpatialCoeff<M>::Kind::Constant:
      j["kind"] = "constant";
      j["value"] = entry_to_json(c.coefficients().front());
      break;
    case SpatialCoeff<M>::Kind::Polynomial: {
      j["kind"] = "polynomial";
      json coeffs = json::array();
      for (const auto& m : c.coefficients()) coeffs.push_back(entry_to_json(m));
      j["coeffs"] = coeffs;
      break;
    }
    case SpatialCoeff<M>::Kind::Sampled: {
      j["kind"] = "sampled";
      j["x"] = c.abscissae();
      json values = json::array();
      for (const auto& m : c.coefficients()) values.push_back(entry_to_json(m));
      j["values"] = values;
      break;
    }
  }
  return j;
}

Mode parse_mode(const json& j, const std::string& where) {
  check_keys(j,
             {"lambda_plus", "lambda_minus", "sigma_pp", "sigma_pm", "sigma_mp",
              "q", "r"},
             where);
  Mode m;
  m.lambda_plus = parse_vec3(j.at("lambda_plus"), where + ".lambda_plus");
  const double lm = j.at("lambda_minus").get<double>();
  if (lm < 0.0)
    std::cerr << "note: " << where << ".lambda_minus given as " << lm
              << "; using its magnitude as the leftward speed\n";
  m.mu_minus = std::abs(lm);
  m.sigma_pp = parse_coeff<Mat3>(j.at("sigma_pp"), where + ".sigma_pp");
  m.sigma_pm = parse_coeff<Vec3>(j.at("sigma_pm"), where + ".sigma_pm");
  m.sigma_mp = parse_coeff<Vec3>(j.at("sigma_mp"), where + ".sigma_mp");
  m.q_bound = parse_vec3(j.at("q"), where + ".q");
  m.r_bound = parse_vec3(j.at("r"), where + ".r");
  return m;
}

json mode_to_json(const Mode& m) {
  json j;
  j["lambda_plus"] = vec3_to_json(m.lambda_plus);
  j["lambda_minus"] = m.mu_minus;
  j["sigma_pp"] = coeff_to_json(m.sigma_pp);
  j["sigma_pm"] = coeff_to_json(m.sigma_pm);
  j["sigma_mp"] = coeff_to_json(m.sigma_mp);
  j["q"] = vec3_to_json(m.q_bound);
  j["r"] = vec3_to_json(m.r_bound);
  return j;
}

std::vector<std::vector<double>> parse_rate_matrix(const json& j) {
  std::vector<std::vector<double>> m;
  for (const auto& row : j) m.push_back(row.get<std::vector<double>>());
  return m;
}

}  // namespace

SimConfig Config::sim_config() const {
  SimConfig cfg;
  cfg.grid = grid;
  cfg.horizon = experiment.horizon;
  cfg.initial_condition = experiment.initial_condition;
  cfg.initial_field = experiment.initial_field;
  cfg.controller = controller.type;
  cfg.snapshot_stride = experiment.snapshot_stride;
  return cfg;
}

void Config::validate() const {
  nominal.validate();
  markov.validate();
  grid.validate();
  if (controller.kernel_mesh != 0 && controller.kernel_mesh < 8)
    throw ValidationError("controller.kernel_mesh must be 0 (grid-tied) or >= 8");
  if (!(controller.kernel_tol > 0.0))
    throw ValidationError("controller.kernel_tol must be positive");
  if (controller.kernel_max_iter < 1)
    throw ValidationError("controller.kernel_max_iter must be >= 1");
  if (!(experiment.horizon > 0.0))
    throw ValidationError("experiment.horizon must be positive");
  if (experiment.paths < 2) throw ValidationError("experiment.paths must be >= 2");
  if (!(experiment.tail_fraction > 0.0) || experiment.tail_fraction > 1.0)
    throw ValidationError("experiment.tail_fraction must lie in (0, 1]");
  if (!(experiment.lyapunov_margin > 0.0))
    throw ValidationError("experiment.lyapunov_margin must be positive");
  if (experiment.kolmogorov_dt < 0.0)
    throw ValidationError("experiment.kolmogorov_dt must be >= 0");
}

Config config_from_json(const json& j) {
  try {
    check_keys(j, {"modes", "markov", "grid", "controller", "experiment"}, "config");

    Config c;
    const json& modes_j = j.at("modes");
    check_keys(modes_j, {"nominal", "set"}, "modes");
    const json& nominal_j = modes_j.at("nominal");
    c.nominal = parse_mode(nominal_j, "modes.nominal");

    std::vector<Mode> set;
    for (size_t i = 0; i < modes_j.at("set").size(); ++i) {
      json entry = modes_j.at("set")[i];
      const std::string where = "modes.set[" + std::to_string(i) + "]";
      if (entry.contains("inherit")) {
        if (entry.at("inherit").get<std::string>() != "nominal")
          throw ValidationError(where + ": only 'nominal' can be inherited");
        entry.erase("inherit");
        json merged = nominal_j;
        merged.merge_patch(entry);
        entry = merged;
      }
      set.push_back(parse_mode(entry, where));
    }

    const json& markov_j = j.at("markov");
    check_keys(markov_j, {"rates", "initial_distribution"}, "markov");
    c.markov.modes = std::move(set);
    c.markov.initial_distribution =
        markov_j.at("initial_distribution").get<std::vector<double>>();
    const json& rates_j = markov_j.at("rates");
    if (!rates_j.is_array() || rates_j.empty())
      throw ValidationError("markov.rates must be a non-empty array");
    if (rates_j.front().is_object()) {
      for (const auto& interval : rates_j) {
        check_keys(interval, {"t_start", "matrix"}, "markov.rates interval");
        c.markov.rates.push_back(RateInterval{
            interval.at("t_start").get<double>(),
            parse_rate_matrix(interval.at("matrix"))});
      }
    } else {
      c.markov.rates.push_back(RateInterval{0.0, parse_rate_matrix(rates_j)});
    }

    if (j.contains("grid")) {
      const json& g = j.at("grid");
      check_keys(g, {"n_cells", "cfl"}, "grid");
      c.grid.n_cells = g.value("n_cells", c.grid.n_cells);
      c.grid.cfl = g.value("cfl", c.grid.cfl);
    }

    if (j.contains("controller")) {
      const json& ct = j.at("controller");
      check_keys(ct, {"type", "kernel_mesh", "kernel_tol", "kernel_max_iter"},
                 "controller");
      const std::string type = ct.value("type", std::string("nominal_backstepping"));
      if (type == "nominal_backstepping")
        c.controller.type = ControllerType::NominalBackstepping;
      else if (type == "zero_input")
        c.controller.type = ControllerType::ZeroInput;
      else
        throw ValidationError("unknown controller type: " + type);
      c.controller.kernel_mesh = ct.value("kernel_mesh", c.controller.kernel_mesh);
      c.controller.kernel_tol = ct.value("kernel_tol", c.controller.kernel_tol);
      c.controller.kernel_max_iter =
          ct.value("kernel_max_iter", c.controller.kernel_max_iter);
    }

    if (j.contains("experiment")) {
      const json& e = j.at("experiment");
      check_keys(e,
                 {"horizon", "initial_condition", "initial_field",
                  "snapshot_stride", "paths", "base_seed", "tail_fraction",
                  "lyapunov_margin", "kolmogorov_dt"},
                 "experiment");
      c.experiment.horizon = e.value("horizon", c.experiment.horizon);
      c.experiment.initial_condition =
          e.value("initial_condition", c.experiment.initial_condition);
      if (e.contains("initial_field")) {
        const json& f = e.at("initial_field");
        if (!f.is_array() || f.size() != 4)
          throw ValidationError("experiment.initial_field must hold 4 rows");
        std::array<std::vector<double>, 4> rows;
        for (size_t r = 0; r < 4; ++r) {
          rows[r] = f[r].get<std::vector<double>>();
          if (rows[r].size() != rows[0].size())
            throw ValidationError("experiment.initial_field rows differ in length");
        }
        c.experiment.initial_field = std::move(rows);
      }
      c.experiment.snapshot_stride =
          e.value("snapshot_stride", c.experiment.snapshot_stride);
      c.experiment.paths = e.value("paths", c.experiment.paths);
      c.experiment.base_seed = e.value("base_seed", c.experiment.base_seed);
      c.experiment.tail_fraction =
          e.value("tail_fraction", c.experiment.tail_fraction);
      c.experiment.lyapunov_margin =
          e.value("lyapunov_margin", c.experiment.lyapunov_margin);
      c.experiment.kolmogorov_dt =
          e.value("kolmogorov_dt", c.experiment.kolmogorov_dt);
    }

    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
}

json config_to_json(const Config& c) {
  json j;
  j["modes"]["nominal"] = mode_to_json(c.nominal);
  json set = json::array();
  for (const auto& m : c.markov.modes) set.push_back(mode_to_json(m));
  j["modes"]["set"] = set;

  if (c.markov.rates.size() == 1) {
    j["markov"]["rates"] = c.markov.rates.front().matrix;
  } else {
    json intervals = json::array();
    for (const auto& interval : c.markov.rates)
      intervals.push_back({{"t_start", interval.t_start}, {"matrix", interval.matrix}});
    j["markov"]["rates"] = intervals;
  }
  j["markov"]["initial_distribution"] = c.markov.initial_distribution;

  j["grid"] = {{"n_cells", c.grid.n_cells}, {"cfl", c.grid.cfl}};
  j["controller"] = {
      {"type", c.controller.type == ControllerType::NominalBackstepping
                   ? "nominal_backstepping"
                   : "zero_input"},
      {"kernel_mesh", c.controller.kernel_mesh},
      {"kernel_tol", c.controller.kernel_tol},
      {"kernel_max_iter", c.controller.kernel_max_iter}};
  j["experiment"] = {{"horizon", c.experiment.horizon},
                     {"initial_condition", c.experiment.initial_condition},
                     {"snapshot_stride", c.experiment.snapshot_stride},
                     {"paths", c.experiment.paths},
                     {"base_seed", c.experiment.base_seed},
                     {"tail_fraction", c.experiment.tail_fraction},
                     {"lyapunov_margin", c.experiment.lyapunov_margin},
                     {"kolmogorov_dt", c.experiment.kolmogorov_dt}};
  if (c.experiment.initial_field) {
    json rows = json::array();
    for (const auto& row : *c.experiment.initial_field) rows.push_back(row);
    j["experiment"]["initial_field"] = rows;
  }
  return j;
}

void apply_override(json& j, const std::string& key_eq_value) {
  const size_t eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override must have the form key.path=value: " +
                          key_eq_value);
  std::string key = key_eq_value.substr(0, eq);
  const std::string value = key_eq_value.substr(eq + 1);
  for (char& ch : key)
    if (ch == '.') ch = '/';
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;  // plain string
  try {
    j[json::json_pointer("/" + key)] = parsed;
  } catch (const json::exception& e) {
    throw ValidationError("cannot apply override '" + key_eq_value +
                          "': " + e.what());
  }
}

Config load_config(const std::filesystem::path& path,
                   const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed config " + path.string() + ": " + e.what());
  }
  for (const auto& ov : overrides) apply_override(j, ov);
  return config_from_json(j);
}

namespace {

json scenario_to_json(const Scenario& sc, bool negative_lambda_minus) {
  Config c;
  c.nominal = sc.nominal;
  c.markov = sc.markov;
  c.grid = sc.sim.grid;
  c.controller.type = sc.sim.controller;
  c.controller.kernel_mesh = sc.kernel_mesh;
  c.controller.kernel_tol = sc.kernel_tol;
  c.controller.kernel_max_iter = sc.kernel_max_iter;
  c.experiment.horizon = sc.sim.horizon;
  c.experiment.initial_condition = sc.sim.initial_condition;
  c.experiment.snapshot_stride = sc.sim.snapshot_stride;

  json j = config_to_json(c);
  if (negative_lambda_minus) {
    // The reference scenario states the leftward speed with its sign.
    j["modes"]["nominal"]["lambda_minus"] = -sc.nominal.mu_minus;
    json set = json::array();
    for (const auto& m : sc.markov.modes)
      set.push_back({{"inherit", "nominal"}, {"lambda_minus", -m.mu_minus}});
    j["modes"]["set"] = set;
  }
  return j;
}

}  // namespace

json scenario_v_json() { return scenario_to_json(scenario_v(), true); }

json scenario_destabilizing_json() {
  return scenario_to_json(scenario_destabilizing(), false);
}

}  // namespace mjpde
