#include "mjpde/markov.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mjpde/csv.hpp"

namespace mjpde {

namespace {

// 53-bit uniform in [0,1); hand-rolled so paths are reproducible across
// standard libraries.
double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exp_draw(std::mt19937_64& rng, double rate) {
  return -std::log1p(-u01(rng)) / rate;
}

// dP_j = -c_j P_j + sum_k P_k tau_kj
std::vector<double> derivative(const std::vector<double>& p,
                               const std::vector<std::vector<double>>& tau) {
  const size_t r = p.size();
  std::vector<double> out(r, 0.0);
  for (size_t j = 0; j < r; ++j) {
    double cj = 0.0;
    for (size_t k = 0; k < r; ++k) cj += tau[j][k];
    double acc = -cj * p[j];
    for (size_t k = 0; k < r; ++k) acc += p[k] * tau[k][j];
    out[j] = acc;
  }
  return out;
}

std::vector<double> axpy(const std::vector<double>& base,
                         const std::vector<double>& d, double s) {
  std::vector<double> out(base.size());
  for (size_t i = 0; i < base.size(); ++i) out[i] = base[i] + s * d[i];
  return out;
}

}  // namespace

std::vector<double> KolmogorovSolution::at(double t) const {
  if (t_grid.empty()) throw ValidationError("empty Kolmogorov solution");
  if (t < t_grid.front() - 1e-12 || t > t_grid.back() + 1e-12)
    throw ValidationError("time " + std::to_string(t) +
                          " outside the Kolmogorov solution range");
  auto it = std::lower_bound(t_grid.begin(), t_grid.end(), t);
  if (it == t_grid.end()) return p.back();
  size_t hi = static_cast<size_t>(it - t_grid.begin());
  if (hi == 0 || t_grid[hi] == t) return p[hi];
  size_t lo = hi - 1;
  const double w = (t - t_grid[lo]) / (t_grid[hi] - t_grid[lo]);
  std::vector<double> out(p[lo].size());
  for (size_t j = 0; j < out.size(); ++j)
    out[j] = (1.0 - w) * p[lo][j] + w * p[hi][j];
  return out;
}

ModePath ModePath::frozen(int mode_index, double horizon) {
  ModePath mp;
  mp.jumps = {{0.0, mode_index}};
  mp.horizon = horizon;
  return mp;
}

int ModePath::mode_at(double t) const {
  int mode = jumps.front().second;
  for (const auto& [tj, idx] : jumps) {
    if (tj <= t)
      mode = idx;
    else
      break;
  }
  return mode;
}

double default_dt_ode(const MarkovSpec& spec) {
  const double cap = spec.rate_cap();
  if (cap <= 0.0) return 0.01;
  return std::min(0.01, 0.1 / cap);
}

KolmogorovSolution kolmogorov_forward(const MarkovSpec& spec, double horizon,
                                      double dt_ode) {
  spec.validate();
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
  if (!(dt_ode > 0.0)) throw ValidationError("dt_ode must be positive");

  KolmogorovSolution sol;
  std::vector<double> p = spec.initial_distribution;
  sol.t_grid.push_back(0.0);
  sol.p.push_back(p);

  double t = 0.0;
  while (t < horizon - 1e-15) {
    // Never step across a rate-interval boundary.
    double step = std::min(dt_ode, horizon - t);
    for (const auto& interval : spec.rates)
      if (interval.t_start > t + 1e-15 && interval.t_start < t + step - 1e-15)
        step = interval.t_start - t;

    const auto& tau = spec.rates_at(t);
    const auto d1 = derivative(p, tau);
    const auto d2 = derivative(axpy(p, d1, step / 2.0), tau);
    const auto d3 = derivative(axpy(p, d2, step / 2.0), tau);
    const auto d4 = derivative(axpy(p, d3, step), tau);
    for (size_t j = 0; j < p.size(); ++j)
      p[j] += step / 6.0 * (d1[j] + 2.0 * d2[j] + 2.0 * d3[j] + d4[j]);

    double sum = 0.0;
    for (double v : p) sum += v;
    if (std::abs(sum - 1.0) > 1e-12)
      for (double& v : p) v /= sum;

    t += step;
    sol.t_grid.push_back(t);
    sol.p.push_back(p);
  }
  return sol;
}

ModePath sample_path(const MarkovSpec& spec, double horizon, uint64_t seed) {
  spec.validate();
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");

  std::mt19937_64 rng(seed);
  const size_t r = spec.n_modes();

  // Initial mode from the initial law.
  int mode = static_cast<int>(r) - 1;
  {
    const double u = u01(rng);
    double acc = 0.0;
    for (size_t j = 0; j < r; ++j) {
      acc += spec.initial_distribution[j];
      if (u < acc) {
        mode = static_cast<int>(j);
        break;
      }
    }
  }

  ModePath path;
  path.horizon = horizon;
  path.jumps = {{0.0, mode}};

  const bool constant = spec.rates.size() == 1;
  double t = 0.0;
  while (true) {
    const size_t j = static_cast<size_t>(mode);

    // Largest outgoing rate of the current mode over all intervals; the
    // thinning bound (equals the exact rate when rates are constant).
    double bound = 0.0;
    for (const auto& interval : spec.rates) {
      double cj = 0.0;
      for (double v : interval.matrix[j]) cj += v;
      bound = std::max(bound, cj);
    }
    if (bound <= 0.0) break;  // absorbing mode

    t += exp_draw(rng, bound);
    if (t >= horizon) break;

    const auto& tau = spec.rates_at(t);
    double cj = 0.0;
    for (double v : tau[j]) cj += v;
    if (!constant) {
      if (cj <= 0.0 || u01(rng) >= cj / bound) continue;  // thinned out
    }

    // Jump target with probability tau_jk / c_j.
    const double u = u01(rng) * cj;
    double acc = 0.0;
    int target = -1;
    for (size_t k = 0; k < r; ++k) {
      acc += tau[j][k];
      if (u < acc) {
        target = static_cast<int>(k);
        break;
      }
    }
    if (target < 0) continue;  // rounding fell off the end; treat as thinned
    mode = target;
    path.jumps.emplace_back(t, mode);
  }
  return path;
}

double expected_distance(const MarkovSpec& spec, const KolmogorovSolution& ksol,
                         const Mode& nominal, double t) {
  const std::vector<double> p = ksol.at(t);
  if (p.size() != spec.n_modes())
    throw ValidationError("Kolmogorov solution size does not match the mode set");
  double acc = 0.0;
  for (size_t j = 0; j < p.size(); ++j)
    acc += p[j] * mode_distance(spec.modes[j], nominal);
  return acc;
}

void save_kolmogorov_csv(const KolmogorovSolution& ksol,
                         const std::filesystem::path& path) {
  std::vector<std::string> header{"t"};
  const size_t r = ksol.p.empty() ? 0 : ksol.p.front().size();
  for (size_t j = 1; j <= r; ++j) header.push_back("p" + std::to_string(j));
  CsvWriter out(path, header);
  for (size_t i = 0; i < ksol.t_grid.size(); ++i) {
    out.add(ksol.t_grid[i]);
    for (double v : ksol.p[i]) out.add(v);
    out.end_row();
  }
  out.commit();
}

void save_path_csv(const ModePath& path, const std::filesystem::path& file) {
  CsvWriter out(file, {"t_jump", "mode_index"});
  for (const auto& [t, idx] : path.jumps) {
    out.add(t);
    out.add(idx);
    out.end_row();
  }
  out.commit();
}

}  // namespace mjpde
