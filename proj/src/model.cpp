#include "mjpde/model.hpp"

#include <cmath>
#include <numbers>

namespace mjpde {

namespace {

constexpr double kDistributionTol = 1e-12;

void check_finite_samples(const Mode& m, int n_samples) {
  for (int s = 0; s < n_samples; ++s) {
    const double x = static_cast<double>(s) / (n_samples - 1);
    if (!all_finite(m.sigma_pp(x)) || !all_finite(m.sigma_pm(x)) ||
        !all_finite(m.sigma_mp(x)))
      throw NumericalError("sigma coefficient evaluates to a non-finite value at x = " +
                           std::to_string(x));
  }
}

}  // namespace

void Mode::validate() const {
  for (double l : lambda_plus)
    if (!(l > 0.0)) throw ValidationError("lambda_plus components must be positive");
  if (!(mu_minus > 0.0)) throw ValidationError("mu_minus must be positive");
  if (!all_finite(lambda_plus) || !all_finite(q_bound) || !all_finite(r_bound))
    throw ValidationError("mode parameters must be finite");
  check_finite_samples(*this, 17);
}

MarkovSpec MarkovSpec::constant_rates(std::vector<Mode> modes,
                                      std::vector<std::vector<double>> rate_matrix,
                                      std::vector<double> initial_distribution) {
  MarkovSpec spec;
  spec.modes = std::move(modes);
  spec.rates = {RateInterval{0.0, std::move(rate_matrix)}};
  spec.initial_distribution = std::move(initial_distribution);
  spec.validate();
  return spec;
}

const std::vector<std::vector<double>>& MarkovSpec::rates_at(double t) const {
  size_t active = 0;
  for (size_t i = 0; i < rates.size(); ++i)
    if (rates[i].t_start <= t) active = i;
  return rates[active].matrix;
}

double MarkovSpec::rate_cap() const {
  double cap = 0.0;
  for (const auto& interval : rates)
    for (const auto& row : interval.matrix)
      for (double v : row) cap = std::max(cap, v);
  return cap;
}

double MarkovSpec::max_speed() const {
  double v = 0.0;
  for (const auto& m : modes) v = std::max(v, m.max_speed());
  return v;
}

void MarkovSpec::validate() const {
  const size_t r = modes.size();
  if (r == 0) throw ValidationError("mode set is empty");
  for (const auto& m : modes) m.validate();

  if (rates.empty()) throw ValidationError("rate matrix list is empty");
  if (rates.front().t_start != 0.0)
    throw ValidationError("first rate interval must start at t = 0");
  double prev = -1.0;
  for (const auto& interval : rates) {
    if (interval.t_start <= prev)
      throw ValidationError("rate intervals must have increasing start times");
    prev = interval.t_start;
    if (interval.matrix.size() != r)
      throw ValidationError("rate matrix size does not match the mode count");
    for (size_t i = 0; i < r; ++i) {
      if (interval.matrix[i].size() != r)
        throw ValidationError("rate matrix is not square");
      for (size_t j = 0; j < r; ++j) {
        const double v = interval.matrix[i][j];
        if (!(v >= 0.0)) throw ValidationError("transition rates must be non-negative");
        if (i == j && v != 0.0)
          throw ValidationError("rate matrix diagonal must be zero");
      }
    }
  }

  if (initial_distribution.size() != r)
    throw ValidationError("initial distribution length does not match the mode count");
  double sum = 0.0;
  for (double p : initial_distribution) {
    if (!(p >= 0.0)) throw ValidationError("initial distribution must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionTol)
    throw ValidationError("initial distribution must sum to 1 within 1e-12");
}

double Grid::dt_for(double max_speed) const {
  validate();
  if (!(max_speed > 0.0)) throw ValidationError("maximum speed must be positive");
  return cfl / (n_cells * max_speed);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> xs(static_cast<size_t>(n_cells) + 1);
  for (int i = 0; i <= n_cells; ++i) xs[static_cast<size_t>(i)] = static_cast<double>(i) / n_cells;
  return xs;
}

void Grid::validate() const {
  if (n_cells < 2) throw ValidationError("grid needs at least 2 cells");
  if (!(cfl > 0.0) || cfl > 1.0) throw ValidationError("cfl must lie in (0, 1]");
}

FieldState FieldState::zero(int n_cells, double t) {
  FieldState s;
  for (auto& row : s.w) row.assign(static_cast<size_t>(n_cells) + 1, 0.0);
  s.t = t;
  return s;
}

bool FieldState::finite() const {
  for (const auto& row : w)
    for (double v : row)
      if (!std::isfinite(v)) return false;
  return true;
}

FieldState make_initial(const std::string& preset, int n_cells) {
  FieldState s = FieldState::zero(n_cells);
  if (preset == "zero") return s;
  if (preset == "sinusoidal") {
    for (int i = 0; i <= n_cells; ++i) {
      const double x = static_cast<double>(i) / n_cells;
      const double v = std::sin(2.0 * std::numbers::pi * x);
      for (auto& row : s.w) row[static_cast<size_t>(i)] = v;
    }
    return s;
  }
  throw ValidationError("unknown initial condition preset: " + preset);
}

namespace {

// Shared block evaluation for mode_norm / mode_distance; b omitted -> norm.
double block_norm(const Mode& a, const Mode* b, int n_samples) {
  double lam_diag = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = b ? a.lambda_plus[c] - b->lambda_plus[c] : a.lambda_plus[c];
    lam_diag = std::max(lam_diag, std::abs(d));
  }
  const double mu = b ? a.mu_minus - b->mu_minus : a.mu_minus;
  const Vec3 q = b ? sub(a.q_bound, b->q_bound) : a.q_bound;
  const Vec3 r = b ? sub(a.r_bound, b->r_bound) : a.r_bound;

  double pp = 0.0, pm = 0.0, mp = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const double x = static_cast<double>(s) / (n_samples - 1);
    const Mat3 spp = b ? sub(a.sigma_pp(x), b->sigma_pp(x)) : a.sigma_pp(x);
    const Vec3 spm = b ? sub(a.sigma_pm(x), b->sigma_pm(x)) : a.sigma_pm(x);
    const Vec3 smp = b ? sub(a.sigma_mp(x), b->sigma_mp(x)) : a.sigma_mp(x);
    if (!all_finite(spp) || !all_finite(spm) || !all_finite(smp))
      throw NumericalError("sigma evaluation produced a non-finite value");
    pp = std::max(pp, spectral_norm(spp));
    pm = std::max(pm, norm2(spm));
    mp = std::max(mp, norm2(smp));
  }

  return std::sqrt(lam_diag * lam_diag + mu * mu + dot(q, q) + dot(r, r) +
                   pp * pp + pm * pm + mp * mp);
}

}  // namespace

double mode_norm(const Mode& m, int n_samples) {
  if (n_samples < 2) throw ValidationError("mode_norm needs at least 2 sample points");
  return block_norm(m, nullptr, n_samples);
}

double mode_distance(const Mode& a, const Mode& b, int n_samples) {
  if (n_samples < 2) throw ValidationError("mode_distance needs at least 2 sample points");
  return block_norm(a, &b, n_samples);
}

}  // namespace mjpde
