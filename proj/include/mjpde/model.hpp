#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mjpde/errors.hpp"
#include "mjpde/linalg.hpp"

namespace mjpde {

// Spatially varying coefficient on [0,1]. Either an analytic preset (zero,
// constant, polynomial in x) or a sampled table with linear interpolation.
// M is double, Vec3 or Mat3.
template <class M>
class SpatialCoeff {
 public:
  enum class Kind { Zero, Constant, Polynomial, Sampled };

  SpatialCoeff() : kind_(Kind::Zero) {}

  static SpatialCoeff zero() { return SpatialCoeff(); }

  static SpatialCoeff constant(const M& value) {
    SpatialCoeff c;
    c.kind_ = Kind::Constant;
    c.coeffs_ = {value};
    return c;
  }

  // sum_k coeffs[k] * x^k
  static SpatialCoeff polynomial(std::vector<M> coeffs) {
    if (coeffs.empty()) throw ValidationError("polynomial coefficient list is empty");
    SpatialCoeff c;
    c.kind_ = Kind::Polynomial;
    c.coeffs_ = std::move(coeffs);
    return c;
  }

  static SpatialCoeff sampled(std::vector<double> x, std::vector<M> values) {
    if (x.size() < 2 || x.size() != values.size())
      throw ValidationError("sampled coefficient needs >= 2 aligned (x, value) pairs");
    if (!std::is_sorted(x.begin(), x.end()))
      throw ValidationError("sampled coefficient abscissae must be increasing");
    SpatialCoeff c;
    c.kind_ = Kind::Sampled;
    c.xs_ = std::move(x);
    c.coeffs_ = std::move(values);
    return c;
  }

  M operator()(double x) const {
    switch (kind_) {
      case Kind::Zero:
        return zero_value<M>();
      case Kind::Constant:
        return coeffs_[0];
      case Kind::Polynomial: {
        M acc = coeffs_.back();
        for (int k = static_cast<int>(coeffs_.size()) - 2; k >= 0; --k)
          acc = add(scale(acc, x), coeffs_[static_cast<size_t>(k)]);
        return acc;
      }
      case Kind::Sampled: {
        if (x <= xs_.front()) return coeffs_.front();
        if (x >= xs_.back()) return coeffs_.back();
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        size_t hi = static_cast<size_t>(it - xs_.begin());
        size_t lo = hi - 1;
        double w = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
        return add(scale(coeffs_[lo], 1.0 - w), scale(coeffs_[hi], w));
      }
    }
    return zero_value<M>();
  }

  bool is_zero() const { return kind_ == Kind::Zero; }
  Kind kind() const { return kind_; }
  const std::vector<M>& coefficients() const { return coeffs_; }
  const std::vector<double>& abscissae() const { return xs_; }

 private:
  static double add(double a, double b) { return a + b; }
  static double scale(double a, double s) { return a * s; }
  static Vec3 add(const Vec3& a, const Vec3& b) { return mjpde::add(a, b); }
  static Vec3 scale(const Vec3& a, double s) { return mjpde::scale(a, s); }
  static Mat3 add(const Mat3& a, const Mat3& b) { return mjpde::add(a, b); }
  static Mat3 scale(const Mat3& a, double s) { return mjpde::scale(a, s); }

  Kind kind_;
  std::vector<M> coeffs_;
  std::vector<double> xs_;
};

// One realization of the plant parameters: transport speeds, in-domain
// couplings and boundary reflections. The leftward speed is stored as a
// positive magnitude mu_minus; configuration files may carry it with a
// negative sign and the loader normalizes.
struct Mode {
  Vec3 lambda_plus{};              // speeds of the three rightward channels
  double mu_minus = 0.0;           // magnitude of the leftward channel speed
  SpatialCoeff<Mat3> sigma_pp;     // 3x3, couples w+ into the w+ equations
  SpatialCoeff<Vec3> sigma_pm;     // 3x1 column, couples w- into w+
  SpatialCoeff<Vec3> sigma_mp;     // 1x3 row, couples w+ into w-
  Vec3 q_bound{};                  // 3x1 reflection at x = 0
  Vec3 r_bound{};                  // 1x3 reflection at x = 1

  double max_speed() const {
    return std::max({lambda_plus[0], lambda_plus[1], lambda_plus[2], mu_minus});
  }

  void validate() const;
};

struct RateInterval {
  double t_start = 0.0;
  std::vector<std::vector<double>> matrix;  // r x r, zero diagonal
};

// Finite mode set with a (possibly piecewise-constant-in-time) matrix of
// transition rates and an initial distribution over modes.
struct MarkovSpec {
  std::vector<Mode> modes;
  std::vector<RateInterval> rates;  // sorted by t_start, first at 0
  std::vector<double> initial_distribution;

  static MarkovSpec constant_rates(std::vector<Mode> modes,
                                   std::vector<std::vector<double>> rate_matrix,
                                   std::vector<double> initial_distribution);

  size_t n_modes() const { return modes.size(); }
  const std::vector<std::vector<double>>& rates_at(double t) const;
  double rate_cap() const;   // largest entry over all intervals
  double max_speed() const;  // over all modes
  void validate() const;
};

// Uniform spatial grid on [0,1] with nodes x_i = i/n_cells.
struct Grid {
  int n_cells = 100;
  double cfl = 0.9;

  double dx() const { return 1.0 / n_cells; }

  // cfl / (N * max_speed); the CFL invariant dt * max_speed * N <= 1 holds by
  // construction for cfl <= 1.
  double dt_for(double max_speed) const;

  std::vector<double> nodes() const;
  void validate() const;
};

// The 4-component state on the grid. Rows 0..2 hold w+, row 3 holds w-.
struct FieldState {
  std::array<std::vector<double>, 4> w;
  double t = 0.0;

  static FieldState zero(int n_cells, double t = 0.0);
  int n_cells() const { return static_cast<int>(w[0].size()) - 1; }
  bool finite() const;
};

// Initial-condition presets: "sinusoidal" puts sin(2 pi x) on all four
// components, "zero" is the equilibrium.
FieldState make_initial(const std::string& preset, int n_cells);

// Norm of a mode: sqrt of the sum of squared block norms, with spectral norms
// for the matrix blocks and the sup over x taken as a max over n_samples
// uniform points.
double mode_norm(const Mode& m, int n_samples = 257);

// mode_norm applied to the componentwise difference of two modes.
double mode_distance(const Mode& a, const Mode& b, int n_samples = 257);

}  // namespace mjpde
