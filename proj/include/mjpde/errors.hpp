#pragma once

#include <stdexcept>
#include <string>

namespace mjpde {

// Invalid configuration or violated precondition. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runtime numerical failure (divergence, non-convergence). CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimulationDiverged : public NumericalError {
 public:
  explicit SimulationDiverged(double t_blowup)
      : NumericalError("simulation diverged (non-finite state) at t = " +
                       std::to_string(t_blowup)),
        t_blowup_(t_blowup) {}
  double t_blowup() const { return t_blowup_; }

 private:
  double t_blowup_;
};

class KernelSolveFailure : public NumericalError {
 public:
  KernelSolveFailure(int iterations, double last_delta)
      : NumericalError("kernel solver did not converge after " +
                       std::to_string(iterations) +
                       " iterations; last iterate delta = " +
                       std::to_string(last_delta)),
        iterations_(iterations),
        last_delta_(last_delta) {}
  int iterations() const { return iterations_; }
  double last_delta() const { return last_delta_; }

 private:
  int iterations_;
  double last_delta_;
};

}  // namespace mjpde
