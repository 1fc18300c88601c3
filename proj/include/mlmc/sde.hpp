#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlmc {

// Coefficient callback: reads the state x (size = state_dim) and writes the
// result into `out`.  For drift, out has size state_dim; for diffusion, out
// is the state_dim x noise_dim matrix in row-major order.
using CoefficientFn = std::function<void(std::span<const double>, std::span<double>)>;

// An Ito SDE  dX = mu(X) dt + sigma(X) dB  on [0, horizon], with
// deterministic initial value.  Coefficients are locally Lipschitz with
// polynomial growth; global Lipschitz continuity is NOT assumed.
struct SdeProblem {
  std::string name;
  int state_dim = 1;
  int noise_dim = 1;
  std::vector<double> initial_value;
  double horizon = 1.0;
  CoefficientFn drift;
  CoefficientFn diffusion;

  void validate() const {
    if (state_dim < 1) throw std::invalid_argument("SdeProblem: state_dim must be >= 1");
    if (noise_dim < 1) throw std::invalid_argument("SdeProblem: noise_dim must be >= 1");
    if (static_cast<int>(initial_value.size()) != state_dim) {
      throw std::invalid_argument("SdeProblem: initial_value size must equal state_dim");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("SdeProblem: horizon must be positive");
    if (!drift || !diffusion) {
      throw std::invalid_argument("SdeProblem: drift and diffusion must be set");
    }
  }
};

// Scalar functional of the terminal state whose expectation is estimated.
struct Payoff {
  std::string name;
  std::function<double(std::span<const double>)> eval;
  // Constant in the assumed polynomial growth bound |f(x)-f(y)| <=
  // growth * (1+|x|^q+|y|^q) |x-y|; recorded for reports only.
  double growth_constant = 4.0;
};

}  // namespace mlmc
