#pragma once

#include <Eigen/Core>
#include <exception>
#include <string>

#include "spinid/errors.hpp"
#include "spinid/scalar.hpp"

namespace spinid {

struct ComplexStepConfig {
  double h = 1e-30;

  void validate() const {
    if (!(h > 0.0 && h < 1e-8)) {
      throw ValidationError("complex_step.h", "must lie in (0, 1e-8)");
    }
  }
};

// Jacobian of a holomorphic vector function by complex-step differentiation:
// column j is Im F(x + i h e_j) / h. No subtractive cancellation, so h can be
// far below the square root of machine epsilon.
template <class F>
Eigen::MatrixXd complex_step_jacobian(F&& fun, const Eigen::VectorXd& x,
                                      const ComplexStepConfig& cfg = {}) {
  cfg.validate();
  Eigen::VectorXcd xc = x.cast<Complex>();
  Eigen::MatrixXd jac;
  for (Index j = 0; j < x.size(); ++j) {
    xc(j) = Complex(x(j), cfg.h);
    Eigen::VectorXcd fx;
    try {
      fx = fun(xc);
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (complex-step column " +
                        std::to_string(j) + ")");
    }
    if (j == 0) jac.resize(fx.size(), x.size());
    jac.col(j) = fx.imag() / cfg.h;
    xc(j) = Complex(x(j), 0.0);
  }
  return jac;
}

// Derivative of a scalar holomorphic function.
template <class F>
double complex_step_derivative(F&& fun, double x, const ComplexStepConfig& cfg = {}) {
  cfg.validate();
  return std::imag(fun(Complex(x, cfg.h))) / cfg.h;
}

}  // namespace spinid
