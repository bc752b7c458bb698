#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "spinid/errors.hpp"
#include "spinid/nondim.hpp"
#include "spinid/scalar.hpp"

namespace spinid {

// Air properties in SI units, constant along the spin line.
struct AirProperties {
  double rho_star = 1.0;
  double cp_star = 1000.0;
  double nu_star = 2e-5;
  double lambda_star = 0.031;

  void validate() const;
};

// Tangential Stokes resistance coefficient of a slender cylinder with
// slenderness ratio delta, 0 < delta < 4.
double stokes_resistance(double delta);

// Nusselt correlations N(Re_parallel, Re, Pr): Re_parallel is the signed
// tangential slip Reynolds number, Re >= |Re_parallel| its magnitude.
// Contract: positive, nondecreasing in Re at fixed Re_parallel.

// Default: laminar thin-cylinder correlation,
//   N = (1 - chi^2 / 2) (0.3 + 0.62 Re^(1/2) Pr^(1/3) / (1 + (0.4/Pr)^(2/3))^(1/4)),
// chi = Re_parallel / Re the parallel-flow fraction. Pure parallel flow halves
// the cross-flow value; Re = 0 leaves the conduction floor 0.3.
struct LaminarCylinderNusselt {
  template <class S>
  S operator()(const S& re_parallel, const S& re, double pr) const {
    using std::pow;
    using std::sqrt;
    const double prandtl = 0.62 * std::cbrt(pr) / std::pow(1.0 + std::pow(0.4 / pr, 2.0 / 3.0), 0.25);
    if (real_part(re) == 0.0) return S(0.3);
    const S chi = re_parallel / re;
    return (1.0 - 0.5 * chi * chi) * (0.3 + prandtl * sqrt(re));
  }
};

// Constant Nusselt number; useful as a stub closure in tests.
struct ConstantNusselt {
  double value = 1.0;
  template <class S>
  S operator()(const S&, const S&, double) const {
    return S(value);
  }
};

using NusseltModel = std::variant<LaminarCylinderNusselt, ConstantNusselt>;

// "laminar-cylinder" or "constant" / "constant:<value>".
NusseltModel nusselt_from_name(const std::string& name);
std::string nusselt_name(const NusseltModel& model);

// Quiescent-air line force and heat-transfer coefficient, dimensionless.
class AirClosure {
 public:
  AirClosure(const DimensionlessGroups& groups, const ReferenceValues& refs,
             const AirProperties& air, double delta, NusseltModel nusselt = {});

  double resistance() const { return r_stokes_; }

  // f = -(A*/Re*) rho* nu* u r; linear in u, independent of d and s.
  template <class S>
  S f_air(const S& u, const S& /*d*/, double /*s*/) const {
    return -drag_coefficient_ * u;
  }

  // alpha = (1/Nu*) (lambda*/d) N(-Re* d u/nu*, Re* d u/nu*, Pr* cp* rho* nu*/lambda*)
  template <class S>
  S alpha(const S& u, const S& d, double /*s*/) const {
    if (!(real_part(d) > 0.0)) throw DomainError("heat transfer requires positive diameter");
    const S re = re_scale_ * d * u;
    const S nu = std::visit([&](const auto& m) { return S(m(-re, re, prandtl_)); }, nusselt_);
    return lambda_ / (nu_star_ref_ * d) * nu;
  }

  template <class S>
  S nusselt(const S& re_parallel, const S& re) const {
    return std::visit([&](const auto& m) { return S(m(re_parallel, re, prandtl_)); }, nusselt_);
  }

 private:
  double r_stokes_;
  double drag_coefficient_;
  double re_scale_;     // Re* / nu~*
  double prandtl_;      // Pr* cp~* rho~* nu~* / lambda~*
  double lambda_;       // lambda~*
  double nu_star_ref_;  // Nu*
  NusseltModel nusselt_;
};

}  // namespace spinid
