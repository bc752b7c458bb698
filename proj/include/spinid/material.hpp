#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "spinid/errors.hpp"
#include "spinid/nondim.hpp"
#include "spinid/scalar.hpp"

namespace spinid {

// Polymer constants in SI units (PMMA defaults).
struct MaterialConstants {
  double mu_c = 3.7074e-4;  // Pa s, VFT prefactor
  double B = 3649.0;        // K
  double T_vf = 273.15;     // K, Vogel temperature
  double a_rho = -0.964;    // kg/(m^3 K)
  double b_rho = 1572.33;   // kg/m^3
  double a_cp = 3.2;        // J/(kg K^2)
  double b_cp = 648.22;     // J/(kg K)
  double trouton = 3.0;

  void validate() const;
};

// Material parameters of the Carreau-like law: power index n and
// log-consistency kappa, K = exp(kappa) in units of K0.
template <class S>
struct CarreauParams {
  S n;
  S kappa;

  template <class T>
  CarreauParams<T> cast() const {
    return {T(n), T(kappa)};
  }
};
using Params = CarreauParams<double>;

struct ParameterDomain {
  double n_lo = 0.0;
  double n_hi = 1.0;
  double kappa_lo = 7.0;
  double kappa_hi = 20.0;

  bool contains(const Params& p) const {
    return p.n >= n_lo && p.n <= n_hi && p.kappa >= kappa_lo && p.kappa <= kappa_hi;
  }
};

template <class S>
struct ViscosityState {
  S mu_e;           // elongational viscosity
  S dmu_dT;         // partial in temperature
  S dmu_depsdot;    // partial in strain rate
  S stretch_slope;  // d/d(epsdot) [mu_e * epsdot] = mu_e + epsdot * dmu_depsdot
};

// Temperature- and strain-rate-dependent laws in dimensionless form. All
// templates accept double or std::complex<double> and use only operations
// holomorphic in their arguments, so they can be complex-step differentiated.
class Material {
 public:
  Material(const MaterialConstants& constants, const ReferenceValues& refs, double deborah);

  const MaterialConstants& constants() const { return c_; }
  double deborah() const { return De_; }
  double temperature_floor() const { return T_lo_; }
  double temperature_ceiling() const { return T_hi_; }

  template <class S>
  S mu_s0(const S& T) const {
    using std::exp;
    check_temperature(real_part(T));
    return mu_c_ * exp(B_ / (T - T_vf_));
  }

  template <class S>
  S mu_e0(const S& T) const {
    return c_.trouton * mu_s0(T);
  }

  template <class S>
  S rho(const S& T) const {
    const S value = a_rho_ * T + b_rho_;
    if (!(real_part(value) > 0.0)) throw DomainError("density is non-positive");
    return value;
  }
  double drho_dT() const { return a_rho_; }

  template <class S>
  S cp(const S& T) const {
    const S value = a_cp_ * T + b_cp_;
    if (!(real_part(value) > 0.0)) throw DomainError("heat capacity is non-positive");
    return value;
  }

  template <class S>
  S mu_e(const S& T, const S& epsdot, const CarreauParams<S>& p) const {
    return evaluate(T, epsdot, p).mu_e;
  }

  template <class S>
  S dmu_e_dT(const S& T, const S& epsdot, const CarreauParams<S>& p) const {
    return evaluate(T, epsdot, p).dmu_dT;
  }

  template <class S>
  S dmu_e_depsdot(const S& T, const S& epsdot, const CarreauParams<S>& p) const {
    return evaluate(T, epsdot, p).dmu_depsdot;
  }

  // mu_e = m0 (1 + x^2)^((n-1)/2) with x = De m0 epsdot / K. The factor
  // (1 + n x^2)/(1 + x^2) is written as 1 - (1-n) x^2/(1 + x^2) so that n = 1
  // reproduces the Newtonian law bit for bit, independent of kappa.
  template <class S>
  ViscosityState<S> evaluate(const S& T, const S& epsdot, const CarreauParams<S>& p) const {
    using std::exp;
    using std::pow;
    const S m0 = mu_e0(T);
    const S dm0_dT = -m0 * B_ / ((T - T_vf_) * (T - T_vf_));
    const S lam = De_ * m0 / exp(p.kappa);
    const S x = lam * epsdot;
    const S x2 = x * x;
    const S q = (p.n - 1.0) / 2.0;
    const S bracket = pow(1.0 + x2, q);
    const S thinning = 1.0 - (1.0 - p.n) * x2 / (1.0 + x2);
    ViscosityState<S> v;
    v.mu_e = m0 * bracket;
    v.dmu_depsdot = m0 * (p.n - 1.0) * x * lam * bracket / (1.0 + x2);
    v.dmu_dT = dm0_dT * bracket * thinning;
    v.stretch_slope = m0 * bracket * thinning;
    return v;
  }

  // Location of the first strain rate on a uniform grid [0, max] at which
  // mu_e + epsdot * dmu_e/depsdot fails to be positive, if any.
  std::optional<double> check_strict_monotonicity(double T, const Params& p,
                                                  double epsdot_max = 1e3,
                                                  double step = 1e-2) const;

 private:
  void check_temperature(double T) const {
    if (!(T >= T_lo_ && T <= T_hi_)) {
      throw DomainError("temperature " + std::to_string(T * T0_) +
                        " K outside the operating range of the viscosity law");
    }
  }

  MaterialConstants c_;
  double T0_;
  double De_;
  double mu_c_;   // mu_c / mu0
  double B_;      // B / T0
  double T_vf_;   // T_vf / T0
  double a_rho_;  // a_rho T0 / rho0
  double b_rho_;  // b_rho / rho0
  double a_cp_;
  double b_cp_;
  double T_lo_;
  double T_hi_;
};

}  // namespace spinid
