#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <optional>

#include "spinid/bvp.hpp"
#include "spinid/closure.hpp"
#include "spinid/continuation.hpp"
#include "spinid/errors.hpp"
#include "spinid/material.hpp"
#include "spinid/nondim.hpp"
#include "spinid/scalar.hpp"

namespace spinid {

// State layout along the spin line.
enum StateIndex : Index { kVelocity = 0, kForce = 1, kTemperature = 2, kStrainRate = 3 };

inline constexpr double kMinVelocity = 1e-8;

// Dimensionless fiber-spinning boundary value problem embedded in the
// continuation family c in [0, 1]; c = 1 is the physical problem and c = 0
// is solved by the isothermal stress-free fiber.
class FiberModel {
 public:
  FiberModel(const ReferenceValues& refs, const MaterialConstants& material,
             const AirProperties& air, const NusseltModel& nusselt,
             const ExperimentConfig& experiment, std::optional<double> re0_init = std::nullopt);

  const ReferenceValues& references() const { return refs_; }
  const DerivedReferences& derived() const { return derived_; }
  const DimensionlessGroups& groups() const { return groups_; }
  const Material& material() const { return material_; }
  const AirClosure& air() const { return air_; }
  const DimensionlessExperiment& experiment() const { return exp_; }
  const std::string& id() const { return exp_.id; }
  double length() const { return exp_.L; }

  // Copy with a dimensionless outlet diameter.
  FiberModel with_outlet_diameter(double d_out) const;
  bool has_outlet() const { return exp_.outlet.has_value(); }

  double inlet_diameter() const { return diameter(exp_.u_in, exp_.T_in); }

  template <class S>
  S diameter(const S& u, const S& T) const {
    using std::sqrt;
    if (!(real_part(u) > 0.0)) throw DomainError("diameter requires positive velocity");
    return 2.0 * sqrt(exp_.Q / (std::numbers::pi * material_.rho(T) * u));
  }

  double reynolds(double c) const { return c * groups_.Re + (1.0 - c) * groups_.Re0_init; }

  template <class S>
  Vec4<S> rhs(double s, const Vec4<S>& y, const CarreauParams<S>& p, double c) const {
    const S& u = y(kVelocity);
    const S& N = y(kForce);
    const S& T = y(kTemperature);
    const S& e = y(kStrainRate);
    if (!(real_part(u) > kMinVelocity)) throw DomainError("velocity left the admissible region");
    const double Q = exp_.Q;
    const S rho = material_.rho(T);
    const S cp = material_.cp(T);
    const S d = diameter(u, T);
    const ViscosityState<S> visc = material_.evaluate(T, e, p);
    if (!(real_part(visc.stretch_slope) > 0.0)) {
      throw DomainError("material law is not strictly monotone in the strain rate");
    }
    const double fr2 = groups_.Fr * groups_.Fr;
    const S f_n = Q * e - c * (air_.f_air(u, d, s) + Q / (fr2 * u));
    const S f_t = c / (cp * Q) *
                  (groups_.Ec * N * e -
                   groups_.St * std::numbers::pi * d * air_.alpha(u, d, s) * (T - exp_.T_air));
    const S num = reynolds(c) / Q *
                      (rho * N * e + rho * u * f_n + u * N * material_.drho_dT() * f_t) -
                  e * visc.dmu_dT * f_t;
    Vec4<S> out;
    out << e, f_n, f_t, num / visc.stretch_slope;
    return out;
  }

  template <class S>
  Vec4<S> bc(const Vec4<S>& y0, const Vec4<S>& yl, const CarreauParams<S>& p, double c) const {
    if (!exp_.outlet) throw ValidationError(exp_.id + ".outlet", "no outlet condition set");
    const double Q = exp_.Q;
    Vec4<S> g;
    g(0) = y0(kVelocity) - exp_.u_in;
    if (const auto* dout = std::get_if<OutletDiameter>(&*exp_.outlet)) {
      g(1) = diameter(yl(kVelocity), yl(kTemperature)) -
             (c * dout->value + (1.0 - c) * inlet_diameter());
    } else {
      const double uout = std::get<OutletVelocity>(*exp_.outlet).value;
      g(1) = yl(kVelocity) - (c * uout + (1.0 - c) * exp_.u_in);
    }
    g(2) = y0(kTemperature) - exp_.T_in;
    const S t_in(exp_.T_in);
    g(3) = reynolds(c) / Q * material_.rho(exp_.T_in) * exp_.u_in * y0(kForce) -
           y0(kStrainRate) * material_.mu_e(t_in, y0(kStrainRate), p);
    return g;
  }

  // Isothermal stress-free fiber: u = u_in, N = 0, T = T_in, epsdot = 0.
  Eigen::Vector4d auxiliary_state() const;
  // The same state on a uniform mesh; it solves the c = 0 member exactly.
  bvp::Solution auxiliary_solution(Index nodes = 21) const;

  // Collocation-ready system at parameters p and continuation level c.
  bvp::System system(const Params& p, double c) const;

  Family family(const Params& p) const;

  // System with complex-valued parameters, for parameter sensitivities.
  bvp::ComplexSystem complex_system(const CarreauParams<Complex>& p, double c) const;

 private:
  ReferenceValues refs_;
  DerivedReferences derived_;
  DimensionlessGroups groups_;
  Material material_;
  AirClosure air_;
  DimensionlessExperiment exp_;
};

// Physical (c = 1) solution at p: direct solve from the warm start or the
// auxiliary state, continuation as fallback.
ContinuationResult simulate(const FiberModel& model, const Params& p,
                            const std::optional<bvp::Solution>& warm_start = std::nullopt,
                            const ContinuationSettings& settings = {},
                            const bvp::SolverOptions& opts = {});

}  // namespace spinid
