#include "spinid/nondim.hpp"

#include <cmath>

#include "spinid/errors.hpp"

namespace spinid {
namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be positive and finite");
}

}  // namespace

void ReferenceValues::validate() const {
  require_positive(Q0, "references.Q0");
  require_positive(L0, "references.L0");
  require_positive(u0, "references.u0");
  require_positive(T0, "references.T0");
  require_positive(rho0, "references.rho0");
  require_positive(cp0, "references.cp0");
  require_positive(mu0, "references.mu0");
  require_positive(alpha0, "references.alpha0");
  require_positive(K0, "references.K0");
  require_positive(rho_star0, "references.rho_star0");
  require_positive(cp_star0, "references.cp_star0");
  require_positive(nu_star0, "references.nu_star0");
  require_positive(lambda_star0, "references.lambda_star0");
  require_positive(g, "references.g");
}

DerivedReferences derive_references(const ReferenceValues& refs) {
  refs.validate();
  DerivedReferences d{};
  d.A0 = refs.Q0 / (refs.rho0 * refs.u0);
  d.d0 = std::sqrt(d.A0);
  d.N0 = refs.Q0 * refs.u0;
  d.f0 = refs.Q0 * refs.u0 / refs.L0;
  return d;
}

DimensionlessGroups compute_groups(const ReferenceValues& refs, const DerivedReferences& derived,
                                   std::optional<double> re0_init) {
  refs.validate();
  DimensionlessGroups g{};
  g.Re = refs.rho0 * refs.u0 * refs.L0 / refs.mu0;
  g.Fr = refs.u0 / std::sqrt(refs.g * refs.L0);
  g.Ec = refs.u0 * refs.u0 / (refs.cp0 * refs.T0);
  g.St = refs.alpha0 * derived.d0 * refs.L0 / (refs.cp0 * refs.Q0);
  g.Re_star = derived.d0 * refs.u0 / refs.nu_star0;
  g.A_star = refs.rho_star0 * derived.d0 * refs.u0 * refs.u0 / derived.f0;
  g.Nu_star = refs.alpha0 * derived.d0 / refs.lambda_star0;
  g.Pr_star = refs.cp_star0 * refs.rho_star0 * refs.nu_star0 / refs.lambda_star0;
  g.De = refs.mu0 * refs.u0 / (refs.K0 * refs.L0);
  g.Re0_init = re0_init.value_or(g.Re);
  if (!(g.Re0_init > 0.0) || !std::isfinite(g.Re0_init)) {
    throw ValidationError("references.Re0", "must be positive and finite");
  }
  return g;
}

void ExperimentConfig::validate() const {
  const std::string prefix = "experiment." + id + ".";
  auto check = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(prefix + name, "must be positive and finite");
    }
  };
  check(L, "L");
  check(Q, "Q");
  check(u_in, "u_in");
  check(T_in, "T_in");
  check(T_air, "T_air");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError(prefix + "delta", "must lie in (0, 1)");
  if (outlet) {
    if (const auto* d = std::get_if<OutletDiameter>(&*outlet)) {
      check(d->value, "d_out");
    } else {
      check(std::get<OutletVelocity>(*outlet).value, "u_out");
    }
  }
}

DimensionlessExperiment nondimensionalize(const ExperimentConfig& config,
                                          const ReferenceValues& refs) {
  config.validate();
  const DerivedReferences derived = derive_references(refs);
  DimensionlessExperiment e;
  e.id = config.id;
  e.L = config.L / refs.L0;
  e.Q = config.Q / refs.Q0;
  e.u_in = config.u_in / refs.u0;
  e.T_in = config.T_in / refs.T0;
  e.T_air = config.T_air / refs.T0;
  e.delta = config.delta;
  if (config.outlet) {
    if (const auto* d = std::get_if<OutletDiameter>(&*config.outlet)) {
      e.outlet = OutletDiameter{d->value / derived.d0};
    } else {
      e.outlet = OutletVelocity{std::get<OutletVelocity>(*config.outlet).value / refs.u0};
    }
  }
  return e;
}

ExperimentConfig redimensionalize(const DimensionlessExperiment& e, const ReferenceValues& refs) {
  const DerivedReferences derived = derive_references(refs);
  ExperimentConfig c;
  c.id = e.id;
  c.L = e.L * refs.L0;
  c.Q = e.Q * refs.Q0;
  c.u_in = e.u_in * refs.u0;
  c.T_in = e.T_in * refs.T0;
  c.T_air = e.T_air * refs.T0;
  c.delta = e.delta;
  if (e.outlet) {
    if (const auto* d = std::get_if<OutletDiameter>(&*e.outlet)) {
      c.outlet = OutletDiameter{d->value * derived.d0};
    } else {
      c.outlet = OutletVelocity{std::get<OutletVelocity>(*e.outlet).value * refs.u0};
    }
  }
  return c;
}

}  // namespace spinid
