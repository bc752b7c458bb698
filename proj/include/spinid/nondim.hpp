#pragma once

#include <optional>
#include <string>
#include <variant>

namespace spinid {

// Scaling constants of the non-dimensionalization, SI units.
struct ReferenceValues {
  double Q0 = 3.08e-5;     // mass flow, kg/s
  double L0 = 0.51;        // length, m (arclength scale s0 = L0)
  double u0 = 0.0283;      // velocity, m/s
  double T0 = 513.15;      // temperature, K
  double rho0 = 1.077e3;   // density, kg/m^3
  double cp0 = 2.2903e3;   // heat capacity, J/(kg K)
  double mu0 = 1.4865e3;   // dynamic viscosity, Pa s
  double alpha0 = 12.762;  // heat-transfer coefficient, W/(m^2 K)
  double K0 = 1.0;         // consistency, Pa
  double rho_star0 = 1.0;
  double cp_star0 = 1000.0;
  double nu_star0 = 2e-5;
  double lambda_star0 = 0.031;
  double g = 9.81;

  void validate() const;
};

struct DerivedReferences {
  double A0;  // m^2
  double d0;  // m
  double N0;  // N
  double f0;  // N/m
};

struct DimensionlessGroups {
  double Re;
  double Fr;
  double Ec;
  double St;
  double Re_star;
  double A_star;
  double Nu_star;
  double Pr_star;
  double De;
  double Re0_init;  // Reynolds number of the auxiliary (c = 0) problem
};

DerivedReferences derive_references(const ReferenceValues& refs);

// Re0_init defaults to Re.
DimensionlessGroups compute_groups(const ReferenceValues& refs, const DerivedReferences& derived,
                                   std::optional<double> re0_init = std::nullopt);

struct OutletVelocity {
  double value;
};
struct OutletDiameter {
  double value;
};
using Outlet = std::variant<OutletVelocity, OutletDiameter>;

// One spinning experiment in SI units. The outlet condition is optional
// here because identification derives it from the smoothed measurements.
struct ExperimentConfig {
  std::string id;
  double L = 0.51;
  double Q = 3.08e-5;
  double u_in = 0.0283;
  double T_in = 513.15;
  std::optional<Outlet> outlet;
  double T_air = 293.15;
  double delta = 1e-3;
  std::string stencil_velocity;
  std::string pressure;

  void validate() const;
};

// Same record with every quantity divided by its reference value.
struct DimensionlessExperiment {
  std::string id;
  double L;
  double Q;
  double u_in;
  double T_in;
  std::optional<Outlet> outlet;
  double T_air;
  double delta;
};

DimensionlessExperiment nondimensionalize(const ExperimentConfig& config,
                                          const ReferenceValues& refs);
ExperimentConfig redimensionalize(const DimensionlessExperiment& exp, const ReferenceValues& refs);

}  // namespace spinid
