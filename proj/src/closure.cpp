#include "spinid/closure.hpp"

#include <cstdlib>

namespace spinid {

void AirProperties::validate() const {
  if (!(rho_star > 0.0)) throw ValidationError("air.rho_star", "must be positive");
  if (!(cp_star > 0.0)) throw ValidationError("air.cp_star", "must be positive");
  if (!(nu_star > 0.0)) throw ValidationError("air.nu_star", "must be positive");
  if (!(lambda_star > 0.0)) throw ValidationError("air.lambda_star", "must be positive");
}

double stokes_resistance(double delta) {
  if (!(delta > 0.0 && delta < 4.0)) throw ValidationError("delta", "must lie in (0, 4)");
  const double l = std::log(4.0 / delta);
  return 2.0 * std::numbers::pi / l + 0.5 * std::numbers::pi / (l * l);
}

NusseltModel nusselt_from_name(const std::string& name) {
  if (name.empty() || name == "laminar-cylinder") return LaminarCylinderNusselt{};
  if (name == "constant") return ConstantNusselt{};
  const std::string prefix = "constant:";
  if (name.rfind(prefix, 0) == 0) {
    char* end = nullptr;
    const std::string tail = name.substr(prefix.size());
    const double v = std::strtod(tail.c_str(), &end);
    if (end == tail.c_str() || *end != '\0' || !(v > 0.0)) {
      throw ValidationError("air.nusselt", "constant value must be a positive number");
    }
    return ConstantNusselt{v};
  }
  throw ValidationError("air.nusselt", "unknown correlation '" + name + "'");
}

std::string nusselt_name(const NusseltModel& model) {
  if (const auto* c = std::get_if<ConstantNusselt>(&model)) {
    return "constant:" + std::to_string(c->value);
  }
  return "laminar-cylinder";
}

AirClosure::AirClosure(const DimensionlessGroups& groups, const ReferenceValues& refs,
                       const AirProperties& air, double delta, NusseltModel nusselt)
    : r_stokes_(stokes_resistance(delta)), nusselt_(nusselt) {
  air.validate();
  const double rho = air.rho_star / refs.rho_star0;
  const double cp = air.cp_star / refs.cp_star0;
  const double nu = air.nu_star / refs.nu_star0;
  const double lambda = air.lambda_star / refs.lambda_star0;
  drag_coefficient_ = groups.A_star / groups.Re_star * rho * nu * r_stokes_;
  re_scale_ = groups.Re_star / nu;
  prandtl_ = groups.Pr_star * cp * rho * nu / lambda;
  lambda_ = lambda;
  nu_star_ref_ = groups.Nu_star;
}

}  // namespace spinid
