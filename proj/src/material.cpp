#include "spinid/material.hpp"

namespace spinid {

void MaterialConstants::validate() const {
  if (!(mu_c > 0.0)) throw ValidationError("material.mu_c", "must be positive");
  if (!(B >= 0.0)) throw ValidationError("material.B", "must be non-negative");
  if (!(T_vf >= 0.0)) throw ValidationError("material.T_VF", "must be non-negative");
  if (!(trouton > 0.0)) throw ValidationError("material.trouton", "must be positive");
}

Material::Material(const MaterialConstants& constants, const ReferenceValues& refs,
                   double deborah)
    : c_(constants), T0_(refs.T0), De_(deborah) {
  c_.validate();
  refs.validate();
  if (!(deborah > 0.0)) throw ValidationError("De", "must be positive");
  mu_c_ = c_.mu_c / refs.mu0;
  B_ = c_.B / refs.T0;
  T_vf_ = c_.T_vf / refs.T0;
  a_rho_ = c_.a_rho * refs.T0 / refs.rho0;
  b_rho_ = c_.b_rho / refs.rho0;
  a_cp_ = c_.a_cp * refs.T0 / refs.cp0;
  b_cp_ = c_.b_cp / refs.cp0;
  T_lo_ = (c_.T_vf + 1.0) / refs.T0;
  T_hi_ = 1.2;
  // The linear laws must stay positive over the whole operating range.
  for (double t : {T_lo_, T_hi_}) {
    if (!(a_rho_ * t + b_rho_ > 0.0)) {
      throw ValidationError("material.a_rho", "density not positive over the operating range");
    }
    if (!(a_cp_ * t + b_cp_ > 0.0)) {
      throw ValidationError("material.a_cp", "heat capacity not positive over the operating range");
    }
  }
}

std::optional<double> Material::check_strict_monotonicity(double T, const Params& p,
                                                          double epsdot_max,
                                                          double step) const {
  const auto count = static_cast<long>(std::floor(epsdot_max / step + 0.5));
  for (long k = 0; k <= count; ++k) {
    const double e = static_cast<double>(k) * step;
    const auto v = evaluate(T, e, p);
    if (!(v.stretch_slope > 0.0) || !(v.mu_e + e * v.dmu_depsdot > 0.0)) return e;
  }
  return std::nullopt;
}

}  // namespace spinid
