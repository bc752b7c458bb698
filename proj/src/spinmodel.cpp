#include "spinid/spinmodel.hpp"

namespace spinid {

FiberModel::FiberModel(const ReferenceValues& refs, const MaterialConstants& material,
                       const AirProperties& air, const NusseltModel& nusselt,
                       const ExperimentConfig& experiment, std::optional<double> re0_init)
    : refs_(refs),
      derived_(derive_references(refs)),
      groups_(compute_groups(refs, derived_, re0_init)),
      material_(material, refs, groups_.De),
      air_(groups_, refs, air, experiment.delta, nusselt),
      exp_(nondimensionalize(experiment, refs)) {
  const double t_in = exp_.T_in;
  if (!(t_in >= material_.temperature_floor() && t_in <= material_.temperature_ceiling())) {
    throw ValidationError("experiment." + exp_.id + ".T_in",
                          "outside the operating range of the viscosity law");
  }
  if (exp_.outlet) {
    if (const auto* d = std::get_if<OutletDiameter>(&*exp_.outlet)) {
      if (!(d->value < inlet_diameter())) {
        throw ValidationError("experiment." + exp_.id + ".d_out",
                              "must be smaller than the inlet diameter");
      }
    }
  }
}

FiberModel FiberModel::with_outlet_diameter(double d_out) const {
  FiberModel copy = *this;
  copy.exp_.outlet = OutletDiameter{d_out};
  if (!(d_out > 0.0 && d_out < inlet_diameter())) {
    throw ValidationError("experiment." + exp_.id + ".d_out",
                          "must be positive and smaller than the inlet diameter");
  }
  return copy;
}

Eigen::Vector4d FiberModel::auxiliary_state() const {
  return Eigen::Vector4d(exp_.u_in, 0.0, exp_.T_in, 0.0);
}

bvp::Solution FiberModel::auxiliary_solution(Index nodes) const {
  return bvp::Solution::constant(bvp::Mesh::uniform(0.0, exp_.L, nodes), auxiliary_state());
}

Family FiberModel::family(const Params& p) const {
  return [self = *this, p](double c) { return self.system(p, c); };
}

bvp::System FiberModel::system(const Params& p, double c) const {
  if (!exp_.outlet) throw ValidationError("experiment." + exp_.id + ".outlet", "no outlet condition set");
  const FiberModel& self = *this;
  auto rhs = [self, p, c](double s, const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    const Vec4<S> y4 = y;
    return Vec<S>(self.rhs<S>(s, y4, p.cast<S>(), c));
  };
  auto bc = [self, p, c](const auto& ya, const auto& yb) {
    using S = typename std::decay_t<decltype(ya)>::Scalar;
    const Vec4<S> a = ya;
    const Vec4<S> b = yb;
    return Vec<S>(self.bc<S>(a, b, p.cast<S>(), c));
  };
  return bvp::make_system(4, rhs, bc);
}

bvp::ComplexSystem FiberModel::complex_system(const CarreauParams<Complex>& p, double c) const {
  if (!exp_.outlet) throw ValidationError("experiment." + exp_.id + ".outlet", "no outlet condition set");
  const FiberModel& self = *this;
  bvp::ComplexSystem sys;
  sys.dim = 4;
  sys.f = [self, p, c](double s, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    return self.rhs<Complex>(s, Vec4<Complex>(y), p, c);
  };
  sys.g = [self, p, c](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) -> Eigen::VectorXcd {
    return self.bc<Complex>(Vec4<Complex>(a), Vec4<Complex>(b), p, c);
  };
  return sys;
}

ContinuationResult simulate(const FiberModel& model, const Params& p,
                            const std::optional<bvp::Solution>& warm_start,
                            const ContinuationSettings& settings, const bvp::SolverOptions& opts) {
  return solve_with_fallback(model.family(p), model.auxiliary_solution(opts.initial_nodes),
                             warm_start, settings, opts);
}

}  // namespace spinid
