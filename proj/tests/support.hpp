#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "spinid/data.hpp"
#include "spinid/ident.hpp"
#include "spinid/spinmodel.hpp"

namespace spinid::testing {

// Seeded draws of model inputs for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Params params() { return {uniform(0.0, 1.0), uniform(7.0, 20.0)}; }

  // Dimensionless temperature inside the VFT operating range around 513 K.
  double temperature() { return uniform(480.0, 600.0) / 513.15; }

  Eigen::VectorXd vector(Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Nozzle velocity for a 1 mm nozzle at the melt density of the inlet.
inline double inlet_velocity(double Q, double T_in = 513.15) {
  const MaterialConstants m;
  const double rho = m.a_rho * T_in + m.b_rho;
  return Q / (rho * std::numbers::pi / 4.0 * 1e-6);
}

inline ExperimentConfig experiment(const std::string& id, double Q, double d_out) {
  ExperimentConfig e;
  e.id = id;
  e.L = 0.51;
  e.Q = Q;
  e.u_in = inlet_velocity(Q);
  e.T_in = 513.15;
  e.outlet = OutletDiameter{d_out};
  return e;
}

// Three flow rates times two take-up diameters.
inline std::vector<ExperimentConfig> six_experiments() {
  std::vector<ExperimentConfig> out;
  int k = 0;
  for (double Q : {7.7e-6, 1.54e-5, 3.08e-5}) {
    for (double d_out : {6e-5, 3e-5}) out.push_back(experiment("S" + std::to_string(++k), Q, d_out));
  }
  return out;
}

inline std::vector<ExperimentConfig> three_experiments() {
  std::vector<ExperimentConfig> out;
  int k = 0;
  for (double Q : {7.7e-6, 1.54e-5, 3.08e-5}) out.push_back(experiment("T" + std::to_string(++k), Q, 6e-5));
  return out;
}

inline FiberModel model(const ExperimentConfig& e) {
  return FiberModel(ReferenceValues{}, MaterialConstants{}, AirProperties{}, LaminarCylinderNusselt{}, e);
}

inline std::vector<FiberModel> models(const std::vector<ExperimentConfig>& configs) {
  std::vector<FiberModel> out;
  for (const auto& e : configs) out.push_back(model(e));
  return out;
}

inline std::vector<IdentExperiment> synthetic_case(const std::vector<ExperimentConfig>& configs,
                                                   const Params& p_true, double noise,
                                                   std::uint64_t seed, int points = 40) {
  const auto ms = models(configs);
  SynthesisOptions opts;
  opts.noise_rel = noise;
  opts.seed = seed;
  opts.points = points;
  return prepare_experiments(ms, synthesize(ms, p_true, opts));
}

inline const Params kTruth{0.8, 11.71};

// Replays the step-size bookkeeping of a continuation trace. Returns an empty
// string when the path starts at 0, increases strictly, lands exactly on 1,
// and every step size follows from the previous step.
inline std::string trace_violation(const ContinuationTrace& trace, const ContinuationSettings& set) {
  double c = 0.0;
  double dc = set.dc0;
  int index = 0;
  for (const ContinuationStep& st : trace.steps) {
    const std::string at = "step " + std::to_string(index++) + ": ";
    const double attempt = std::min(dc, 1.0 - c);
    if (st.c_from != c) return at + "does not start at the last accepted c";
    if (st.dc != attempt) return at + "step size " + std::to_string(st.dc) + " != " + std::to_string(attempt);
    if (!st.accepted) {
      dc = attempt / set.mu_div;
      continue;
    }
    if (!(st.c > c)) return at + "path not strictly increasing";
    const double expect = st.cost_half1 + st.cost_half2 > st.cost_full ? set.nu1 * attempt : set.nu2 * attempt;
    if (st.next_dc != expect) return at + "next step size breaks the growth/shrink rule";
    c = st.c;
    dc = st.next_dc;
  }
  if (c != 1.0) return "path ends at c = " + std::to_string(c);
  return {};
}

// Physical invariants of a converged c = 1 fiber solution, checked on a
// dense sample of the interpolant and at the mesh nodes.
inline std::string physical_violation(const FiberModel& model, const bvp::Solution& sol) {
  const auto& exp = model.experiment();
  const auto& mesh = sol.mesh();
  std::vector<double> pts = mesh.nodes();
  for (int k = 0; k <= 400; ++k) pts.push_back(model.length() * k / 400.0);
  std::sort(pts.begin(), pts.end());
  // Samples that coincide with a node up to rounding carry no new information.
  const double eps = 1e-12 * model.length();
  pts.erase(std::unique(pts.begin(), pts.end(), [eps](double a, double b) { return b - a <= eps; }), pts.end());
  double last_d = INFINITY;
  double last_T = INFINITY;
  for (double s : pts) {
    const Eigen::VectorXd y = sol.value(s);
    const double d = model.diameter(y(kVelocity), y(kTemperature));
    const double rho = model.material().rho(y(kTemperature));
    const double area = std::numbers::pi / 4.0 * d * d;
    if (std::abs(rho * area * y(kVelocity) - exp.Q) > 1e-14 * exp.Q) return "mass flux differs from Q";
    if (y(kStrainRate) < -1e-10) return "negative strain rate at s = " + std::to_string(s);
    const bool outlet_thinner = std::holds_alternative<OutletDiameter>(*exp.outlet) &&
                                std::get<OutletDiameter>(*exp.outlet).value < model.inlet_diameter();
    if (outlet_thinner && s > 0.0 && !(d < last_d)) return "diameter not decreasing at s = " + std::to_string(s);
    if (exp.T_air < exp.T_in && y(kTemperature) > last_T) return "temperature rises at s = " + std::to_string(s);
    last_d = d;
    last_T = y(kTemperature);
  }
  return {};
}

}  // namespace spinid::testing
