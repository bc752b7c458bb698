#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "spinid/continuation.hpp"
#include "spinid/errors.hpp"
#include "spinid/material.hpp"
#include "spinid/nondim.hpp"

namespace spinid {

class FiberModel;

// Diameter measurements of one experiment. Units are whatever the producer
// chose: load_measurements returns SI, to_dimensionless converts.
struct MeasurementSeries {
  std::string experiment;
  std::vector<double> positions;
  std::vector<double> diameters;
  std::string stencil_velocity;
  std::string pressure;

  std::size_t size() const { return positions.size(); }
  void validate(double length = INFINITY) const;
};

// CSV with header experiment,position_m,diameter_m; rows grouped by
// experiment in order of first appearance.
std::vector<MeasurementSeries> load_measurements(std::istream& in);
std::vector<MeasurementSeries> load_measurements(const std::filesystem::path& path);
void save_measurements(std::ostream& out, const std::vector<MeasurementSeries>& series);

MeasurementSeries to_dimensionless(const MeasurementSeries& si, const ReferenceValues& refs);

// Smoothing ansatz for the velocity-like profile d^-2:
//   u_f(s) = u0 v E / ((E - 1) u0 + v),  E = exp((s/c)^b),
// evaluated as u0 v / (u0 + (v - u0) exp(-(s/c)^b)) to avoid overflow.
struct AnsatzFit {
  double b = 1.0;
  double c = 1.0;
  double v = 1.0;
  double u0 = 1.0;
  double objective = 0.0;
  int iterations = 0;

  double velocity(double s) const {
    const double w = s > 0.0 ? std::exp(-std::pow(s / c, b)) : 1.0;
    return u0 * v / (u0 + (v - u0) * w);
  }
  double diameter(double s) const { return 1.0 / std::sqrt(velocity(s)); }
};

class FitDivergedError : public Error {
 public:
  FitDivergedError(const std::string& what, std::vector<std::vector<double>> trace)
      : Error(what), trace_(std::move(trace)) {}
  // (b, c, v, objective) per iteration
  const std::vector<std::vector<double>>& trace() const { return trace_; }

 private:
  std::vector<std::vector<double>> trace_;
};

// Least-squares fit of (b, c, v) to sum_i [u_f(s_i) d_i^2 - 1]^2 with u0 fixed
// by the first diameter, over log-parameters by Levenberg-Marquardt.
// Input must be dimensionless.
AnsatzFit fit_ansatz(const MeasurementSeries& series, double length);

// Objective and its gradient in (b, c, v); exposed for checks.
double ansatz_objective(const MeasurementSeries& series, double u0, double b, double c, double v);
Eigen::Vector3d ansatz_gradient(const MeasurementSeries& series, double u0, double b, double c,
                                double v);

struct SynthesisOptions {
  double noise_rel = 0.01;
  std::uint64_t seed = 1;
  int points = 40;
  ContinuationSettings continuation;
  bvp::SolverOptions solver;
};

// Simulates each experiment at the given parameters and samples the diameter
// at uniformly spaced positions (both end points included), multiplied by
// 1 + noise_rel * xi with standard normal xi. Output in SI units.
std::vector<MeasurementSeries> synthesize(const std::vector<FiberModel>& models,
                                          const Params& p_true, const SynthesisOptions& opts);

}  // namespace spinid
