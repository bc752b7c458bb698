#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spinid/data.hpp"
#include "spinid/spinmodel.hpp"

namespace spinid {

// Optimization nodes s_i = i L / n_o, i = 1..n_o, with quadrature widths
// s_i - s_{i-1} (s_0 = 0).
struct CostGrid {
  std::vector<double> nodes;
  std::vector<double> widths;

  static CostGrid uniform(double length, int count = 20);
  std::size_t size() const { return nodes.size(); }
  void validate(double length) const;
};

// One experiment prepared for identification: the outlet diameter is taken
// from the smoothed data at s = L.
struct IdentExperiment {
  FiberModel model;
  AnsatzFit fit;
  CostGrid grid;
};

// Matches measurement series (SI) to configured experiments by id, fits the
// ansatz and sets d_out = d_fit(L).
std::vector<IdentExperiment> prepare_experiments(const std::vector<FiberModel>& models,
                                                 const std::vector<MeasurementSeries>& series,
                                                 int grid_points = 20);

// Weighted residual of one optimization node as a function of the state y:
//   sqrt(width * max(epsdot, 0)) * (d(u, rho(T)) - d_fit).
template <class S>
S node_residual(const FiberModel& model, double width, double d_fit, const Vec<S>& y) {
  using std::sqrt;
  if (!(real_part(y(kStrainRate)) > 0.0)) return S(0.0);
  return sqrt(width * y(kStrainRate)) * (model.diameter(y(kVelocity), y(kTemperature)) - d_fit);
}

Eigen::VectorXd residual_vector(const IdentExperiment& exp, const bvp::Solution& sol);

// Solves dS/dY * D_pY = -dS/dp at the converged collocation values. Rows are
// node-major (4 per node), columns (n, kappa).
Eigen::MatrixXd state_sensitivity(const FiberModel& model, const Params& p,
                                  const bvp::Solution& sol, const ComplexStepConfig& cs = {});

// dF/dp of one experiment's residual block, chained through the Hermite
// interpolant: the interpolation weights act on the nodal values and on the
// nodal slopes f(s_j, y_j, p), whose total p-derivatives come by complex step.
Eigen::MatrixXd residual_sensitivity(const IdentExperiment& exp, const Params& p,
                                     const bvp::Solution& sol, const Eigen::MatrixXd& state_sens,
                                     const ComplexStepConfig& cs = {});

struct EvaluatorOptions {
  ContinuationSettings continuation;
  bvp::SolverOptions solver;
  int threads = 1;
};

struct CostEvaluation {
  Params p{};
  bool ok = false;
  std::string failure;
  double J = 0.0;
  Eigen::VectorXd F;
  bool has_derivatives = false;
  Eigen::MatrixXd G;  // dF/dp
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();  // Gauss-Newton
  std::vector<bvp::Solution> solutions;
  int continuation_steps = 0;
};

class CostEvaluator {
 public:
  CostEvaluator(std::vector<IdentExperiment> experiments, EvaluatorOptions opts = {});

  const std::vector<IdentExperiment>& experiments() const { return experiments_; }
  const EvaluatorOptions& options() const { return opts_; }

  // Solver failures do not throw; they come back with ok = false.
  CostEvaluation evaluate(const Params& p, const std::vector<bvp::Solution>* warm = nullptr,
                          bool derivatives = true) const;

 private:
  std::vector<IdentExperiment> experiments_;
  EvaluatorOptions opts_;
};

struct TrustRegionSettings {
  double initial_radius = 0.1;
  double max_radius = 0.5;
  double gradient_tol = 1e-8;
  double step_tol = 1e-10;
  // Stop once the model predicts less than this fraction of J as decrease;
  // below it, changes in J are solver noise.
  double reduction_tol = 1e-10;
  int max_iterations = 50;
  ParameterDomain bounds;

  void validate() const;
};

struct IterateRecord {
  int iteration = 0;
  Params p{};
  double J = 0.0;
  double gradient_norm = 0.0;
  double radius = 0.0;
  double seconds = 0.0;
  bool accepted = false;
  double ratio = 0.0;
};

struct IdentifyResult {
  Params p{};
  double J = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
  std::vector<IterateRecord> history;
  CostEvaluation final_evaluation;
};

// Minimizer of g.s + s.H.s/2 over |s| <= radius (exact, via the eigen
// decomposition of the symmetric H).
Eigen::VectorXd trust_region_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                                  double radius);

// Box-constrained trust-region Gauss-Newton from start.
IdentifyResult identify(const CostEvaluator& evaluator, const Params& start,
                        const TrustRegionSettings& settings = {});

void write_iterates_csv(std::ostream& os, const std::vector<IterateRecord>& history);

struct HeuristicSettings {
  double n_init = 0.5;
  double kappa_l = 7.0;
  double kappa_u = 20.0;
  double rel_dif = 0.1;
  double kappa_step = 1.0;

  void validate() const;
};

struct HeuristicResult {
  Params p{};
  bool flagged = false;  // sweep stopped by a failed evaluation
  double J_newtonian = 0.0;
  std::vector<std::pair<double, double>> sweep;  // (kappa, J(n_init, kappa))
};

HeuristicResult start_heuristic(const CostEvaluator& evaluator,
                                const HeuristicSettings& settings = {});

struct ScanResult {
  std::vector<double> n_values;
  std::vector<double> kappa_values;
  Eigen::MatrixXd J;  // rows n, columns kappa; NaN where the solve failed
};

ScanResult scan(const CostEvaluator& evaluator, std::pair<double, double> n_range,
                std::pair<double, double> kappa_range, int n_points, int kappa_points);

// Row-major n,kappa,J,status with "nan" / "failed" for failures.
void write_scan_csv(std::ostream& os, const ScanResult& result);

}  // namespace spinid
