#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "spinid/block_solver.hpp"
#include "spinid/complex_step.hpp"
#include "spinid/errors.hpp"
#include "spinid/scalar.hpp"

// Two-point boundary value problems y' = f(s, y), g(y(a), y(b)) = 0 solved by
// three-stage Lobatto IIIa collocation (the bvp4c scheme): damped Newton on
// the nodal values, residual control of the C1 cubic interpolant, and mesh
// refinement by interval halving.
namespace spinid::bvp {

using RealRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
using ComplexRhs = std::function<Eigen::VectorXcd(double, const Eigen::VectorXcd&)>;
using RealBc = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using ComplexBc = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&, const Eigen::VectorXcd&)>;

struct ComplexSystem {
  Index dim = 0;
  ComplexRhs f;
  ComplexBc g;
};

// The solver needs f and g on real and complex-extended states; the complex
// versions feed complex-step Jacobians.
struct System {
  Index dim = 0;
  RealRhs f;
  ComplexRhs f_complex;
  RealBc g;
  ComplexBc g_complex;

  ComplexSystem complex() const { return {dim, f_complex, g_complex}; }
};

// Builds a System from generic callables rhs(s, y) and bc(ya, yb) that accept
// Eigen vectors of double and of std::complex<double>.
template <class Rhs, class Bc>
System make_system(Index dim, Rhs rhs, Bc bc) {
  System sys;
  sys.dim = dim;
  sys.f = [rhs](double s, const Eigen::VectorXd& y) -> Eigen::VectorXd { return rhs(s, y); };
  sys.f_complex = [rhs](double s, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    return rhs(s, y);
  };
  sys.g = [bc](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> Eigen::VectorXd {
    return bc(a, b);
  };
  sys.g_complex = [bc](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) -> Eigen::VectorXcd {
    return bc(a, b);
  };
  return sys;
}

class Mesh {
 public:
  Mesh() = default;
  explicit Mesh(std::vector<double> nodes);
  static Mesh uniform(double a, double b, Index n);

  Index size() const { return static_cast<Index>(nodes_.size()); }
  Index intervals() const { return size() - 1; }
  double operator[](Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  double width(Index i) const { return (*this)[i + 1] - (*this)[i]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

  // Interval containing s; the right end point belongs to the last interval.
  Index locate(double s) const;

 private:
  std::vector<double> nodes_;
};

struct Diagnostics {
  int newton_iterations = 0;
  long rhs_evaluations = 0;
  int refinements = 0;
  double newton_residual = 0.0;  // scaled collocation residual at exit
  double bc_residual = 0.0;      // max |g| at exit
  double max_residual = 0.0;     // largest interval residual estimate
};

// Cubic Hermite weights of the interpolant at a point: the value is
//   wy0 y_i + wf0 f_i + wy1 y_{i+1} + wf1 f_{i+1}.
struct HermiteStencil {
  Index interval;
  double wy0, wf0, wy1, wf1;
};

class Solution {
 public:
  Solution() = default;
  Solution(Mesh mesh, Eigen::MatrixXd values, Eigen::MatrixXd slopes, Diagnostics diag = {});

  // Constant profile, e.g. an initial guess.
  static Solution constant(Mesh mesh, const Eigen::VectorXd& y);

  const Mesh& mesh() const { return mesh_; }
  Index dim() const { return values_.rows(); }
  // dim x nodes
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::MatrixXd& slopes() const { return slopes_; }
  const Diagnostics& diagnostics() const { return diag_; }
  Diagnostics& diagnostics() { return diag_; }

  Eigen::VectorXd value(double s) const;
  Eigen::VectorXd derivative(double s) const;
  HermiteStencil stencil(double s) const;

  struct Samples {
    Eigen::MatrixXd values;       // dim x points
    Eigen::MatrixXd derivatives;  // dim x points
  };
  Samples evaluate(std::span<const double> points) const;

  // Node-major stacking (y_0, y_1, ...), the unknown vector of the
  // collocation system.
  Eigen::VectorXd stacked() const;

 private:
  void check_point(double s) const;

  Mesh mesh_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd slopes_;
  Diagnostics diag_;
};

struct SolverOptions {
  double tol = 1e-6;          // interval residual tolerance
  double newton_tol = 1e-10;  // scaled collocation residual
  int max_newton = 50;
  double min_damping = 1.0 / 1024.0;
  Index max_nodes = 5000;
  Index initial_nodes = 21;
  int max_refinements = 30;
  bool adapt_mesh = true;
  ComplexStepConfig complex_step;

  void validate() const;
};

Solution solve(const System& sys, const Solution& guess, const SolverOptions& opts = {});
Solution solve(const System& sys, const Mesh& mesh, const Eigen::VectorXd& constant,
               const SolverOptions& opts = {});

// Per-interval residual norms of the interpolant,
//   sqrt(h * mean_k |(S'(s_k) - f(s_k, S(s_k))) / (1 + |f|)|^2),
// sampled at four Gauss points per interval.
Eigen::VectorXd residual_estimate(const System& sys, const Solution& sol, long* evals = nullptr);

// Stacked collocation residual (interval rows, then boundary rows) for node
// values Y (dim x nodes). Generic in the scalar so that parameter derivatives
// can be taken by complex step.
template <class S, class F, class G>
Vec<S> collocation_residual(const Mesh& mesh, const Mat<S>& Y, F&& f, G&& g) {
  const Index m = Y.rows();
  const Index n = Y.cols();
  Mat<S> fn(m, n);
  for (Index i = 0; i < n; ++i) fn.col(i) = f(mesh[i], Vec<S>(Y.col(i)));
  Vec<S> r(m * n);
  for (Index i = 0; i + 1 < n; ++i) {
    const double h = mesh.width(i);
    const Vec<S> ym = 0.5 * (Y.col(i) + Y.col(i + 1)) - (h / 8.0) * (fn.col(i + 1) - fn.col(i));
    const Vec<S> fm = f(mesh[i] + 0.5 * h, ym);
    r.segment(i * m, m) =
        Y.col(i + 1) - Y.col(i) - (h / 6.0) * (fn.col(i) + 4.0 * fm + fn.col(i + 1));
  }
  r.tail(m) = g(Vec<S>(Y.col(0)), Vec<S>(Y.col(n - 1)));
  return r;
}

// Newton matrix of the collocation system at Y, assembled from complex-step
// Jacobians of f at nodes and midpoints and of g at the end points.
AbdMatrixd collocation_jacobian(const System& sys, const Mesh& mesh, const Eigen::MatrixXd& Y,
                                const ComplexStepConfig& cs = {}, long* evals = nullptr);

}  // namespace spinid::bvp
