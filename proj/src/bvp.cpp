#include "spinid/bvp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spinid::bvp {

Mesh::Mesh(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 3) throw ValidationError("mesh", "needs at least 3 nodes");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i + 1] > nodes_[i]) || !std::isfinite(nodes_[i + 1])) {
      throw ValidationError("mesh", "nodes must be finite and strictly increasing");
    }
  }
}

Mesh Mesh::uniform(double a, double b, Index n) {
  if (n < 3) throw ValidationError("mesh", "needs at least 3 nodes");
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  nodes.back() = b;
  return Mesh(std::move(nodes));
}

Index Mesh::locate(double s) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
  Index i = static_cast<Index>(it - nodes_.begin()) - 1;
  return std::clamp<Index>(i, 0, intervals() - 1);
}

Solution::Solution(Mesh mesh, Eigen::MatrixXd values, Eigen::MatrixXd slopes, Diagnostics diag)
    : mesh_(std::move(mesh)), values_(std::move(values)), slopes_(std::move(slopes)), diag_(diag) {
  if (values_.cols() != mesh_.size() || slopes_.cols() != mesh_.size() ||
      slopes_.rows() != values_.rows()) {
    throw Error("Solution: value/slope arrays do not match the mesh");
  }
}

Solution Solution::constant(Mesh mesh, const Eigen::VectorXd& y) {
  const Index n = mesh.size();
  Eigen::MatrixXd values = y.replicate(1, n);
  Eigen::MatrixXd slopes = Eigen::MatrixXd::Zero(y.size(), n);
  return Solution(std::move(mesh), std::move(values), std::move(slopes));
}

void Solution::check_point(double s) const {
  const double span = mesh_.back() - mesh_.front();
  const double slack = 1e-12 * std::max(1.0, span);
  if (!(s >= mesh_.front() - slack && s <= mesh_.back() + slack)) {
    throw ValidationError("s", "point " + std::to_string(s) + " outside the solution interval");
  }
}

HermiteStencil Solution::stencil(double s) const {
  check_point(s);
  const Index i = mesh_.locate(s);
  const double h = mesh_.width(i);
  const double t = (s - mesh_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {i, 2 * t3 - 3 * t2 + 1, h * (t3 - 2 * t2 + t), -2 * t3 + 3 * t2, h * (t3 - t2)};
}

Eigen::VectorXd Solution::value(double s) const {
  const HermiteStencil w = stencil(s);
  const Index i = w.interval;
  return w.wy0 * values_.col(i) + w.wf0 * slopes_.col(i) + w.wy1 * values_.col(i + 1) +
         w.wf1 * slopes_.col(i + 1);
}

Eigen::VectorXd Solution::derivative(double s) const {
  check_point(s);
  const Index i = mesh_.locate(s);
  const double h = mesh_.width(i);
  const double t = (s - mesh_[i]) / h;
  const double t2 = t * t;
  return (6 * t2 - 6 * t) / h * values_.col(i) + (3 * t2 - 4 * t + 1) * slopes_.col(i) +
         (-6 * t2 + 6 * t) / h * values_.col(i + 1) + (3 * t2 - 2 * t) * slopes_.col(i + 1);
}

Solution::Samples Solution::evaluate(std::span<const double> points) const {
  Samples out{Eigen::MatrixXd(dim(), static_cast<Index>(points.size())),
              Eigen::MatrixXd(dim(), static_cast<Index>(points.size()))};
  for (std::size_t k = 0; k < points.size(); ++k) {
    out.values.col(static_cast<Index>(k)) = value(points[k]);
    out.derivatives.col(static_cast<Index>(k)) = derivative(points[k]);
  }
  return out;
}

Eigen::VectorXd Solution::stacked() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), values_.size());
}

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw ValidationError("solver.tol", "must be positive");
  if (!(newton_tol > 0.0)) throw ValidationError("solver.newton_tol", "must be positive");
  if (max_newton < 1) throw ValidationError("solver.max_newton", "must be at least 1");
  if (!(min_damping > 0.0 && min_damping <= 1.0)) {
    throw ValidationError("solver.min_damping", "must lie in (0, 1]");
  }
  if (max_nodes < 3) throw ValidationError("solver.max_nodes", "must be at least 3");
  if (initial_nodes < 3) throw ValidationError("solver.initial_nodes", "must be at least 3");
  complex_step.validate();
}

namespace {

// Gauss-Legendre nodes and weights on [0, 1].
constexpr double kGaussT[4] = {0.5 - 0.4305681557970263, 0.5 - 0.1699905217924281,
                               0.5 + 0.1699905217924281, 0.5 + 0.4305681557970263};
constexpr double kGaussW[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                               0.1739274225687269};

struct CountingSystem {
  const System& sys;
  long evals = 0;

  Eigen::VectorXd f(double s, const Eigen::VectorXd& y) {
    ++evals;
    Eigen::VectorXd out = sys.f(s, y);
    if (!out.allFinite()) throw DomainError("right-hand side is not finite");
    return out;
  }
};

struct Residual {
  Eigen::VectorXd r;
  Eigen::MatrixXd f_nodes;
};

Residual evaluate_residual(CountingSystem& cs, const Mesh& mesh, const Eigen::MatrixXd& Y) {
  const Index m = Y.rows();
  const Index n = Y.cols();
  Residual out{Eigen::VectorXd(m * n), Eigen::MatrixXd(m, n)};
  for (Index i = 0; i < n; ++i) out.f_nodes.col(i) = cs.f(mesh[i], Y.col(i));
  for (Index i = 0; i + 1 < n; ++i) {
    const double h = mesh.width(i);
    const Eigen::VectorXd ym =
        0.5 * (Y.col(i) + Y.col(i + 1)) - (h / 8.0) * (out.f_nodes.col(i + 1) - out.f_nodes.col(i));
    const Eigen::VectorXd fm = cs.f(mesh[i] + 0.5 * h, ym);
    out.r.segment(i * m, m) = Y.col(i + 1) - Y.col(i) -
                              (h / 6.0) * (out.f_nodes.col(i) + 4.0 * fm + out.f_nodes.col(i + 1));
  }
  out.r.tail(m) = cs.sys.g(Y.col(0), Y.col(n - 1));
  if (!out.r.allFinite()) throw DomainError("collocation residual is not finite");
  return out;
}

Eigen::MatrixXd rhs_jacobian(CountingSystem& cs, double s, const Eigen::VectorXd& y,
                             const ComplexStepConfig& cfg) {
  cs.evals += y.size();
  Eigen::MatrixXd jac = complex_step_jacobian(
      [&](const Eigen::VectorXcd& yc) { return cs.sys.f_complex(s, yc); }, y, cfg);
  if (!jac.allFinite()) throw DomainError("right-hand side Jacobian is not finite");
  return jac;
}

AbdMatrixd assemble_jacobian(CountingSystem& cs, const Mesh& mesh, const Eigen::MatrixXd& Y,
                             const Eigen::MatrixXd& f_nodes, const ComplexStepConfig& cfg) {
  const Index m = Y.rows();
  const Index n = Y.cols();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  AbdMatrixd a(m, n);
  std::vector<Eigen::MatrixXd> jn(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) jn[i] = rhs_jacobian(cs, mesh[i], Y.col(i), cfg);
  for (Index i = 0; i + 1 < n; ++i) {
    const double h = mesh.width(i);
    const Eigen::VectorXd ym =
        0.5 * (Y.col(i) + Y.col(i + 1)) - (h / 8.0) * (f_nodes.col(i + 1) - f_nodes.col(i));
    const Eigen::MatrixXd jm = rhs_jacobian(cs, mesh[i] + 0.5 * h, ym, cfg);
    a.left[i] = -I - (h / 6.0) * (jn[i] + 4.0 * jm * (0.5 * I + (h / 8.0) * jn[i]));
    a.right[i] = I - (h / 6.0) * (jn[i + 1] + 4.0 * jm * (0.5 * I - (h / 8.0) * jn[i + 1]));
  }
  Eigen::VectorXd ends(2 * m);
  ends << Y.col(0), Y.col(n - 1);
  const Eigen::MatrixXd jg = complex_step_jacobian(
      [&](const Eigen::VectorXcd& e) { return cs.sys.g_complex(e.head(m), e.tail(m)); }, ends, cfg);
  if (!jg.allFinite()) throw DomainError("boundary Jacobian is not finite");
  a.bc_left = jg.leftCols(m);
  a.bc_right = jg.rightCols(m);
  return a;
}

// Interval rows relative to max(1, |y|); boundary rows absolute.
double scaled_residual(const Eigen::VectorXd& r, const Eigen::MatrixXd& Y) {
  const Index m = Y.rows();
  const Index n = Y.cols();
  double out = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double w = std::max({1.0, std::abs(Y(j, i)), std::abs(Y(j, i + 1))});
      out = std::max(out, std::abs(r(i * m + j)) / w);
    }
  }
  return std::max(out, r.tail(m).cwiseAbs().maxCoeff());
}

double scaled_step(const Eigen::MatrixXd& dY, const Eigen::MatrixXd& Y) {
  const Eigen::ArrayXXd w = Y.array().abs().max(1.0);
  return std::sqrt((dY.array() / w).square().mean());
}

double scaled_step_max(const Eigen::MatrixXd& dY, const Eigen::MatrixXd& Y) {
  const Eigen::ArrayXXd w = Y.array().abs().max(1.0);
  return (dY.array() / w).abs().maxCoeff();
}

Eigen::MatrixXd reshape(const Eigen::VectorXd& v, Index m, Index n) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, n);
}

struct NewtonOutcome {
  Eigen::MatrixXd Y;
  Eigen::MatrixXd f_nodes;
  int iterations = 0;
  double residual = 0.0;
  double bc_residual = 0.0;
};

NewtonOutcome newton(CountingSystem& cs, const Mesh& mesh, Eigen::MatrixXd Y,
                     const SolverOptions& opts) {
  const Index m = Y.rows();
  const Index n = Y.cols();
  Residual res = evaluate_residual(cs, mesh, Y);
  for (int it = 0;; ++it) {
    const double norm = scaled_residual(res.r, Y);
    if (norm <= opts.newton_tol) {
      return {std::move(Y), std::move(res.f_nodes), it, norm, res.r.tail(m).cwiseAbs().maxCoeff()};
    }
    if (it >= opts.max_newton) {
      throw NewtonDivergedError("Newton iteration limit reached (scaled residual " +
                                std::to_string(norm) + ")");
    }
    const AbdLud lu(assemble_jacobian(cs, mesh, Y, res.f_nodes, opts.complex_step));
    const Eigen::MatrixXd dY = reshape(-lu.solve(res.r), m, n);
    const double step = scaled_step(dY, Y);
    if (!std::isfinite(step)) throw NewtonDivergedError("Newton correction is not finite");

    // Below round-off, the correction cannot be tested for contraction.
    if (scaled_step_max(dY, Y) < 1e-13) {
      Y += dY;
      res = evaluate_residual(cs, mesh, Y);
      const double final_norm = scaled_residual(res.r, Y);
      return {std::move(Y), std::move(res.f_nodes), it + 1, final_norm,
              res.r.tail(m).cwiseAbs().maxCoeff()};
    }

    // Natural monotonicity test: the simplified Newton correction at the
    // trial point must contract relative to the full correction.
    double lambda = 1.0;
    for (;;) {
      Eigen::MatrixXd trial = Y + lambda * dY;
      bool ok = false;
      try {
        Residual tr = evaluate_residual(cs, mesh, trial);
        const Eigen::MatrixXd dbar = reshape(-lu.solve(tr.r), m, n);
        const double bar = scaled_step(dbar, trial);
        if (std::isfinite(bar) && (bar <= (1.0 - lambda / 4.0) * step || step < 1e-10)) {
          Y = std::move(trial);
          res = std::move(tr);
          ok = true;
        }
      } catch (const DomainError&) {
      }
      if (ok) break;
      lambda *= 0.5;
      if (lambda < opts.min_damping) {
        throw NewtonDivergedError("Newton damping underflow at iteration " + std::to_string(it));
      }
    }
  }
}

}  // namespace

AbdMatrixd collocation_jacobian(const System& sys, const Mesh& mesh, const Eigen::MatrixXd& Y,
                                const ComplexStepConfig& cs_cfg, long* evals) {
  CountingSystem cs{sys};
  Eigen::MatrixXd f_nodes(Y.rows(), Y.cols());
  for (Index i = 0; i < Y.cols(); ++i) f_nodes.col(i) = cs.f(mesh[i], Y.col(i));
  AbdMatrixd a = assemble_jacobian(cs, mesh, Y, f_nodes, cs_cfg);
  if (evals) *evals += cs.evals;
  return a;
}

Eigen::VectorXd residual_estimate(const System& sys, const Solution& sol, long* evals) {
  CountingSystem cs{sys};
  const Mesh& mesh = sol.mesh();
  Eigen::VectorXd out(mesh.intervals());
  for (Index i = 0; i < mesh.intervals(); ++i) {
    const double h = mesh.width(i);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double s = mesh[i] + kGaussT[k] * h;
      const Eigen::VectorXd y = sol.value(s);
      const Eigen::VectorXd f = cs.f(s, y);
      const Eigen::VectorXd r = (sol.derivative(s) - f).array() / (1.0 + f.array().abs());
      acc += kGaussW[k] * r.squaredNorm();
    }
    out(i) = std::sqrt(h * acc);
  }
  if (evals) *evals += cs.evals;
  return out;
}

Solution solve(const System& sys, const Solution& guess, const SolverOptions& opts) {
  opts.validate();
  if (guess.dim() != sys.dim) throw Error("bvp::solve: guess dimension does not match system");
  CountingSystem cs{sys};
  Diagnostics diag;
  Mesh mesh = guess.mesh();
  Eigen::MatrixXd Y = guess.values();
  for (int pass = 0;; ++pass) {
    NewtonOutcome nt = newton(cs, mesh, std::move(Y), opts);
    diag.newton_iterations += nt.iterations;
    diag.newton_residual = nt.residual;
    diag.bc_residual = nt.bc_residual;
    Solution sol(mesh, std::move(nt.Y), std::move(nt.f_nodes));
    const Eigen::VectorXd res = residual_estimate(sys, sol, &cs.evals);
    diag.max_residual = res.maxCoeff();
    if (!std::isfinite(diag.max_residual)) throw DomainError("interpolant residual is not finite");
    if (!opts.adapt_mesh || diag.max_residual <= opts.tol) {
      diag.refinements = pass;
      diag.rhs_evaluations = cs.evals;
      sol.diagnostics() = diag;
      return sol;
    }
    if (pass >= opts.max_refinements) {
      throw MeshLimitError("mesh refinement pass limit reached");
    }
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(2 * mesh.size()));
    for (Index i = 0; i < mesh.intervals(); ++i) {
      nodes.push_back(mesh[i]);
      if (res(i) > opts.tol) nodes.push_back(mesh[i] + 0.5 * mesh.width(i));
    }
    nodes.push_back(mesh.back());
    if (static_cast<Index>(nodes.size()) > opts.max_nodes) {
      throw MeshLimitError("mesh would exceed " + std::to_string(opts.max_nodes) + " nodes");
    }
    Mesh refined(std::move(nodes));
    Y.resize(sys.dim, refined.size());
    for (Index i = 0; i < refined.size(); ++i) Y.col(i) = sol.value(refined[i]);
    mesh = std::move(refined);
  }
}

Solution solve(const System& sys, const Mesh& mesh, const Eigen::VectorXd& constant,
               const SolverOptions& opts) {
  return solve(sys, Solution::constant(mesh, constant), opts);
}

}  // namespace spinid::bvp
