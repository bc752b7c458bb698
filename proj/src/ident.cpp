#include "spinid/ident.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>

namespace spinid {

CostGrid CostGrid::uniform(double length, int count) {
  if (count < 1) throw ValidationError("ident.grid_points", "must be positive");
  CostGrid g;
  for (int i = 1; i <= count; ++i) {
    g.nodes.push_back(i == count ? length : length * i / count);
    g.widths.push_back(g.nodes.back() - (i == 1 ? 0.0 : g.nodes[g.nodes.size() - 2]));
  }
  return g;
}

void CostGrid::validate(double length) const {
  if (nodes.size() != widths.size() || nodes.empty()) {
    throw ValidationError("ident.grid", "nodes and widths must be non-empty and match");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(nodes[i] >= 0.0 && nodes[i] <= length)) throw ValidationError("ident.grid", "node outside [0, L]");
    if (!(widths[i] > 0.0)) throw ValidationError("ident.grid", "widths must be positive");
  }
}

std::vector<IdentExperiment> prepare_experiments(const std::vector<FiberModel>& models,
                                                 const std::vector<MeasurementSeries>& series,
                                                 int grid_points) {
  std::vector<IdentExperiment> out;
  for (const FiberModel& model : models) {
    const auto it = std::find_if(series.begin(), series.end(),
                                 [&](const MeasurementSeries& s) { return s.experiment == model.id(); });
    if (it == series.end()) {
      throw ValidationError("measurements." + model.id(), "no measurements for this experiment");
    }
    const MeasurementSeries dimless = to_dimensionless(*it, model.references());
    const AnsatzFit fit = fit_ansatz(dimless, model.length());
    FiberModel prepared = model.with_outlet_diameter(fit.diameter(model.length()));
    out.push_back({std::move(prepared), fit, CostGrid::uniform(model.length(), grid_points)});
  }
  return out;
}

Eigen::VectorXd residual_vector(const IdentExperiment& exp, const bvp::Solution& sol) {
  const auto& g = exp.grid;
  Eigen::VectorXd F(static_cast<Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Eigen::VectorXd y = sol.value(g.nodes[i]);
    F(static_cast<Index>(i)) =
        node_residual<double>(exp.model, g.widths[i], exp.fit.diameter(g.nodes[i]), y);
  }
  return F;
}

namespace {

CarreauParams<Complex> perturbed(const Params& p, int k, double h) {
  CarreauParams<Complex> pc{Complex(p.n), Complex(p.kappa)};
  if (k == 0) pc.n += Complex(0.0, h);
  else pc.kappa += Complex(0.0, h);
  return pc;
}

}  // namespace

Eigen::MatrixXd state_sensitivity(const FiberModel& model, const Params& p,
                                  const bvp::Solution& sol, const ComplexStepConfig& cs) {
  cs.validate();
  const bvp::Mesh& mesh = sol.mesh();
  const Eigen::MatrixXd& Y = sol.values();
  const AbdLud lu(bvp::collocation_jacobian(model.system(p, 1.0), mesh, Y, cs));
  const Eigen::MatrixXcd Yc = Y.cast<Complex>();
  Eigen::MatrixXd dSdp(Y.size(), 2);
  for (int k = 0; k < 2; ++k) {
    const bvp::ComplexSystem sys = model.complex_system(perturbed(p, k, cs.h), 1.0);
    const Eigen::VectorXcd r = bvp::collocation_residual<Complex>(mesh, Yc, sys.f, sys.g);
    dSdp.col(k) = r.imag() / cs.h;
  }
  return -lu.solve(dSdp);
}

Eigen::MatrixXd residual_sensitivity(const IdentExperiment& exp, const Params& p,
                                     const bvp::Solution& sol, const Eigen::MatrixXd& state_sens,
                                     const ComplexStepConfig& cs) {
  const auto& g = exp.grid;
  const bvp::Mesh& mesh = sol.mesh();
  const Eigen::MatrixXd& Y = sol.values();
  const Index m = Y.rows();
  Eigen::MatrixXd G(static_cast<Index>(g.size()), 2);
  for (int k = 0; k < 2; ++k) {
    const bvp::ComplexSystem sys = exp.model.complex_system(perturbed(p, k, cs.h), 1.0);
    auto nodal = [&](Index j) {
      const Eigen::VectorXd dy = state_sens.col(k).segment(j * m, m);
      const Eigen::VectorXcd yc = Y.col(j).cast<Complex>() + Complex(0.0, cs.h) * dy.cast<Complex>();
      const Eigen::VectorXd df = sys.f(mesh[j], yc).imag() / cs.h;
      return std::pair{dy, df};
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bvp::HermiteStencil w = sol.stencil(g.nodes[i]);
      const auto [dy0, df0] = nodal(w.interval);
      const auto [dy1, df1] = nodal(w.interval + 1);
      const Eigen::VectorXd dy = w.wy0 * dy0 + w.wf0 * df0 + w.wy1 * dy1 + w.wf1 * df1;
      const Eigen::VectorXcd y =
          sol.value(g.nodes[i]).cast<Complex>() + Complex(0.0, cs.h) * dy.cast<Complex>();
      G(static_cast<Index>(i), k) =
          node_residual<Complex>(exp.model, g.widths[i], exp.fit.diameter(g.nodes[i]), y).imag() /
          cs.h;
    }
  }
  return G;
}

CostEvaluator::CostEvaluator(std::vector<IdentExperiment> experiments, EvaluatorOptions opts)
    : experiments_(std::move(experiments)), opts_(std::move(opts)) {
  if (experiments_.empty()) throw ValidationError("experiments", "at least one is required");
  if (opts_.threads < 1) throw ValidationError("threads", "must be at least 1");
  opts_.continuation.validate();
  opts_.solver.validate();
  for (const auto& e : experiments_) e.grid.validate(e.model.length());
}

namespace {

struct ExperimentEvaluation {
  bool ok = false;
  std::string failure;
  bvp::Solution solution;
  Eigen::VectorXd F;
  Eigen::MatrixXd G;
  int steps = 0;
};

ExperimentEvaluation evaluate_one(const IdentExperiment& exp, const Params& p,
                                  const bvp::Solution* warm, bool derivatives,
                                  const EvaluatorOptions& opts) {
  ExperimentEvaluation out;
  try {
    std::optional<bvp::Solution> start;
    if (warm) start = *warm;
    ContinuationResult sim = simulate(exp.model, p, start, opts.continuation, opts.solver);
    out.steps = static_cast<int>(sim.trace.accepted().size());
    out.solution = std::move(sim.solution);
    out.F = residual_vector(exp, out.solution);
    if (derivatives) {
      const Eigen::MatrixXd dy =
          state_sensitivity(exp.model, p, out.solution, opts.solver.complex_step);
      out.G = residual_sensitivity(exp, p, out.solution, dy, opts.solver.complex_step);
    }
    out.ok = out.F.allFinite() && (!derivatives || out.G.allFinite());
    if (!out.ok) out.failure = exp.model.id() + ": non-finite residual";
  } catch (const SolverError& e) {
    out.failure = exp.model.id() + ": " + e.what();
  } catch (const DomainError& e) {
    out.failure = exp.model.id() + ": " + e.what();
  }
  return out;
}

}  // namespace

CostEvaluation CostEvaluator::evaluate(const Params& p, const std::vector<bvp::Solution>* warm,
                                       bool derivatives) const {
  const std::size_t count = experiments_.size();
  if (warm && warm->size() != count) throw Error("warm start does not match the experiment count");
  std::vector<ExperimentEvaluation> parts(count);
  auto run = [&](std::size_t k) {
    parts[k] = evaluate_one(experiments_[k], p, warm ? &(*warm)[k] : nullptr, derivatives, opts_);
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(opts_.threads), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) run(k);
  } else {
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w) {
      tasks.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t k = w; k < count; k += workers) run(k);
      }));
    }
    for (auto& t : tasks) t.get();
  }

  CostEvaluation out;
  out.p = p;
  Index rows = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (!parts[k].ok) {
      out.failure = parts[k].failure;
      return out;
    }
    rows += parts[k].F.size();
  }
  out.ok = true;
  out.F.resize(rows);
  if (derivatives) out.G.resize(rows, 2);
  Index r = 0;
  for (auto& part : parts) {
    out.F.segment(r, part.F.size()) = part.F;
    if (derivatives) out.G.middleRows(r, part.F.size()) = part.G;
    r += part.F.size();
    out.continuation_steps += part.steps;
    out.solutions.push_back(std::move(part.solution));
  }
  out.J = out.F.squaredNorm();
  if (derivatives) {
    out.has_derivatives = true;
    out.gradient = 2.0 * out.G.transpose() * out.F;
    out.hessian = 2.0 * out.G.transpose() * out.G;
  }
  return out;
}

void TrustRegionSettings::validate() const {
  if (!(initial_radius > 0.0 && initial_radius <= max_radius)) {
    throw ValidationError("trust_region.initial_radius", "must lie in (0, max_radius]");
  }
  if (!(gradient_tol >= 0.0)) throw ValidationError("trust_region.gradient_tol", "must be >= 0");
  if (!(step_tol >= 0.0)) throw ValidationError("trust_region.step_tol", "must be >= 0");
  if (!(reduction_tol >= 0.0)) throw ValidationError("trust_region.reduction_tol", "must be >= 0");
  if (max_iterations < 0) throw ValidationError("trust_region.max_iterations", "must be >= 0");
  if (!(bounds.n_lo < bounds.n_hi && bounds.kappa_lo < bounds.kappa_hi)) {
    throw ValidationError("trust_region.bounds", "empty parameter box");
  }
}

Eigen::VectorXd trust_region_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                                  double radius) {
  const Index dim = g.size();
  if (g.norm() == 0.0) return Eigen::VectorXd::Zero(dim);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (H + H.transpose()));
  const Eigen::VectorXd lam = eig.eigenvalues();
  const Eigen::MatrixXd Q = eig.eigenvectors();
  const Eigen::VectorXd a = Q.transpose() * g;
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double tiny = 1e-13 * scale;
  const double a_tiny = 1e-13 * g.norm();

  auto step = [&](double mu) {
    Eigen::VectorXd c(dim);
    for (Index i = 0; i < dim; ++i) {
      const double den = lam(i) + mu;
      c(i) = (std::abs(den) <= tiny && std::abs(a(i)) <= a_tiny) ? 0.0 : -a(i) / den;
    }
    return c;
  };

  // Interior (minimum-norm) Newton step when the model is convex enough.
  const double lmin = lam.minCoeff();
  if (lmin >= -tiny) {
    bool bounded = true;
    for (Index i = 0; i < dim; ++i) {
      if (lam(i) <= tiny && std::abs(a(i)) > a_tiny) bounded = false;
    }
    if (bounded) {
      const Eigen::VectorXd c = step(0.0);
      if (c.norm() <= radius) return Q * c;
    }
  }

  // Boundary solution: |s(mu)| = radius with mu > max(0, -lmin).
  const double lo0 = std::max(0.0, -lmin);
  auto norm_at = [&](double mu) {
    double s = 0.0;
    for (Index i = 0; i < dim; ++i) {
      const double den = lam(i) + mu;
      if (den > 0.0) s += (a(i) / den) * (a(i) / den);
      else if (std::abs(a(i)) > a_tiny) return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(s);
  };
  // Hard case: the component along the lowest mode vanishes and the step
  // stays inside; complete it along that mode.
  if (norm_at(lo0 + tiny) <= radius) {
    Eigen::VectorXd c(dim);
    for (Index i = 0; i < dim; ++i) {
      const double den = lam(i) + lo0;
      c(i) = den > tiny ? -a(i) / den : 0.0;
    }
    Index low = 0;
    lam.minCoeff(&low);
    const double tau = std::sqrt(std::max(0.0, radius * radius - c.squaredNorm()));
    c(low) += tau;
    return Q * c;
  }
  double lo = lo0;
  double hi = lo0 + g.norm() / radius + scale;
  while (norm_at(hi) > radius) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (norm_at(mid) > radius) lo = mid;
    else hi = mid;
  }
  return Q * step(hi);
}

namespace {

Eigen::Vector2d as_vec(const Params& p) { return {p.n, p.kappa}; }
Params as_params(const Eigen::Vector2d& v) { return {v(0), v(1)}; }

// Gradient with the components that push against an active bound removed.
Eigen::Vector2d projected_gradient(const Eigen::Vector2d& g, const Eigen::Vector2d& x,
                                   const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
  Eigen::Vector2d out = g;
  for (int i = 0; i < 2; ++i) {
    if ((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0)) out(i) = 0.0;
  }
  return out;
}

}  // namespace

IdentifyResult identify(const CostEvaluator& evaluator, const Params& start,
                        const TrustRegionSettings& settings) {
  using Clock = std::chrono::steady_clock;
  settings.validate();
  if (!settings.bounds.contains(start)) {
    throw ValidationError("start", "start point outside the parameter domain");
  }
  const Eigen::Vector2d lo(settings.bounds.n_lo, settings.bounds.kappa_lo);
  const Eigen::Vector2d hi(settings.bounds.n_hi, settings.bounds.kappa_hi);

  auto t0 = Clock::now();
  CostEvaluation cur = evaluator.evaluate(start, nullptr, true);
  if (!cur.ok) throw SolverError("cost evaluation failed at the start point: " + cur.failure);

  IdentifyResult res;
  double radius = settings.initial_radius;
  auto record = [&](int iteration, bool accepted, double ratio) {
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    t0 = Clock::now();
    const Eigen::Vector2d pg = projected_gradient(cur.gradient, as_vec(cur.p), lo, hi);
    res.history.push_back({iteration, cur.p, cur.J, pg.norm(), radius, secs, accepted, ratio});
  };
  record(0, true, 0.0);

  int it = 0;
  for (;; ++it) {
    const Eigen::Vector2d x = as_vec(cur.p);
    const Eigen::Vector2d g = cur.gradient;
    const Eigen::Matrix2d H = cur.hessian;
    if (projected_gradient(g, x, lo, hi).norm() <= settings.gradient_tol) {
      res.converged = true;
      res.reason = "gradient tolerance";
      break;
    }
    if (it >= settings.max_iterations) {
      res.reason = "iteration limit";
      break;
    }

    // Variables pinned at a bound by the gradient stay fixed; the exact
    // subproblem is solved in the free ones and the result projected.
    std::vector<Index> free;
    for (Index i = 0; i < 2; ++i) {
      if (!((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0))) free.push_back(i);
    }
    Eigen::Vector2d s = Eigen::Vector2d::Zero();
    if (!free.empty()) {
      const Index nf = static_cast<Index>(free.size());
      Eigen::VectorXd gf(nf);
      Eigen::MatrixXd Hf(nf, nf);
      for (Index a = 0; a < nf; ++a) {
        gf(a) = g(free[a]);
        for (Index b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
      }
      const Eigen::VectorXd sf = trust_region_step(gf, Hf, radius);
      for (Index a = 0; a < nf; ++a) s(free[a]) = sf(a);
    }
    Eigen::Vector2d trial_x = (x + s).cwiseMax(lo).cwiseMin(hi);
    s = trial_x - x;
    double predicted = -(g.dot(s) + 0.5 * s.dot(H * s));
    if (!(predicted > 0.0)) {
      // Projection spoiled the model decrease: fall back to the projected
      // Cauchy point along -g.
      const Eigen::Vector2d dir = -projected_gradient(g, x, lo, hi);
      const double curv = dir.dot(H * dir);
      double t = radius / dir.norm();
      if (curv > 0.0) t = std::min(t, dir.squaredNorm() / curv);
      trial_x = (x + t * dir).cwiseMax(lo).cwiseMin(hi);
      s = trial_x - x;
      predicted = -(g.dot(s) + 0.5 * s.dot(H * s));
    }
    if (s.norm() <= settings.step_tol || !(predicted > 0.0)) {
      res.converged = true;
      res.reason = "step tolerance";
      break;
    }
    if (predicted <= settings.reduction_tol * cur.J) {
      res.converged = true;
      res.reason = "predicted reduction below tolerance";
      break;
    }

    CostEvaluation trial = evaluator.evaluate(as_params(trial_x), &cur.solutions, true);
    double ratio = 0.0;
    bool accepted = false;
    if (trial.ok) {
      const double actual = cur.J - trial.J;
      ratio = actual / predicted;
      if (ratio > 0.1 && actual > 0.0) {
        accepted = true;
        cur = std::move(trial);
      }
      if (ratio > 0.75) radius = std::min(2.0 * radius, settings.max_radius);
      else if (ratio < 0.1) radius *= 0.25;
    } else {
      radius *= 0.25;
    }
    record(it + 1, accepted, ratio);
    if (radius <= settings.step_tol) {
      res.converged = true;
      res.reason = "trust region collapsed";
      ++it;
      break;
    }
  }
  res.p = cur.p;
  res.J = cur.J;
  res.iterations = it;
  res.final_evaluation = std::move(cur);
  return res;
}

void write_iterates_csv(std::ostream& os, const std::vector<IterateRecord>& history) {
  const auto old = os.precision(17);
  os << "iteration,n,kappa,J,grad_norm,radius,seconds,accepted,ratio\n";
  for (const auto& r : history) {
    os << r.iteration << ',' << r.p.n << ',' << r.p.kappa << ',' << r.J << ',' << r.gradient_norm
       << ',' << r.radius << ',' << r.seconds << ',' << (r.accepted ? 1 : 0) << ',' << r.ratio
       << '\n';
  }
  os.precision(old);
}

void HeuristicSettings::validate() const {
  if (!(kappa_l < kappa_u)) throw ValidationError("heuristic.kappa_l", "must be below kappa_u");
  if (!(n_init > 0.0 && n_init < 1.0)) throw ValidationError("heuristic.n_init", "must lie in (0, 1)");
  if (!(kappa_step > 0.0)) throw ValidationError("heuristic.kappa_step", "must be positive");
  if (!(rel_dif > 0.0)) throw ValidationError("heuristic.rel_dif", "must be positive");
}

namespace {

double relative_difference(double j1, double j2) {
  if (j1 == j2) return 0.0;
  return std::abs((j1 - j2) / j1);
}

}  // namespace

HeuristicResult start_heuristic(const CostEvaluator& evaluator, const HeuristicSettings& settings) {
  settings.validate();
  HeuristicResult out;
  double kappa = settings.kappa_u;
  const CostEvaluation newtonian = evaluator.evaluate({1.0, kappa}, nullptr, false);
  if (!newtonian.ok) {
    throw SolverError("Newtonian cost evaluation failed: " + newtonian.failure);
  }
  out.J_newtonian = newtonian.J;
  const auto* warm = &newtonian.solutions;
  CostEvaluation j2 = evaluator.evaluate({settings.n_init, kappa}, warm, false);
  if (!j2.ok) {
    out.p = {settings.n_init, kappa};
    out.flagged = true;
    return out;
  }
  out.sweep.emplace_back(kappa, j2.J);
  double rel = relative_difference(newtonian.J, j2.J);
  while (rel < settings.rel_dif && kappa > settings.kappa_l) {
    const double next = kappa - settings.kappa_step;
    j2 = evaluator.evaluate({settings.n_init, next}, warm, false);
    if (!j2.ok) {
      out.flagged = true;
      break;
    }
    kappa = next;
    out.sweep.emplace_back(kappa, j2.J);
    rel = relative_difference(newtonian.J, j2.J);
  }
  out.p = {settings.n_init, kappa};
  return out;
}

ScanResult scan(const CostEvaluator& evaluator, std::pair<double, double> n_range,
                std::pair<double, double> kappa_range, int n_points, int kappa_points) {
  const ParameterDomain box;
  if (n_points < 1 || kappa_points < 1) throw ValidationError("resolution", "must be positive");
  if (!box.contains({n_range.first, kappa_range.first}) ||
      !box.contains({n_range.second, kappa_range.second}) || n_range.first > n_range.second ||
      kappa_range.first > kappa_range.second) {
    throw ValidationError("scan.range", "ranges must be ordered and inside the parameter domain");
  }
  auto grid = [](std::pair<double, double> r, int count) {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) {
      v.push_back(count == 1 ? r.first : r.first + (r.second - r.first) * i / (count - 1));
    }
    return v;
  };
  ScanResult out{grid(n_range, n_points), grid(kappa_range, kappa_points),
                 Eigen::MatrixXd(n_points, kappa_points)};
  // Raster order; each row starts from the first point of the previous row.
  std::optional<std::vector<bvp::Solution>> row_start;
  for (int i = out.n_values.size() - 1; i >= 0; --i) {
    std::optional<std::vector<bvp::Solution>> warm = row_start;
    for (int j = 0; j < kappa_points; ++j) {
      const CostEvaluation e =
          evaluator.evaluate({out.n_values[i], out.kappa_values[j]}, warm ? &*warm : nullptr, false);
      if (e.ok) {
        out.J(i, j) = e.J;
        warm = e.solutions;
        if (j == 0) row_start = e.solutions;
      } else {
        out.J(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return out;
}

void write_scan_csv(std::ostream& os, const ScanResult& result) {
  const auto old = os.precision(17);
  os << "n,kappa,J,status\n";
  for (std::size_t i = 0; i < result.n_values.size(); ++i) {
    for (std::size_t j = 0; j < result.kappa_values.size(); ++j) {
      const double J = result.J(static_cast<Index>(i), static_cast<Index>(j));
      os << result.n_values[i] << ',' << result.kappa_values[j] << ',';
      if (std::isnan(J)) os << "nan,failed\n";
      else os << J << ",ok\n";
    }
  }
  os.precision(old);
}

}  // namespace spinid
