#include "spinid/data.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "spinid/spinmodel.hpp"

namespace spinid {

void MeasurementSeries::validate(double length) const {
  const std::string field = "measurements." + experiment;
  if (positions.size() != diameters.size()) {
    throw ValidationError(field, "position and diameter counts differ");
  }
  if (size() < 4) {
    throw ValidationError(field, "needs at least 4 points, got " + std::to_string(size()));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!std::isfinite(positions[i]) || positions[i] < 0.0 || positions[i] > length * (1.0 + 1e-9)) {
      throw ValidationError(field, "position " + std::to_string(positions[i]) +
                                       " outside the spin line");
    }
    if (i > 0 && !(positions[i] > positions[i - 1])) {
      throw ValidationError(field, "positions must be strictly increasing (point " +
                                       std::to_string(i) + ")");
    }
    if (!(diameters[i] > 0.0) || !std::isfinite(diameters[i])) {
      throw ValidationError(field, "diameter at point " + std::to_string(i) + " must be positive");
    }
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, int line) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("measurements:" + std::to_string(line),
                          "'" + cell + "' is not a number");
  }
  return v;
}

}  // namespace

std::vector<MeasurementSeries> load_measurements(std::istream& in) {
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<MeasurementSeries> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!header) {
      if (cells != std::vector<std::string>{"experiment", "position_m", "diameter_m"}) {
        throw ValidationError("measurements:" + std::to_string(lineno),
                              "expected header experiment,position_m,diameter_m");
      }
      header = true;
      continue;
    }
    if (cells.size() != 3 || cells[0].empty()) {
      throw ValidationError("measurements:" + std::to_string(lineno), "malformed row");
    }
    auto [it, inserted] = index.try_emplace(cells[0], out.size());
    if (inserted) out.push_back(MeasurementSeries{cells[0], {}, {}, {}, {}});
    MeasurementSeries& s = out[it->second];
    s.positions.push_back(parse_number(cells[1], lineno));
    s.diameters.push_back(parse_number(cells[2], lineno));
  }
  if (!header) throw ValidationError("measurements", "file is empty");
  if (out.empty()) throw ValidationError("measurements", "no data rows");
  for (const auto& s : out) s.validate();
  return out;
}

std::vector<MeasurementSeries> load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("measurements", "cannot open " + path.string());
  return load_measurements(in);
}

void save_measurements(std::ostream& out, const std::vector<MeasurementSeries>& series) {
  const auto old = out.precision(17);
  out << "experiment,position_m,diameter_m\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.experiment << ',' << s.positions[i] << ',' << s.diameters[i] << '\n';
    }
  }
  out.precision(old);
}

MeasurementSeries to_dimensionless(const MeasurementSeries& si, const ReferenceValues& refs) {
  const double d0 = derive_references(refs).d0;
  MeasurementSeries out = si;
  for (auto& s : out.positions) s /= refs.L0;
  for (auto& d : out.diameters) d /= d0;
  return out;
}

namespace {

struct AnsatzTerms {
  double u;
  Eigen::Vector3d du;  // d/d(b, c, v)
};

AnsatzTerms ansatz_terms(double s, double u0, double b, double c, double v) {
  if (!(s > 0.0)) return {u0, Eigen::Vector3d::Zero()};
  const double lr = std::log(s / c);
  const double z = std::exp(b * lr);
  const double w = std::exp(-z);
  const double den = u0 + (v - u0) * w;
  const double u = u0 * v / den;
  const double du_dw = -u0 * v * (v - u0) / (den * den);
  AnsatzTerms t{u, {}};
  t.du(0) = du_dw * (-w * z * lr);
  t.du(1) = du_dw * (w * b * z / c);
  t.du(2) = u0 * u0 * (1.0 - w) / (den * den);
  return t;
}

struct FitEval {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;  // in (b, c, v)
  double objective;
};

FitEval fit_eval(const MeasurementSeries& s, double u0, double b, double c, double v) {
  const Index m = static_cast<Index>(s.size());
  FitEval e{Eigen::VectorXd(m), Eigen::MatrixXd(m, 3), 0.0};
  for (Index i = 0; i < m; ++i) {
    const double d2 = s.diameters[i] * s.diameters[i];
    const AnsatzTerms t = ansatz_terms(s.positions[i], u0, b, c, v);
    e.r(i) = t.u * d2 - 1.0;
    e.jac.row(i) = d2 * t.du.transpose();
  }
  e.objective = e.r.squaredNorm();
  return e;
}

}  // namespace

double ansatz_objective(const MeasurementSeries& series, double u0, double b, double c, double v) {
  return fit_eval(series, u0, b, c, v).objective;
}

Eigen::Vector3d ansatz_gradient(const MeasurementSeries& series, double u0, double b, double c,
                                double v) {
  const FitEval e = fit_eval(series, u0, b, c, v);
  return 2.0 * e.jac.transpose() * e.r;
}

AnsatzFit fit_ansatz(const MeasurementSeries& series, double length) {
  series.validate(length);
  const double u0 = 1.0 / (series.diameters.front() * series.diameters.front());
  Eigen::Vector3d theta(0.0, std::log(0.5 * length),
                        -2.0 * std::log(series.diameters.back()));
  std::vector<std::vector<double>> trace;
  auto eval = [&](const Eigen::Vector3d& th) {
    return fit_eval(series, u0, std::exp(th(0)), std::exp(th(1)), std::exp(th(2)));
  };
  FitEval cur = eval(theta);
  double lambda = -1.0;
  constexpr int kMaxIterations = 2000;
  for (int it = 0; it < kMaxIterations; ++it) {
    const Eigen::Vector3d p = theta.array().exp();
    trace.push_back({p(0), p(1), p(2), cur.objective});
    const Eigen::Vector3d grad = 2.0 * cur.jac.transpose() * cur.r;
    if (grad.norm() <= 1e-8 * (1.0 + cur.objective)) {
      return {p(0), p(1), p(2), u0, cur.objective, it};
    }
    // Jacobian in the log-parameters.
    const Eigen::MatrixXd jl = cur.jac * p.asDiagonal();
    const Eigen::Matrix3d jtj = jl.transpose() * jl;
    const Eigen::Vector3d jtr = jl.transpose() * cur.r;
    const Eigen::Vector3d diag = jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));
    if (lambda < 0.0) lambda = 1e-3 * diag.maxCoeff();
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::Vector3d step = a.ldlt().solve(-jtr);
      const Eigen::Vector3d trial = theta + step;
      if (step.allFinite() && trial.cwiseAbs().maxCoeff() < 50.0) {
        FitEval next = eval(trial);
        if (std::isfinite(next.objective) && next.objective <= cur.objective) {
          const bool stalled = (trial - theta).cwiseAbs().maxCoeff() < 1e-15;
          theta = trial;
          cur = std::move(next);
          lambda = std::max(lambda / 3.0, 1e-15 * diag.maxCoeff());
          accepted = true;
          if (stalled) {
            const Eigen::Vector3d q = theta.array().exp();
            return {q(0), q(1), q(2), u0, cur.objective, it + 1};
          }
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No descent direction left at working precision.
      const Eigen::Vector3d q = theta.array().exp();
      const Eigen::Vector3d g = 2.0 * cur.jac.transpose() * cur.r;
      if (g.norm() <= 1e-6 * (1.0 + cur.objective)) return {q(0), q(1), q(2), u0, cur.objective, it};
      throw FitDivergedError("ansatz fit for " + series.experiment + " stalled", std::move(trace));
    }
  }
  throw FitDivergedError("ansatz fit for " + series.experiment + " did not converge",
                         std::move(trace));
}

std::vector<MeasurementSeries> synthesize(const std::vector<FiberModel>& models,
                                          const Params& p_true, const SynthesisOptions& opts) {
  if (!(opts.noise_rel >= 0.0)) throw ValidationError("noise", "must be non-negative");
  if (opts.points < 4) throw ValidationError("points", "must be at least 4");
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MeasurementSeries> out;
  for (const FiberModel& model : models) {
    const ContinuationResult sim = simulate(model, p_true, std::nullopt, opts.continuation, opts.solver);
    MeasurementSeries s;
    s.experiment = model.id();
    const double L = model.length();
    const double d0 = model.derived().d0;
    const double L0 = model.references().L0;
    for (int k = 0; k < opts.points; ++k) {
      const double pos = k == opts.points - 1 ? L : L * k / (opts.points - 1);
      const Eigen::VectorXd y = sim.solution.value(pos);
      const double d = model.diameter(y(kVelocity), y(kTemperature));
      s.positions.push_back(pos * L0);
      s.diameters.push_back(d * d0 * (1.0 + opts.noise_rel * normal(rng)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace spinid
