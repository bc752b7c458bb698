#include "spinid/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <set>

#include "spinid/spinmodel.hpp"

namespace spinid {

namespace pt = boost::property_tree;

namespace {

// Reads the keys of one section into typed targets and rejects leftovers.
class SectionReader {
 public:
  SectionReader(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  SectionReader& number(const std::string& key, double& target) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) target = parse_double(key, *v);
    return *this;
  }
  SectionReader& integer(const std::string& key, int& target) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) {
      const double d = parse_double(key, *v);
      if (d != static_cast<int>(d)) throw ValidationError(field(key), "must be an integer");
      target = static_cast<int>(d);
    }
    return *this;
  }
  SectionReader& text(const std::string& key, std::string& target) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) target = *v;
    return *this;
  }
  std::optional<double> optional_number(const std::string& key) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) return parse_double(key, *v);
    return std::nullopt;
  }
  void finish() const {
    for (const auto& [key, child] : tree_) {
      if (!known_.count(key)) throw ValidationError(field(key), "unknown key");
    }
  }

 private:
  std::string field(const std::string& key) const { return name_ + "." + key; }
  double parse_double(const std::string& key, const std::string& text) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(field(key), "'" + text + "' is not a number");
    }
  }

  const pt::ptree& tree_;
  std::string name_;
  std::set<std::string> known_;
};

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config:" + std::to_string(e.line()), e.message());
  }

  RunConfig cfg;
  for (const auto& [section, child] : tree) {
    if (child.empty() && !child.data().empty()) {
      throw ValidationError(section, "keys must live inside a section");
    }
    if (section == "references") {
      auto& r = cfg.references;
      SectionReader(child, section)
          .number("Q0", r.Q0).number("L0", r.L0).number("u0", r.u0).number("T0", r.T0)
          .number("rho0", r.rho0).number("cp0", r.cp0).number("mu0", r.mu0)
          .number("alpha0", r.alpha0).number("K0", r.K0).number("rho_star0", r.rho_star0)
          .number("cp_star0", r.cp_star0).number("nu_star0", r.nu_star0)
          .number("lambda_star0", r.lambda_star0).number("g", r.g)
          .finish();
    } else if (section == "material") {
      auto& m = cfg.material;
      SectionReader(child, section)
          .number("mu_c", m.mu_c).number("B", m.B).number("T_vf", m.T_vf)
          .number("a_rho", m.a_rho).number("b_rho", m.b_rho).number("a_cp", m.a_cp)
          .number("b_cp", m.b_cp).number("trouton", m.trouton)
          .finish();
    } else if (section == "air") {
      auto& a = cfg.air;
      std::string nusselt = "laminar-cylinder";
      SectionReader(child, section)
          .number("rho_star", a.rho_star).number("cp_star", a.cp_star)
          .number("nu_star", a.nu_star).number("lambda_star", a.lambda_star)
          .text("nusselt", nusselt)
          .finish();
      try {
        cfg.nusselt = nusselt_from_name(nusselt);
      } catch (const ValidationError& e) {
        throw ValidationError("air.nusselt", e.what());
      }
    } else if (section == "solver") {
      auto& s = cfg.solver;
      auto& c = cfg.continuation;
      auto& t = cfg.trust_region;
      auto& h = cfg.heuristic;
      int max_nodes = static_cast<int>(s.max_nodes);
      int initial_nodes = static_cast<int>(s.initial_nodes);
      SectionReader reader(child, section);
      reader.number("tol", s.tol).number("newton_tol", s.newton_tol)
          .integer("max_newton", s.max_newton).integer("max_nodes", max_nodes)
          .integer("initial_nodes", initial_nodes).number("complex_step", s.complex_step.h)
          .number("dc0", c.dc0).number("nu1", c.nu1).number("nu2", c.nu2)
          .number("mu_div", c.mu_div).number("dc_min", c.dc_min)
          .number("initial_radius", t.initial_radius).number("max_radius", t.max_radius)
          .number("gradient_tol", t.gradient_tol).number("step_tol", t.step_tol)
          .number("reduction_tol", t.reduction_tol).integer("max_iterations", t.max_iterations)
          .number("n_init", h.n_init).number("kappa_l", h.kappa_l).number("kappa_u", h.kappa_u)
          .number("rel_dif", h.rel_dif).integer("grid_points", cfg.grid_points);
      cfg.re0_init = reader.optional_number("re0");
      reader.finish();
      s.max_nodes = max_nodes;
      s.initial_nodes = initial_nodes;
    } else if (section.rfind("experiment.", 0) == 0) {
      ExperimentConfig e;
      e.id = section.substr(std::string("experiment.").size());
      if (e.id.empty()) throw ValidationError(section, "experiment id is empty");
      SectionReader reader(child, section);
      reader.number("L", e.L).number("Q", e.Q).number("u_in", e.u_in).number("T_in", e.T_in)
          .number("T_air", e.T_air).number("delta", e.delta)
          .text("stencil_velocity", e.stencil_velocity).text("pressure", e.pressure);
      const auto d_out = reader.optional_number("d_out");
      const auto u_out = reader.optional_number("u_out");
      reader.finish();
      if (d_out && u_out) throw ValidationError(section + ".d_out", "give d_out or u_out, not both");
      if (d_out) e.outlet = OutletDiameter{*d_out};
      if (u_out) e.outlet = OutletVelocity{*u_out};
      e.validate();
      cfg.experiments.push_back(std::move(e));
    } else {
      throw ValidationError(section, "unknown section");
    }
  }
  cfg.references.validate();
  cfg.material.validate();
  cfg.air.validate();
  cfg.solver.validate();
  cfg.continuation.validate();
  cfg.trust_region.validate();
  cfg.heuristic.validate();
  if (cfg.grid_points < 1) throw ValidationError("solver.grid_points", "must be positive");
  if (cfg.re0_init && !(*cfg.re0_init > 0.0)) throw ValidationError("solver.re0", "must be positive");
  if (cfg.experiments.empty()) throw ValidationError("experiment", "no [experiment.<id>] section");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path.string());
  RunConfig cfg = parse_config(in);
  cfg.source = path;
  return cfg;
}

std::vector<FiberModel> RunConfig::models() const {
  std::vector<FiberModel> out;
  for (const auto& e : experiments) {
    out.emplace_back(references, material, air, nusselt, e, re0_init);
  }
  return out;
}

}  // namespace spinid
