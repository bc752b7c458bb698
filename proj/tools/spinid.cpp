#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "spinid/config.hpp"
#include "spinid/data.hpp"
#include "spinid/ident.hpp"
#include "spinid/spinmodel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace spinid;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("input", "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Manifest {
  std::string command;
  fs::path out_dir;
  json doc;

  Manifest(std::string cmd, fs::path dir) : command(std::move(cmd)), out_dir(std::move(dir)) {
    doc["tool"] = "spinid";
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["timestamp"] = utc_timestamp();
    doc["inputs"] = json::object();
    doc["outputs"] = json::array();
  }
  void input(const std::string& role, const fs::path& path) {
    doc["inputs"][role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }
  std::ofstream output(const std::string& name) {
    doc["outputs"].push_back(name);
    std::ofstream out(out_dir / name);
    if (!out) throw Error("cannot write " + (out_dir / name).string());
    return out;
  }
  void write() {
    std::ofstream out(out_dir / "manifest.json");
    out << doc.dump(2) << '\n';
  }
};

int thread_count() {
  const char* env = std::getenv("SPINID_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) {
    throw ValidationError("SPINID_THREADS", "must be a positive integer");
  }
  return static_cast<int>(v);
}

Params parse_pair(const std::string& text, const std::string& field) {
  const auto comma = text.find(',');
  auto number = [&](const std::string& part) {
    std::size_t pos = 0;
    try {
      const double v = std::stod(part, &pos);
      if (pos == part.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(field, "expected two comma-separated numbers, got '" + text + "'");
  };
  if (comma == std::string::npos) number("");
  return {number(text.substr(0, comma)), number(text.substr(comma + 1))};
}

EvaluatorOptions evaluator_options(const RunConfig& cfg) {
  return {cfg.continuation, cfg.solver, thread_count()};
}

void write_profile(std::ostream& os, const FiberModel& model, const bvp::Solution& sol,
                   const Params& p) {
  const auto& refs = model.references();
  const auto& der = model.derived();
  os << std::setprecision(17);
  os << "s_m,u_mps,N_N,T_K,epsdot_1ps,d_m,mu_e_Pas,s,u,N,T,epsdot,d,mu_e\n";
  for (Index i = 0; i < sol.mesh().size(); ++i) {
    const double s = sol.mesh()[i];
    const Eigen::VectorXd y = sol.values().col(i);
    const double d = model.diameter(y(kVelocity), y(kTemperature));
    const double mu = model.material().mu_e(y(kTemperature), y(kStrainRate), p);
    os << s * refs.L0 << ',' << y(kVelocity) * refs.u0 << ',' << y(kForce) * der.N0 << ','
       << y(kTemperature) * refs.T0 << ',' << y(kStrainRate) * refs.u0 / refs.L0 << ','
       << d * der.d0 << ',' << mu * refs.mu0 << ',' << s << ',' << y(kVelocity) << ','
       << y(kForce) << ',' << y(kTemperature) << ',' << y(kStrainRate) << ',' << d << ',' << mu
       << '\n';
  }
}

std::vector<MeasurementSeries> read_measurements(const std::string& path, Manifest& manifest) {
  manifest.input("measurements", path);
  return load_measurements(fs::path(path));
}

RunConfig read_config(const std::string& path, Manifest& manifest) {
  RunConfig cfg = load_config(path);
  manifest.input("config", path);
  manifest.doc["config"] = path;
  return cfg;
}

// ---- commands ----

struct Common {
  std::string config;
  std::string out = ".";
};

int cmd_simulate(const Common& common, double n, double kappa) {
  Manifest manifest("simulate", common.out);
  const RunConfig cfg = read_config(common.config, manifest);
  const Params p{n, kappa};
  if (!ParameterDomain{}.contains(p)) throw ValidationError("n,kappa", "outside [0,1] x [7,20]");
  manifest.doc["parameters"] = {{"n", n}, {"kappa", kappa}};
  int status = 0;
  for (const FiberModel& model : cfg.models()) {
    try {
      const ContinuationResult r = simulate(model, p, std::nullopt, cfg.continuation, cfg.solver);
      auto prof = manifest.output("profile_" + model.id() + ".csv");
      write_profile(prof, model, r.solution, p);
      auto trace = manifest.output("trace_" + model.id() + ".csv");
      r.trace.write_csv(trace);
      manifest.doc["experiments"][model.id()] = {
          {"direct", r.trace.direct},
          {"continuation_steps", r.trace.accepted().size()},
          {"nodes", r.solution.mesh().size()},
          {"max_residual", r.solution.diagnostics().max_residual}};
    } catch (const SolverError& e) {
      auto diag = manifest.output("failure_" + model.id() + ".txt");
      diag << e.what() << '\n';
      if (const auto* cf = dynamic_cast<const ContinuationFailedError*>(&e)) cf->trace().write_csv(diag);
      std::cerr << "spinid: " << model.id() << ": " << e.what() << '\n';
      manifest.doc["experiments"][model.id()] = {{"failure", e.what()}};
      status = 1;
    }
  }
  manifest.write();
  return status;
}

int cmd_fit_data(const Common& common, const std::string& measurements) {
  Manifest manifest("fit-data", common.out);
  RunConfig cfg;
  if (!common.config.empty()) cfg = read_config(common.config, manifest);
  const auto series = read_measurements(measurements, manifest);
  auto fits = manifest.output("fits.csv");
  auto smooth = manifest.output("smoothed.csv");
  fits << std::setprecision(17) << "experiment,b,c,v,u0,objective,iterations\n";
  smooth << std::setprecision(17)
         << "experiment,position_m,diameter_m,diameter_fit_m,inv_d2,inv_d2_fit\n";
  const double d0 = derive_references(cfg.references).d0;
  for (const auto& s : series) {
    double length = s.positions.back() / cfg.references.L0;
    for (const auto& e : cfg.experiments) {
      if (e.id == s.experiment) length = e.L / cfg.references.L0;
    }
    const MeasurementSeries dimless = to_dimensionless(s, cfg.references);
    const AnsatzFit fit = fit_ansatz(dimless, length);
    fits << s.experiment << ',' << fit.b << ',' << fit.c << ',' << fit.v << ',' << fit.u0 << ','
         << fit.objective << ',' << fit.iterations << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = dimless.positions[i];
      const double dm = dimless.diameters[i];
      smooth << s.experiment << ',' << s.positions[i] << ',' << s.diameters[i] << ','
             << fit.diameter(x) * d0 << ',' << 1.0 / (dm * dm) << ',' << fit.velocity(x) << '\n';
    }
  }
  manifest.write();
  return 0;
}

int cmd_identify(const Common& common, const std::string& measurements,
                 const std::string& start_text, bool heuristic) {
  Manifest manifest("identify", common.out);
  const RunConfig cfg = read_config(common.config, manifest);
  std::optional<Params> start;
  if (!start_text.empty()) {
    start = parse_pair(start_text, "--start");
    if (!cfg.trust_region.bounds.contains(*start)) {
      throw ValidationError("--start", "outside the parameter domain [0,1] x [7,20]");
    }
  }
  const auto series = read_measurements(measurements, manifest);
  const auto t0 = std::chrono::steady_clock::now();
  const CostEvaluator evaluator(prepare_experiments(cfg.models(), series, cfg.grid_points),
                                evaluator_options(cfg));
  json report;
  if (heuristic || !start) {
    const HeuristicResult h = start_heuristic(evaluator, cfg.heuristic);
    report["heuristic"] = {{"n", h.p.n}, {"kappa", h.p.kappa}, {"flagged", h.flagged},
                           {"J_newtonian", h.J_newtonian}, {"sweep", h.sweep}};
    if (!start) start = h.p;
  }
  const IdentifyResult r = identify(evaluator, *start, cfg.trust_region);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto iters = manifest.output("iterates.csv");
  write_iterates_csv(iters, r.history);
  report["start"] = {{"n", start->n}, {"kappa", start->kappa}};
  report["p_opt"] = {{"n", r.p.n}, {"kappa", r.p.kappa},
                     {"K_Pa", std::exp(r.p.kappa) * cfg.references.K0}};
  report["J"] = r.J;
  report["iterations"] = r.iterations;
  report["converged"] = r.converged;
  report["reason"] = r.reason;
  report["seconds"] = secs;
  for (const auto& e : evaluator.experiments()) {
    report["outlet_diameter_fit_m"][e.model.id()] =
        std::get<OutletDiameter>(*e.model.experiment().outlet).value * e.model.derived().d0;
  }
  auto out = manifest.output("result.json");
  out << report.dump(2) << '\n';
  manifest.doc["parameters"] = {{"start", report["start"]}, {"heuristic", heuristic}};
  manifest.write();
  std::cout << std::setprecision(6) << "p_opt n=" << r.p.n << " kappa=" << r.p.kappa
            << " J=" << r.J << " iterations=" << r.iterations << " (" << r.reason << ")\n";
  if (!r.converged) std::cerr << "spinid: warning: identification stopped before convergence\n";
  return 0;
}

int cmd_scan(const Common& common, const std::string& measurements, const std::string& n_range,
             const std::string& kappa_range, const std::string& resolution) {
  Manifest manifest("scan", common.out);
  const RunConfig cfg = read_config(common.config, manifest);
  const Params nr = parse_pair(n_range, "--n-range");
  const Params kr = parse_pair(kappa_range, "--kappa-range");
  int rn = 0, rk = 0;
  if (resolution.find(',') != std::string::npos) {
    const Params r = parse_pair(resolution, "--resolution");
    rn = static_cast<int>(r.n);
    rk = static_cast<int>(r.kappa);
  } else {
    try {
      rn = rk = std::stoi(resolution);
    } catch (const std::exception&) {
      throw ValidationError("--resolution", "expected N or N,M");
    }
  }
  if (rn < 1 || rk < 1) throw ValidationError("--resolution", "must be positive");
  const auto series = read_measurements(measurements, manifest);
  const CostEvaluator evaluator(prepare_experiments(cfg.models(), series, cfg.grid_points),
                                evaluator_options(cfg));
  const ScanResult r = scan(evaluator, {nr.n, nr.kappa}, {kr.n, kr.kappa}, rn, rk);
  auto out = manifest.output("scan.csv");
  write_scan_csv(out, r);
  manifest.doc["parameters"] = {{"n_range", {nr.n, nr.kappa}},
                                {"kappa_range", {kr.n, kr.kappa}},
                                {"resolution", {rn, rk}}};
  manifest.write();
  return 0;
}

int cmd_synth(const Common& common, double n, double kappa, double noise, std::uint64_t seed,
              int points) {
  Manifest manifest("synth", common.out);
  const RunConfig cfg = read_config(common.config, manifest);
  const Params p{n, kappa};
  if (!ParameterDomain{}.contains(p)) throw ValidationError("n,kappa", "outside [0,1] x [7,20]");
  SynthesisOptions opts;
  opts.noise_rel = noise;
  opts.seed = seed;
  opts.points = points;
  opts.continuation = cfg.continuation;
  opts.solver = cfg.solver;
  const auto series = synthesize(cfg.models(), p, opts);
  auto out = manifest.output("measurements.csv");
  save_measurements(out, series);
  out.close();
  manifest.doc["ground_truth"] = {{"n", n}, {"kappa", kappa}, {"noise_rel", noise},
                                  {"seed", seed}, {"points", points}};
  manifest.doc["outputs_sha256"] = {{"measurements.csv", sha256_file(common.out + "/measurements.csv")}};
  manifest.write();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based elongational rheometer for melt-spun fibers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "INI run configuration");
    if (config_required) opt->required();
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
  };

  double n = 1.0, kappa = 20.0, noise = 0.01;
  std::uint64_t seed = 1;
  int points = 40;
  std::string measurements, start, n_range = "0,1", kappa_range = "9,16", resolution = "11";
  bool heuristic = false;

  auto* sim = app.add_subcommand("simulate", "solve the forward problem for every experiment");
  add_common(sim, true);
  sim->add_option("--n", n, "power index")->capture_default_str();
  sim->add_option("--kappa", kappa, "log-consistency ln(K/K0)")->capture_default_str();

  auto* fit = app.add_subcommand("fit-data", "smooth diameter measurements with the ansatz");
  add_common(fit, false);
  fit->add_option("--measurements", measurements, "measurement CSV")->required();

  auto* ident = app.add_subcommand("identify", "identify (n, kappa) from measurements");
  add_common(ident, true);
  ident->add_option("--measurements", measurements, "measurement CSV")->required();
  ident->add_option("--start", start, "start point n,kappa");
  ident->add_flag("--heuristic", heuristic, "run the start-point heuristic (default without --start)");

  auto* sc = app.add_subcommand("scan", "tabulate the cost on a parameter grid");
  add_common(sc, true);
  sc->add_option("--measurements", measurements, "measurement CSV")->required();
  sc->add_option("--n-range", n_range, "lo,hi")->capture_default_str();
  sc->add_option("--kappa-range", kappa_range, "lo,hi")->capture_default_str();
  sc->add_option("--resolution", resolution, "points per axis, N or N,M")->capture_default_str();

  auto* syn = app.add_subcommand("synth", "generate synthetic measurements");
  add_common(syn, true);
  syn->add_option("--n", n, "power index")->required();
  syn->add_option("--kappa", kappa, "log-consistency")->required();
  syn->add_option("--noise", noise, "relative noise level")->capture_default_str();
  syn->add_option("--seed", seed, "random seed")->capture_default_str();
  syn->add_option("--points", points, "samples per experiment")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    fs::create_directories(common.out);
    if (sim->parsed()) return cmd_simulate(common, n, kappa);
    if (fit->parsed()) return cmd_fit_data(common, measurements);
    if (ident->parsed()) return cmd_identify(common, measurements, start, heuristic);
    if (sc->parsed()) return cmd_scan(common, measurements, n_range, kappa_range, resolution);
    if (syn->parsed()) return cmd_synth(common, n, kappa, noise, seed, points);
  } catch (const ValidationError& e) {
    std::cerr << "spinid: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "spinid: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
