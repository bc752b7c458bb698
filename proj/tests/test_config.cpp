#include <doctest.h>

#include <sstream>

#include "spinid/config.hpp"
#include "support.hpp"

using namespace spinid;
using doctest::Approx;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST_CASE("minimal config uses defaults") {
  const RunConfig cfg = parse("[experiment.a]\nd_out = 6e-5\n");
  REQUIRE(cfg.experiments.size() == 1);
  CHECK(cfg.experiments[0].id == "a");
  CHECK(cfg.experiments[0].T_air == 293.15);
  CHECK(cfg.experiments[0].delta == 1e-3);
  CHECK(cfg.references.Q0 == 3.08e-5);
  CHECK(cfg.references.K0 == 1.0);
  CHECK(cfg.solver.tol == 1e-6);
  CHECK(cfg.continuation.dc0 == 0.1);
  CHECK(cfg.grid_points == 20);
  CHECK_FALSE(cfg.re0_init.has_value());
  CHECK(std::holds_alternative<LaminarCylinderNusselt>(cfg.nusselt));
  CHECK(cfg.models().size() == 1);
}

TEST_CASE("all sections parse") {
  const RunConfig cfg = parse(
      "[references]\nK0 = 2\ng = 9.8\n"
      "[material]\nB = 3600\n"
      "[air]\nnusselt = constant:2\nrho_star = 1.1\n"
      "[solver]\ntol = 1e-7\nmax_nodes = 800\ndc0 = 0.2\nmax_radius = 0.4\nn_init = 0.4\nre0 = 0.02\ngrid_points = 10\n"
      "[experiment.x]\nQ = 1.54e-5\nu_out = 0.5\nstencil_velocity = 0.53 mm/s\n"
      "[experiment.y]\nd_out = 3e-5\n");
  CHECK(cfg.references.K0 == 2.0);
  CHECK(cfg.material.B == 3600.0);
  CHECK(std::get<ConstantNusselt>(cfg.nusselt).value == 2.0);
  CHECK(cfg.air.rho_star == 1.1);
  CHECK(cfg.solver.tol == 1e-7);
  CHECK(cfg.solver.max_nodes == 800);
  CHECK(cfg.continuation.dc0 == 0.2);
  CHECK(cfg.trust_region.max_radius == 0.4);
  CHECK(cfg.heuristic.n_init == 0.4);
  CHECK(*cfg.re0_init == 0.02);
  CHECK(cfg.grid_points == 10);
  REQUIRE(cfg.experiments.size() == 2);
  CHECK(std::get<OutletVelocity>(*cfg.experiments[0].outlet).value == 0.5);
  CHECK(cfg.experiments[0].stencil_velocity == "0.53 mm/s");
  CHECK(std::get<OutletDiameter>(*cfg.experiments[1].outlet).value == 3e-5);
}

TEST_CASE("config errors name the field") {
  CHECK(error_of("[experiment.a]\nd_out = 6e-5\ncolour = red\n").find("colour") != std::string::npos);
  CHECK(error_of("[physics]\nx = 1\n[experiment.a]\n").find("physics") != std::string::npos);
  CHECK(error_of("[experiment.a]\nd_out = 6e-5\nu_out = 1\n").find("experiment.a") != std::string::npos);
  CHECK(error_of("[references]\nmu0 = -1\n[experiment.a]\n").find("mu0") != std::string::npos);
  CHECK(error_of("[experiment.a]\nQ = abc\n").find("experiment.a.Q") != std::string::npos);
  CHECK(error_of("[solver]\ntol = 1e-6\n").find("experiment") != std::string::npos);
  CHECK(error_of("[solver]\ndc0 = 2\n[experiment.a]\n").find("dc0") != std::string::npos);
}

TEST_CASE("shipped configs load") {
  const RunConfig six = load_config(SPINID_SOURCE_DIR "/configs/synthetic6.ini");
  CHECK(six.experiments.size() == 6);
  CHECK(six.models().size() == 6);
  const RunConfig high = load_config(SPINID_SOURCE_DIR "/configs/high_draw.ini");
  CHECK(high.experiments.size() == 1);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ValidationError);
}
