#include <doctest.h>

#include "spinid/nondim.hpp"
#include "support.hpp"

using namespace spinid;
using doctest::Approx;

// Oracle values evaluated independently from the SI formulas with the PMMA
// reference set (double precision, g = 9.81, K0 = 1 Pa).
TEST_CASE("derived references of the PMMA scaling") {
  const DerivedReferences d = derive_references(ReferenceValues{});
  CHECK(d.A0 == Approx(1.0105285261047736e-06).epsilon(1e-14));
  CHECK(d.d0 == Approx(0.0010052504792860202).epsilon(1e-14));
  CHECK(d.f0 == Approx(1.7090980392156864e-06).epsilon(1e-14));
  CHECK(d.N0 == Approx(3.08e-5 * 0.0283).epsilon(1e-14));
  CHECK(d.A0 == Approx(1.010e-6).epsilon(1e-3));
  CHECK(d.d0 == Approx(1.005e-3).epsilon(1e-3));
  CHECK(d.f0 == Approx(1.709e-6).epsilon(1e-3));
}

TEST_CASE("unit references give unit scales") {
  ReferenceValues r;
  r.Q0 = r.rho0 = r.u0 = 1.0;
  const DerivedReferences d = derive_references(r);
  CHECK(d.A0 == 1.0);
  CHECK(d.d0 == 1.0);
}

TEST_CASE("dimensionless groups of the PMMA scaling") {
  const ReferenceValues r;
  const DimensionlessGroups g = compute_groups(r, derive_references(r));
  CHECK(g.Re == Approx(0.010457007063572148).epsilon(1e-13));
  CHECK(g.Fr == Approx(0.012652223171216665).epsilon(1e-13));
  CHECK(g.Ec == Approx(6.81453403144337e-10).epsilon(1e-13));
  CHECK(g.St == Approx(0.09275132354478849).epsilon(1e-13));
  CHECK(g.Re_star == Approx(1.4224294281897183).epsilon(1e-13));
  CHECK(g.A_star == Approx(0.47106429115373794).epsilon(1e-13));
  CHECK(g.Nu_star == Approx(0.4138389231176836).epsilon(1e-13));
  CHECK(g.Pr_star == Approx(0.6451612903225806).epsilon(1e-13));
  CHECK(g.De == Approx(82.48617647058822).epsilon(1e-13));
  CHECK(g.Re0_init == g.Re);
  CHECK(compute_groups(r, derive_references(r), 0.5).Re0_init == 0.5);
}

TEST_CASE("all unit references give unit groups") {
  ReferenceValues r;
  r.Q0 = r.L0 = r.u0 = r.T0 = r.rho0 = r.cp0 = r.mu0 = r.alpha0 = r.K0 = 1.0;
  r.rho_star0 = r.cp_star0 = r.nu_star0 = r.lambda_star0 = r.g = 1.0;
  const DimensionlessGroups g = compute_groups(r, derive_references(r));
  for (double v : {g.Re, g.Fr, g.Ec, g.St, g.Re_star, g.A_star, g.Nu_star, g.Pr_star, g.De}) {
    CHECK(v == Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("non-positive references are rejected") {
  ReferenceValues r;
  r.mu0 = 0.0;
  CHECK_THROWS_AS(derive_references(r), ValidationError);
  r = ReferenceValues{};
  r.Q0 = -1.0;
  CHECK_THROWS_AS(derive_references(r), ValidationError);
  CHECK_THROWS_AS(compute_groups(ReferenceValues{}, derive_references(ReferenceValues{}), -1.0),
                  ValidationError);
}

TEST_CASE("nondimensionalize divides by references") {
  const ReferenceValues r;
  ExperimentConfig e;
  e.id = "x";
  e.outlet = OutletDiameter{2.0e-4};
  const DimensionlessExperiment de = nondimensionalize(e, r);
  CHECK(de.L == Approx(1.0));
  CHECK(de.u_in == Approx(1.0));
  CHECK(de.T_in == Approx(1.0));
  REQUIRE(std::holds_alternative<OutletDiameter>(*de.outlet));
  CHECK(std::get<OutletDiameter>(*de.outlet).value == Approx(0.19895538885199054).epsilon(1e-13));
  e.outlet = OutletVelocity{0.5};
  CHECK(std::holds_alternative<OutletVelocity>(*nondimensionalize(e, r).outlet));
}

TEST_CASE("experiment validation") {
  ExperimentConfig e;
  e.id = "x";
  e.delta = 1.5;
  CHECK_THROWS_AS(e.validate(), ValidationError);
  e.delta = 1e-3;
  e.L = 0.0;
  CHECK_THROWS_AS(e.validate(), ValidationError);
}

TEST_CASE("property: nondimensionalize round trip") {
  testing::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    ReferenceValues r;
    r.Q0 = gen.log_uniform(1e-7, 1e-3);
    r.L0 = gen.log_uniform(0.1, 10.0);
    r.u0 = gen.log_uniform(1e-3, 10.0);
    r.T0 = gen.uniform(300.0, 700.0);
    r.rho0 = gen.uniform(500.0, 2000.0);
    ExperimentConfig e;
    e.id = "p";
    e.L = gen.log_uniform(0.1, 5.0);
    e.Q = gen.log_uniform(1e-7, 1e-3);
    e.u_in = gen.log_uniform(1e-3, 1.0);
    e.T_in = gen.uniform(400.0, 600.0);
    e.T_air = gen.uniform(250.0, 350.0);
    e.delta = gen.log_uniform(1e-6, 0.5);
    e.outlet = gen.integer(0, 1) ? Outlet{OutletDiameter{gen.log_uniform(1e-6, 1e-3)}}
                                 : Outlet{OutletVelocity{gen.log_uniform(1e-2, 10.0)}};
    const ExperimentConfig back = redimensionalize(nondimensionalize(e, r), r);
    CHECK(back.L == Approx(e.L).epsilon(1e-14));
    CHECK(back.Q == Approx(e.Q).epsilon(1e-14));
    CHECK(back.u_in == Approx(e.u_in).epsilon(1e-14));
    CHECK(back.T_in == Approx(e.T_in).epsilon(1e-14));
    CHECK(back.T_air == Approx(e.T_air).epsilon(1e-14));
    CHECK(back.delta == e.delta);
    CHECK(back.outlet->index() == e.outlet->index());
    const double a = std::visit([](auto o) { return o.value; }, *back.outlet);
    const double b = std::visit([](auto o) { return o.value; }, *e.outlet);
    CHECK(a == Approx(b).epsilon(1e-14));

    const DerivedReferences d = derive_references(r);
    CHECK(d.d0 * d.d0 * r.rho0 * r.u0 == Approx(r.Q0).epsilon(1e-14));
  }
}

TEST_CASE("unit references make nondimensionalization the identity") {
  ReferenceValues r;
  r.Q0 = r.L0 = r.u0 = r.T0 = r.rho0 = 1.0;
  ExperimentConfig e;
  e.id = "id";
  e.L = 0.7;
  e.Q = 2e-5;
  e.u_in = 0.03;
  e.T_in = 500.0;
  e.outlet = OutletVelocity{3.0};
  const DimensionlessExperiment de = nondimensionalize(e, r);
  CHECK(de.L == e.L);
  CHECK(de.Q == e.Q);
  CHECK(de.u_in == e.u_in);
  CHECK(de.T_in == e.T_in);
  CHECK(std::get<OutletVelocity>(*de.outlet).value == 3.0);
}
