#include <doctest.h>

#include "spinid/complex_step.hpp"
#include "spinid/spinmodel.hpp"
#include "support.hpp"

using namespace spinid;
using doctest::Approx;

namespace {

FiberModel pmma_model() { return testing::model(testing::experiment("m", 1.54e-5, 6e-5)); }

Eigen::Vector4d random_state(testing::Gen& gen, const FiberModel& m) {
  const double u_in = m.experiment().u_in;
  return Eigen::Vector4d(u_in * gen.log_uniform(1.0, 100.0), gen.uniform(0.0, 5.0),
                         gen.uniform(0.75, 1.0), gen.uniform(0.0, 5.0));
}

}  // namespace

TEST_CASE("diameter closes the mass balance") {
  const FiberModel m = pmma_model();
  testing::Gen gen(61);
  for (int trial = 0; trial < 100; ++trial) {
    const double u = gen.log_uniform(0.01, 100.0);
    const double T = gen.uniform(0.75, 1.1);
    const double d = m.diameter(u, T);
    CHECK(m.material().rho(T) * std::numbers::pi / 4.0 * d * d * u == Approx(m.experiment().Q).epsilon(1e-14));
  }
  const double T = 1.0;
  const double u = m.experiment().Q / (std::numbers::pi / 4.0 * m.material().rho(T));
  CHECK(m.diameter(u, T) == Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(m.diameter(0.0, 1.0), DomainError);
}

TEST_CASE("property: auxiliary state solves the c = 0 member") {
  const FiberModel m = pmma_model();
  const Eigen::Vector4d aux = m.auxiliary_state();
  CHECK(aux == Eigen::Vector4d(m.experiment().u_in, 0.0, m.experiment().T_in, 0.0));
  testing::Gen gen(62);
  for (int trial = 0; trial < 20; ++trial) {
    const Params p = gen.params();
    const double s = gen.uniform(0.0, 1.0);
    CHECK(m.rhs<double>(s, aux, p, 0.0).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(m.bc<double>(aux, aux, p, 0.0).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("source terms vanish at c = 0") {
  const FiberModel m = pmma_model();
  testing::Gen gen(63);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector4d y = random_state(gen, m);
    y(kForce) = 0.0;
    y(kStrainRate) = 0.0;
    const Eigen::Vector4d f = m.rhs<double>(0.3, y, gen.params(), 0.0);
    CHECK(f(kForce) == 0.0);
    CHECK(f(kTemperature) == 0.0);
    Eigen::Vector4d y0 = random_state(gen, m);
    y0(kForce) = 0.0;
    y0(kStrainRate) = 0.0;
    CHECK(m.bc<double>(y0, random_state(gen, m), gen.params(), gen.uniform(0.0, 1.0))(3) == 0.0);
  }
}

TEST_CASE("property: Newtonian constitutive relation is transported") {
  // For n = 1 the nozzle relation epsdot = Re rho u N / (Q mu_e0(T)) holds
  // along the whole fiber; its derivative along the flow must equal the
  // strain-rate component of the right-hand side.
  const FiberModel m = pmma_model();
  const double Re = m.groups().Re;
  const double Q = m.experiment().Q;
  auto phi = [&](const Eigen::VectorXcd& z) {
    Eigen::VectorXcd out(1);
    out(0) = Re * m.material().rho(z(2)) * z(0) * z(1) / (Q * m.material().mu_e0(z(2)));
    return out;
  };
  testing::Gen gen(64);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector4d y = random_state(gen, m);
    const Params p{1.0, gen.uniform(7.0, 20.0)};
    y(kStrainRate) = phi(y.cast<Complex>())(0).real();
    const Eigen::Vector4d f = m.rhs<double>(0.4, y, p, 1.0);
    const Eigen::MatrixXd grad = complex_step_jacobian(phi, y);
    const double transported = (grad * f)(0);
    CHECK(f(kStrainRate) == Approx(transported).epsilon(1e-8));
  }
}

TEST_CASE("property: complex-step Jacobians agree with central differences") {
  const FiberModel m = pmma_model();
  testing::Gen gen(65);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector4d y = random_state(gen, m);
    const Eigen::Vector4d yl = random_state(gen, m);
    const Params p = gen.params();
    const double c = gen.uniform(0.0, 1.0);
    const auto pc = p.cast<Complex>();
    auto fc = [&](const Eigen::VectorXcd& z) -> Eigen::VectorXcd {
      return m.rhs<Complex>(0.5, Vec4<Complex>(z), pc, c);
    };
    auto gc = [&](const Eigen::VectorXcd& z) -> Eigen::VectorXcd {
      return m.bc<Complex>(Vec4<Complex>(z.head(4)), Vec4<Complex>(z.tail(4)), pc, c);
    };
    Eigen::VectorXd both(8);
    both << y, yl;
    const Eigen::MatrixXd jf = complex_step_jacobian(fc, y);
    const Eigen::MatrixXd jg = complex_step_jacobian(gc, both);
    for (Index k = 0; k < 8; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(both(k)));
      Eigen::VectorXd a = both, b = both;
      a(k) += h;
      b(k) -= h;
      const Eigen::Vector4d dg =
          (m.bc<double>(a.head<4>(), a.tail<4>(), p, c) - m.bc<double>(b.head<4>(), b.tail<4>(), p, c)) / (2 * h);
      CHECK((jg.col(k) - dg).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, dg.cwiseAbs().maxCoeff()));
      if (k < 4) {
        const Eigen::Vector4d df =
            (m.rhs<double>(0.5, a.head<4>(), p, c) - m.rhs<double>(0.5, b.head<4>(), p, c)) / (2 * h);
        CHECK((jf.col(k) - df).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, df.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("admissible-region guards") {
  const FiberModel m = pmma_model();
  const Params p{0.8, 11.71};
  CHECK_THROWS_AS(m.rhs<double>(0.0, Eigen::Vector4d(-1.0, 0.0, 1.0, 0.0), p, 1.0), DomainError);
  CHECK_THROWS_AS(m.rhs<double>(0.0, Eigen::Vector4d(1.0, 0.0, 0.4, 0.0), p, 1.0), DomainError);
  ExperimentConfig e = testing::experiment("x", 1.54e-5, 6e-5);
  e.outlet = OutletDiameter{2e-3};
  CHECK_THROWS_AS(testing::model(e), ValidationError);
  e.outlet.reset();
  CHECK_THROWS_AS(testing::model(e).system(p, 1.0), ValidationError);
}

TEST_CASE("auxiliary guess solves c = 0 immediately") {
  const FiberModel m = pmma_model();
  const bvp::Solution sol = bvp::solve(m.system({0.8, 11.71}, 0.0), m.auxiliary_solution());
  CHECK(sol.diagnostics().newton_iterations <= 1);
  for (Index i = 0; i < sol.mesh().size(); ++i) CHECK(sol.values().col(i) == m.auxiliary_state());
}

TEST_CASE("converged physical solution") {
  const FiberModel m = pmma_model();
  const Params p{0.8, 11.71};
  const ContinuationResult r = simulate(m, p);
  const bvp::Solution& sol = r.solution;
  CHECK(testing::physical_violation(m, sol) == "");
  CHECK(sol.diagnostics().bc_residual <= 1e-10);
  const Eigen::Vector4d yl = sol.values().rightCols(1);
  CHECK(m.diameter(yl(kVelocity), yl(kTemperature)) ==
        Approx(std::get<OutletDiameter>(*m.experiment().outlet).value).epsilon(1e-9));

  // Momentum balance in its original form, Q u' - N' = f_air + Q/(Fr^2 u),
  // integrated with Gauss-Legendre over every mesh interval.
  const double Q = m.experiment().Q;
  const double fr2 = m.groups().Fr * m.groups().Fr;
  const double g = std::sqrt(3.0 / 5.0);
  double defect = 0.0;
  double scale = 0.0;
  const auto& mesh = sol.mesh();
  for (Index i = 0; i < mesh.intervals(); ++i) {
    const double mid = 0.5 * (mesh[i] + mesh[i + 1]);
    const double half = 0.5 * mesh.width(i);
    for (auto [x, w] : {std::pair{-g, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {g, 5.0 / 9.0}}) {
      const double s = mid + half * x;
      const Eigen::VectorXd y = sol.value(s);
      const Eigen::VectorXd dy = sol.derivative(s);
      const double d = m.diameter(y(kVelocity), y(kTemperature));
      const double gravity = Q / (fr2 * y(kVelocity));
      const double air = m.air().f_air(y(kVelocity), d, s);
      defect += half * w * std::abs(Q * dy(kVelocity) - dy(kForce) - gravity - air);
      scale += half * w * (std::abs(Q * dy(kVelocity)) + std::abs(dy(kForce)) + std::abs(gravity) + std::abs(air));
    }
  }
  // The solver controls the relative collocation residual to 1e-6.
  CHECK(defect < 1e-5 * scale);
}
