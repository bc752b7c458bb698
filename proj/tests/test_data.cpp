#include <doctest.h>

#include <sstream>

#include "spinid/data.hpp"
#include "support.hpp"

using namespace spinid;
using doctest::Approx;

namespace {

double ansatz(double s, double b, double c, double v, double u0) {
  return u0 * v * std::exp(std::pow(s / c, b)) / ((std::exp(std::pow(s / c, b)) - 1.0) * u0 + v);
}

MeasurementSeries from_ansatz(double b, double c, double v, double u0, int points = 30) {
  MeasurementSeries s;
  s.experiment = "a";
  for (int i = 0; i < points; ++i) {
    const double x = double(i) / (points - 1);
    s.positions.push_back(x);
    s.diameters.push_back(1.0 / std::sqrt(ansatz(x, b, c, v, u0)));
  }
  return s;
}

std::string expect_validation(const std::string& csv) {
  std::istringstream in(csv);
  try {
    load_measurements(in);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST_CASE("measurement CSV round trip") {
  const std::string csv =
      "experiment,position_m,diameter_m\n"
      "A,0,0.001\nA,0.1,0.0008\nA,0.2,0.0005\nA,0.3,0.0003\n"
      "B,0,0.001\nB,0.05,0.0009\nB,0.15,0.0006\nB,0.5,0.0001\n";
  std::istringstream in(csv);
  const auto series = load_measurements(in);
  REQUIRE(series.size() == 2);
  CHECK(series[0].experiment == "A");
  CHECK(series[1].size() == 4);
  std::ostringstream out;
  save_measurements(out, series);
  std::istringstream again(out.str());
  const auto reloaded = load_measurements(again);
  std::ostringstream out2;
  save_measurements(out2, reloaded);
  CHECK(out.str() == out2.str());
  CHECK(reloaded[1].positions == series[1].positions);
  CHECK(reloaded[1].diameters == series[1].diameters);
}

TEST_CASE("nine experiments give nine series") {
  std::ostringstream csv;
  csv << "experiment,position_m,diameter_m\n";
  for (int k = 1; k <= 9; ++k) {
    for (int i = 0; i < 5; ++i) csv << "E" << k << ',' << 0.1 * i << ',' << 1e-3 / (1 + i) << '\n';
  }
  std::istringstream in(csv.str());
  CHECK(load_measurements(in).size() == 9);
}

TEST_CASE("invalid measurement files") {
  CHECK(expect_validation("experiment,position_m,diameter_m\nA,0,0.001\nA,0.1,0.0008\n").find("at least 4") !=
        std::string::npos);
  CHECK(expect_validation("experiment,position_m,diameter_m\nA,0,1\nA,0.1,1\nA,0.1,1\nA,0.2,1\n")
            .find("strictly increasing") != std::string::npos);
  CHECK(expect_validation("experiment,position_m,diameter_m\nA,0,1\nA,0.1,x\n").find("measurements:3") !=
        std::string::npos);
  CHECK(expect_validation("experiment,position_m,diameter_m\nA,0,1\nA,0.1,-1\nA,0.2,1\nA,0.3,1\n")
            .find("positive") != std::string::npos);
  CHECK(expect_validation("experiment,position_m,diameter_m\nA,0,1,3\n").find("malformed") != std::string::npos);
  CHECK(expect_validation("s,d\n").find("header") != std::string::npos);
  CHECK(expect_validation("").find("empty") != std::string::npos);
  CHECK(expect_validation("experiment,position_m,diameter_m\n").find("no data") != std::string::npos);
  MeasurementSeries s = from_ansatz(2.0, 0.5, 50.0, 1.0);
  CHECK_THROWS_AS(s.validate(0.5), ValidationError);
}

TEST_CASE("dimensionless conversion") {
  const ReferenceValues r;
  MeasurementSeries s;
  s.experiment = "x";
  s.positions = {0.0, 0.255, 0.51};
  s.diameters = {1e-3, 5e-4, 1e-4};
  const MeasurementSeries d = to_dimensionless(s, r);
  CHECK(d.positions[2] == Approx(1.0));
  CHECK(d.diameters[0] == Approx(1e-3 / 0.0010052504792860202).epsilon(1e-14));
}

TEST_CASE("noise-free ansatz data are recovered") {
  const MeasurementSeries s = from_ansatz(2.0, 0.5, 50.0, 1.0);
  const AnsatzFit fit = fit_ansatz(s, 1.0);
  CHECK(fit.u0 == Approx(1.0).epsilon(1e-15));
  CHECK(fit.b == Approx(2.0).epsilon(1e-6));
  CHECK(fit.c == Approx(0.5).epsilon(1e-6));
  CHECK(fit.v == Approx(50.0).epsilon(1e-6));
  CHECK(fit.objective < 1e-10);
  CHECK(ansatz_gradient(s, fit.u0, fit.b, fit.c, fit.v).norm() <= 1e-6 * (1.0 + fit.objective));
}

TEST_CASE("constant diameters") {
  MeasurementSeries s;
  s.experiment = "flat";
  for (int i = 0; i < 10; ++i) {
    s.positions.push_back(0.1 * i);
    s.diameters.push_back(0.7);
  }
  const AnsatzFit fit = fit_ansatz(s, 1.0);
  CHECK(fit.v == Approx(fit.u0).epsilon(1e-6));
  CHECK(fit.objective < 1e-12);
}

TEST_CASE("ansatz identities") {
  const AnsatzFit f{1.7, 0.4, 30.0, 2.0, 0.0, 0};
  CHECK(f.velocity(0.0) == f.u0);
  CHECK(f.diameter(0.0) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f.diameter(50.0) == Approx(1.0 / std::sqrt(30.0)).epsilon(1e-14));
  CHECK(f.velocity(0.3) == Approx(ansatz(0.3, 1.7, 0.4, 30.0, 2.0)).epsilon(1e-13));
  double last = INFINITY;
  for (int i = 0; i <= 1000; ++i) {
    const double d = f.diameter(i / 1000.0);
    CHECK(d < last);
    last = d;
  }
}

TEST_CASE("property: fitted parameters are a local minimum") {
  testing::Gen gen(71);
  for (int trial = 0; trial < 10; ++trial) {
    const double b = gen.uniform(1.0, 4.0);
    const double c = gen.uniform(0.2, 0.8);
    const double v = gen.log_uniform(5.0, 500.0);
    MeasurementSeries s = from_ansatz(b, c, v, 1.0, 40);
    for (auto& d : s.diameters) d *= 1.0 + 0.01 * std::normal_distribution<double>()(gen.engine());
    const AnsatzFit fit = fit_ansatz(s, 1.0);
    CHECK(ansatz_gradient(s, fit.u0, fit.b, fit.c, fit.v).norm() <= 1e-6 * (1.0 + fit.objective));
    for (int k = 0; k < 20; ++k) {
      const double jb = fit.b * (1.0 + gen.uniform(-1e-3, 1e-3));
      const double jc = fit.c * (1.0 + gen.uniform(-1e-3, 1e-3));
      const double jv = fit.v * (1.0 + gen.uniform(-1e-3, 1e-3));
      CHECK(ansatz_objective(s, fit.u0, jb, jc, jv) >= fit.objective);
    }
    for (int i = 0; i <= 100; ++i) {
      const double d = fit.diameter(i / 100.0);
      CHECK(d > 0.0);
      CHECK(d <= std::max(1.0 / std::sqrt(fit.u0), 1.0 / std::sqrt(fit.v)) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("ansatz gradient matches finite differences") {
  const MeasurementSeries s = from_ansatz(2.0, 0.5, 50.0, 1.0);
  const Eigen::Vector3d x(1.5, 0.6, 40.0);
  const Eigen::Vector3d g = ansatz_gradient(s, 1.0, x(0), x(1), x(2));
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d a = x, b = x;
    const double h = 1e-6 * x(k);
    a(k) += h;
    b(k) -= h;
    const double fd = (ansatz_objective(s, 1.0, a(0), a(1), a(2)) - ansatz_objective(s, 1.0, b(0), b(1), b(2))) / (2 * h);
    CHECK(g(k) == Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("synthetic measurements") {
  const auto ms = testing::models({testing::experiment("S", 1.54e-5, 6e-5)});
  SynthesisOptions opts;
  opts.noise_rel = 0.0;
  opts.points = 12;
  const auto clean = synthesize(ms, testing::kTruth, opts);
  REQUIRE(clean.size() == 1);
  CHECK(clean[0].size() == 12);
  CHECK(clean[0].positions.back() == Approx(0.51).epsilon(1e-15));
  const ContinuationResult sim = simulate(ms[0], testing::kTruth);
  const double d0 = ms[0].derived().d0;
  for (std::size_t i = 0; i < clean[0].size(); ++i) {
    const Eigen::VectorXd y = sim.solution.value(clean[0].positions[i] / 0.51);
    CHECK(clean[0].diameters[i] == Approx(ms[0].diameter(y(kVelocity), y(kTemperature)) * d0).epsilon(1e-12));
  }
  CHECK(clean[0].diameters.back() == Approx(6e-5).epsilon(1e-8));

  opts.noise_rel = 0.01;
  opts.seed = 5;
  const auto a = synthesize(ms, testing::kTruth, opts);
  const auto b = synthesize(ms, testing::kTruth, opts);
  CHECK(a[0].diameters == b[0].diameters);
  opts.seed = 6;
  CHECK(synthesize(ms, testing::kTruth, opts)[0].diameters != a[0].diameters);
  opts.points = 3;
  CHECK_THROWS_AS(synthesize(ms, testing::kTruth, opts), ValidationError);
}
