#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "wpinn/errors.hpp"
#include "wpinn/reference.hpp"
#include "wpinn/suites.hpp"

using namespace wpinn;
using namespace wpinn::reference;
using geometry::ChartPoint;
using geometry::kPi;

namespace {

// Solves u = -sin(pi (lambda - u t)) by Newton before the shock time 1/pi.
double sine_characteristic(double lambda, double t) {
  double u = -std::sin(kPi * lambda);
  for (int i = 0; i < 60; ++i) {
    const double arg = kPi * (lambda - u * t);
    const double f = u + std::sin(arg);
    const double df = 1.0 - kPi * t * std::cos(arg);
    u -= f / df;
  }
  return u;
}

double l1_against(const GodunovSolution& sol, const std::function<double(double)>& exact) {
  double err = 0.0;
  const Eigen::VectorXd u = sol.final_state();
  for (int i = 0; i < sol.cells(); ++i) err += std::abs(u(i) - exact(sol.center(i))) * sol.dx();
  return err;
}

}  // namespace

TEST_SUITE("reference") {
  TEST_CASE("closed-form solutions") {
    CHECK(exact_1d(Experiment::Standing, -0.3, 0.7) == 1.0);
    CHECK(exact_1d(Experiment::Standing, 0.3, 0.7) == -1.0);
    CHECK(exact_1d(Experiment::Moving, 0.2, 0.5) == 1.0);
    CHECK(exact_1d(Experiment::Moving, 0.3, 0.5) == 0.0);
    CHECK(exact_1d(Experiment::Rarefaction, 0.25, 0.5) == 0.5);
    CHECK(exact_1d(Experiment::Rarefaction, -0.75, 0.5) == -1.0);
    CHECK_THROWS_AS(exact_1d(Experiment::Sine, 0.0, 0.1), ConfigError);
    CHECK_THROWS_AS(exact_1d(Experiment::Standing, 0.0, -0.1), InputError);
  }

  TEST_CASE("experiment defaults") {
    CHECK(make_experiment(Experiment::Sine).T == 0.5);
    CHECK(make_experiment(Experiment::Sine).boundary == Boundary::Periodic);
    CHECK(make_experiment(Experiment::Standing).T == 1.0);
    CHECK(make_experiment(Experiment::Moving, 0.4).T == 0.4);
    CHECK(parse_experiment("rarefaction") == Experiment::Rarefaction);
    CHECK_THROWS_AS(parse_experiment("shock"), ConfigError);
  }

  TEST_CASE("Godunov flux and constant states") {
    CHECK(godunov_flux(1.0, -1.0) == 0.5);
    CHECK(godunov_flux(-1.0, 1.0) == 0.0);
    CHECK(godunov_flux(1.0, 0.0) == 0.5);
    CHECK(godunov_flux(-0.5, -1.0) == 0.5);
    const auto sol = godunov_1d([](double) { return 0.7; }, 64, 1.0, 0.9);
    CHECK((sol.final_state().array() == 0.7).all());
  }

  TEST_CASE("sine wave against characteristics before the shock") {
    const auto sol = godunov_1d([](double l) { return -std::sin(kPi * l); }, 2048, 0.2, 0.9);
    CHECK(l1_against(sol, [](double l) { return sine_characteristic(l, 0.2); }) < 5e-3);
    CHECK(sol.diagnostics.maximum_principle);
    CHECK(sol.diagnostics.tv_nonincreasing);
  }

  TEST_CASE("moving shock and first-order convergence") {
    GodunovOptions opt;
    opt.boundary = GridBoundary::Outflow;
    const auto u0 = [](double l) { return l < 0.0 ? 1.0 : 0.0; };
    const auto exact = [](double l) { return exact_1d(Experiment::Moving, l, 1.0); };
    const auto coarse = godunov_1d(u0, 200, 1.0, 0.9, opt);
    const auto fine = godunov_1d(u0, 800, 1.0, 0.9, opt);
    const double e_coarse = l1_against(coarse, exact);
    const double e_fine = l1_against(fine, exact);
    CHECK(e_coarse / e_fine >= 1.5);
    // Shock at lambda = 1/2: the state changes between the neighbouring cells.
    const Eigen::VectorXd u = fine.final_state();
    for (int i = 0; i < fine.cells(); ++i) {
      if (fine.center(i) < 0.45) CHECK(u(i) == doctest::Approx(1.0).epsilon(1e-6));
      if (fine.center(i) > 0.55) CHECK(std::abs(u(i)) < 1e-6);
    }
  }

  TEST_CASE("lift to the sphere") {
    const auto standing = ReferenceSolution::closed_form(Experiment::Standing);
    CHECK(lift_to_sphere(standing, ChartPoint<double>{0.3, 0.2, 0.5}) == -1.0);
    CHECK(lift_to_sphere(standing, [](double phi) { return 5.0 * phi; }, ChartPoint<double>{0.3, 0.2, 0.5}) ==
          doctest::Approx(-1.0));
    const auto rare = ReferenceSolution::closed_form(Experiment::Rarefaction);
    Eigen::Matrix3Xd pts(3, 2);
    pts << 0.25, -2.0, 0.1, 0.0, 0.5, 0.5;
    pts(0, 1) = -0.9;
    const Eigen::RowVectorXd v = lifted_predictor(rare)(pts);
    CHECK(v(0) == doctest::Approx(0.5));
    CHECK(v(1) == -1.0);
  }

  TEST_CASE("relative test error") {
    const Domain d = make_experiment(Experiment::Rarefaction).domain();
    const auto ref = lifted_predictor(ReferenceSolution::closed_form(Experiment::Rarefaction));
    CHECK(test_error(ref, ref, d) == 0.0);
    const Predictor twice = [&](const Eigen::Matrix3Xd& x) { return Eigen::RowVectorXd(2.0 * ref(x)); };
    CHECK(test_error(twice, ref, d) == doctest::Approx(1.0));
    const Predictor zero = [](const Eigen::Matrix3Xd& x) { return Eigen::RowVectorXd::Zero(x.cols()).eval(); };
    CHECK(test_error(zero, ref, d) == doctest::Approx(1.0));
  }

  TEST_CASE("L1 contraction") {
    const auto u0 = [](double l) { return l < 0.0 ? 1.0 : -1.0; };
    const auto same = l1_contraction_check(u0, u0, 256, 0.5);
    for (double dist : same.distance) CHECK(dist == 0.0);
    const auto shifted = [](double l) { return l < 0.1 ? 1.0 : -1.0; };
    const auto rep = l1_contraction_check(u0, shifted, 400, 0.5);
    CHECK(rep.distance_nonincreasing);
    CHECK(rep.tv_nonincreasing);
    CHECK(rep.distance.back() <= rep.distance.front() + 1e-12);
    CHECK(rep.distance.front() > 0.0);
  }

  TEST_CASE("reference cache round trip") {
    const auto sol = godunov_1d([](double l) { return -std::sin(kPi * l); }, 128, 0.5, 0.9);
    const auto path = (std::filesystem::temp_directory_path() / "wpinn_ref_cache_test.ref").string();
    write_cache(path, sol);
    const auto back = read_cache(path);
    CHECK(back.cells() == sol.cells());
    CHECK(back.values() == sol.values());
    CHECK(back.times() == sol.times());
    CHECK(back(0.3, 0.25) == sol(0.3, 0.25));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_cache(path), InputError);
  }

  TEST_CASE("reference suite passes") {
    const auto checks = suites::reference();
    for (const auto& c : checks) {
      INFO(c.construction << " " << c.params << " " << c.measured << " > " << c.bound);
      CHECK(c.pass);
    }
  }
}
