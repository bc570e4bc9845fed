#include <doctest.h>

#include <cmath>
#include <random>

#include "wpinn/errors.hpp"
#include "wpinn/geometry.hpp"
#include "wpinn/sampler.hpp"
#include "wpinn/suites.hpp"

using namespace wpinn;
using geometry::ChartPoint;
using geometry::kPi;

TEST_SUITE("geometry") {
  TEST_CASE("embedding of chart landmarks") {
    const auto a = geometry::embed(ChartPoint<double>{0.0, 0.0, 0.0});
    CHECK(a.isApprox(Eigen::Vector3d(1, 0, 0)));
    const auto b = geometry::embed(ChartPoint<double>{0.37, 1.0, 0.0});
    CHECK((b - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
    const auto c = geometry::embed(ChartPoint<double>{0.5, 0.0, 0.0});
    CHECK((c - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
  }

  TEST_CASE("surface gradient") {
    const ChartPoint<double> p0{0.2, 0.0, 0.0};
    CHECK(geometry::grad_g(0.0, 0.0, p0).norm() == 0.0);
    const auto g = geometry::grad_g(1.0, 0.0, p0);  // xi = lambda
    CHECK(g(0) == doctest::Approx(1.0 / kPi));
    CHECK(g(1) == 0.0);
    const auto h = geometry::grad_g(0.0, 1.0, ChartPoint<double>{0.2, 0.7, 0.0});  // xi = phi
    CHECK(h(0) == 0.0);
    CHECK(h(1) == doctest::Approx(2.0 / kPi));
    CHECK_THROWS_AS(geometry::grad_g(1.0, 0.0, ChartPoint<double>{0.0, 1.0, 0.0}), SingularityError);
  }

  TEST_CASE("divergence of hand-built fields") {
    const double phi = 0.3;
    const ChartPoint<double> p{0.1, phi, 0.0};
    // f_lambda = cos(pi phi / 2), no lambda dependence.
    geometry::FieldJet<double> a{std::cos(kPi / 2 * phi), 0.0, 0.0, 0.0};
    CHECK(std::abs(geometry::div_g(a, p)) < 1e-15);
    geometry::FieldJet<double> b{0.0, 1.0, 0.0, 0.0};
    CHECK(geometry::div_g(b, p) == doctest::Approx(-std::tan(kPi / 2 * phi)));
    CHECK_THROWS_AS(geometry::div_g(b, ChartPoint<double>{0.0, -1.0, 0.0}), SingularityError);
  }

  TEST_CASE("flux components of the reduced Burgers flux") {
    const auto spec = geometry::FluxSpec::burgers();
    const auto f = geometry::flux_components(1.0, ChartPoint<double>{0.4, 0.0, 0.0}, spec);
    CHECK(f(0) == doctest::Approx(kPi / 2));
    CHECK(f(1) == 0.0);
    CHECK(geometry::flux_components(0.0, ChartPoint<double>{0.4, 0.3, 0.0}, spec).norm() == 0.0);
    const auto lin = geometry::FluxSpec::constant_direction(1.0, 0.0, 0.0);
    const auto g = geometry::flux_components(1.0, ChartPoint<double>{0.0, 0.0, 0.0}, lin);
    CHECK(std::abs(g(0)) < 1e-15);
    CHECK(std::abs(g(1)) < 1e-15);
  }

  TEST_CASE("flux components against the ambient cross product") {
    // The component formulas follow n x (f1, f2, -f3) with n the outward
    // normal, so that f3 > 0 transports eastward.
    const auto spec = geometry::FluxSpec::constant_direction(0.3, -0.7, 0.5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(-0.9, 0.9);
    for (int i = 0; i < 100; ++i) {
      const ChartPoint<double> p{unit(rng), unit(rng), 0.0};
      const double u = unit(rng);
      const Eigen::Vector3d phi_vec = u * Eigen::Vector3d(0.3, -0.7, -0.5);
      const Eigen::Vector3d cross = geometry::embed(p).cross(phi_vec);
      const Eigen::Matrix<double, 3, 2> frame = geometry::tangent_frame(p);
      const Eigen::Vector2d got = geometry::flux_components(u, p, spec);
      const Eigen::Vector2d want = frame.transpose() * cross;
      CHECK((got - want).norm() < 1e-12);
    }
  }

  TEST_CASE("area density") {
    CHECK(geometry::area_weight(ChartPoint<double>{0.0, 0.0, 0.0}) == doctest::Approx(kPi * kPi / 2));
    CHECK(std::abs(geometry::area_weight(ChartPoint<double>{0.0, 1.0, 0.0})) < 1e-15);
    geometry::Domain full;
    full.phi = {-1.0, 1.0};
    CHECK(full.area() == doctest::Approx(4 * kPi));
    geometry::Domain band;
    CHECK(band.area() == doctest::Approx(2 * kPi * std::sqrt(2.0)));
  }

  TEST_CASE("area density integrates to the band and sphere areas by trapezoid rule") {
    const auto trapezoid = [](double lo, double hi, int n) {
      double s = 0.0;
      const double h = (hi - lo) / n;
      for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        s += w * geometry::area_weight(ChartPoint<double>{0.0, lo + i * h, 0.0});
      }
      return 2.0 * s * h;  // lambda length 2
    };
    CHECK(std::abs(trapezoid(-1.0, 1.0, 4000) - 4 * kPi) / (4 * kPi) < 1e-6);
    CHECK(std::abs(trapezoid(-0.5, 0.5, 4000) - 2 * kPi * std::sqrt(2.0)) / (2 * kPi * std::sqrt(2.0)) < 1e-6);
  }

  TEST_CASE("domain validation") {
    geometry::Domain d;
    d.periodic_lambda = true;
    CHECK_NOTHROW(d.validate());
    d.lambda = {-0.5, 1.0};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    geometry::Domain e;
    e.phi = {-1.2, 0.5};
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }

  TEST_CASE("geometry suite passes") {
    const auto checks = suites::geometry();
    for (const auto& c : checks) {
      INFO(c.construction << " " << c.params << " " << c.measured << " > " << c.bound);
      CHECK(c.pass);
    }
  }
}
