#include <doctest.h>

#include <cmath>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "wpinn/errors.hpp"
#include "wpinn/sampler.hpp"

using namespace wpinn;
using geometry::kPi;
using sampler::Generator;

namespace {

geometry::Domain full_sphere() {
  geometry::Domain d;
  d.lambda = {-1.0, 1.0};
  d.phi = {-1.0, 1.0};
  d.periodic_lambda = true;
  d.T = 1.0;
  return d;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("full-sphere weights sum to 4 pi and z has zero mean") {
    const auto s = sampler::sample_interior(full_sphere(), 100000, Generator::MonteCarlo, 1);
    CHECK(std::abs(s.measure() - 4 * kPi) < 1e-9);
    Eigen::ArrayXd z = (kPi / 2 * s.points.row(1).array()).sin().transpose();
    const double sigma = std::sqrt(1.0 / 3.0 / s.size());  // z uniform on [-1, 1]
    CHECK(std::abs(z.mean()) < 3 * sigma);
  }

  TEST_CASE("embedded height is uniform (chi-square, 20 bins)") {
    const auto s = sampler::sample_interior(full_sphere(), 100000, Generator::MonteCarlo, 2);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(20);
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      const double z = std::sin(kPi / 2 * s.points(1, j));
      counts(std::min(19, static_cast<int>((z + 1.0) / 2.0 * 20))) += 1.0;
    }
    const double expected = s.size() / 20.0;
    const double chi2 = ((counts.array() - expected).square() / expected).sum();
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(19), chi2));
    CHECK(p > 0.001);
  }

  TEST_CASE("band sampling is symmetric in phi") {
    const geometry::Domain band;
    const auto s = sampler::sample_interior(band, 20000, Generator::MonteCarlo, 3);
    const double frac = (s.points.row(1).array() > 0.0).cast<double>().mean();
    CHECK(std::abs(frac - 0.5) < 3 * std::sqrt(0.25 / s.size()));
    CHECK(s.points.row(1).cwiseAbs().maxCoeff() <= 0.5);
    CHECK(std::abs(s.measure() - band.area() * band.T) < 1e-9);
  }

  TEST_CASE("determinism and Sobol seed independence") {
    const geometry::Domain d;
    const auto a = sampler::sample_interior(d, 500, Generator::MonteCarlo, 9);
    const auto b = sampler::sample_interior(d, 500, Generator::MonteCarlo, 9);
    CHECK(a.points == b.points);
    const auto c = sampler::sample_interior(d, 500, Generator::MonteCarlo, 10);
    CHECK(a.points != c.points);
    const auto s1 = sampler::sample_interior(d, 500, Generator::Sobol, 1);
    const auto s2 = sampler::sample_interior(d, 500, Generator::Sobol, 2);
    CHECK(s1.points == s2.points);
  }

  TEST_CASE("Sobol sequence leading points") {
    sampler::SobolSequence seq(4);
    CHECK(seq.next() == Eigen::Vector4d::Constant(0.5));
    const Eigen::VectorXd second = seq.next();
    CHECK(second == Eigen::Vector4d(0.75, 0.25, 0.25, 0.25));
    const Eigen::VectorXd third = seq.next();
    CHECK(third == Eigen::Vector4d(0.25, 0.75, 0.75, 0.75));
    CHECK_THROWS_AS(sampler::SobolSequence(5), ConfigError);
  }

  TEST_CASE("initial slice") {
    const geometry::Domain d;
    const auto s = sampler::sample_initial(d, 16384, 4);
    CHECK(s.size() == 16384);
    CHECK(s.points.row(2).isZero());
    CHECK(std::abs(s.measure() - d.area()) < 1e-9);
  }

  TEST_CASE("boundary samples lie on the edges") {
    geometry::Domain d;
    const auto s = sampler::sample_boundary(d, 4000, 5);
    int lambda_edges = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      const bool on_lambda = std::abs(std::abs(s.points(0, j)) - 1.0) < 1e-15;
      const bool on_phi = std::abs(std::abs(s.points(1, j)) - 0.5) < 1e-15;
      CHECK((on_lambda || on_phi));
      lambda_edges += on_lambda;
    }
    // Edge lengths: lambda edges 2 * (pi/2) * (phi range), phi edges pi * 2 * cos(pi/4).
    const double l_lambda = 2.0 * d.lambda_edge_length();
    const double total = d.boundary_length();
    const double p = l_lambda / total;
    const double sigma = std::sqrt(p * (1 - p) / s.size());
    CHECK(std::abs(lambda_edges / double(s.size()) - p) < 3 * sigma);
    CHECK(std::abs(s.measure() - total * d.T) < 1e-9);

    d.periodic_lambda = true;
    const auto per = sampler::sample_boundary(d, 1000, 6);
    for (Eigen::Index j = 0; j < per.size(); ++j) CHECK(std::abs(per.points(1, j)) == 0.5);

    geometry::Domain closed = full_sphere();
    CHECK(sampler::sample_boundary(closed, 100, 7).empty());
  }

  TEST_CASE("tensor grid is exact for the area and stays off the poles") {
    const auto g = sampler::tensor_grid(full_sphere(), 4, 2000, 3);
    CHECK(g.size() == 4 * 2000 * 3);
    CHECK(std::abs(g.measure() - 4 * kPi) / (4 * kPi) < 1e-6);
    CHECK(g.points.row(1).cwiseAbs().maxCoeff() < 1.0 - 1e-6);
    CHECK_THROWS_AS(sampler::tensor_grid(full_sphere(), 0, 1, 1), ConfigError);
  }

  TEST_CASE("zero-size requests and CSV dump") {
    const geometry::Domain d;
    CHECK_THROWS_AS(sampler::sample_interior(d, 0, Generator::MonteCarlo, 1), ConfigError);
    const auto s = sampler::sample_initial(d, 3, 1);
    std::stringstream out;
    sampler::write_csv(out, s);
    std::string header;
    std::getline(out, header);
    CHECK(header == "lambda,phi,t,weight,kind");
  }
}
