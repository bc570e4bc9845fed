#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "wpinn/errors.hpp"
#include "wpinn/network.hpp"
#include "wpinn/sampler.hpp"

using namespace wpinn;
using geometry::ChartPoint;
using network::Activation;
using network::MlpParams;

namespace {

network::CutoffSpec band_cutoff(bool in_time = false) {
  network::CutoffSpec c;
  c.domain.T = 1.0;
  c.vanish_in_time = in_time;
  return c;
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("parameter count of a 3-20-20-1 network") {
    const MlpParams p = network::init_params({3, 20, 20, 1}, Activation::Relu, false, 7);
    CHECK(p.parameter_count() == 521);
    CHECK(p.flatten().size() == 521);
    CHECK(network::make_arch(20, 2, false) == std::vector<int>{3, 20, 20, 1});
    CHECK(network::make_arch(20, 2, true).front() == 4);
  }

  TEST_CASE("initialization is deterministic and He-scaled for relu") {
    const MlpParams a = network::init_params({3, 20, 1}, Activation::Relu, false, 7);
    const MlpParams b = network::init_params({3, 20, 1}, Activation::Relu, false, 7);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.biases[0].isZero());
    // First-layer weights have fan-in 3: stdev sqrt(2/3).
    const MlpParams big = network::init_params({3, 4000, 1}, Activation::Relu, false, 11);
    const Eigen::ArrayXd w = big.weights[0].reshaped().array();
    const double sd = std::sqrt((w - w.mean()).square().mean());
    CHECK(std::abs(sd - std::sqrt(2.0 / 3.0)) < 0.2 * std::sqrt(2.0 / 3.0));
    CHECK_THROWS_AS(network::init_params({3, 0, 1}, Activation::Relu, false, 1), ConfigError);
  }

  TEST_CASE("zero network and linear probe") {
    MlpParams z = network::init_params({3, 5, 1}, Activation::Tanh, false, 3);
    z.assign(Eigen::VectorXd::Zero(z.parameter_count()));
    CHECK(network::eval_solution(z, ChartPoint<double>{0.3, -0.2, 0.7}) == 0.0);

    MlpParams lin;
    lin.sizes = {3, 1};
    lin.weights = {Eigen::MatrixXd(1, 3)};
    lin.weights[0] << 1.0, 0.0, 0.0;
    lin.biases = {Eigen::VectorXd::Zero(1)};
    CHECK(network::eval_solution(lin, ChartPoint<double>{0.42, 0.1, 0.9}) == 0.42);
  }

  TEST_CASE("forward pass matches a hand-rolled evaluation") {
    const MlpParams p = network::init_params({3, 6, 6, 1}, Activation::Tanh, false, 5);
    const Eigen::Vector3d x(0.3, -0.1, 0.6);
    Eigen::VectorXd h = x;
    for (std::size_t k = 0; k + 1 < p.layers(); ++k) h = (p.weights[k] * h + p.biases[k]).array().tanh();
    const double want = (p.weights.back() * h + p.biases.back())(0);
    CHECK(std::abs(network::eval_solution(p, ChartPoint<double>{0.3, -0.1, 0.6}) - want) < 1e-15);
  }

  TEST_CASE("periodic features make the network periodic in lambda") {
    const MlpParams p = network::init_params({4, 8, 1}, Activation::Tanh, true, 9);
    const double a = network::eval_solution(p, ChartPoint<double>{-1.0, 0.2, 0.3});
    const double b = network::eval_solution(p, ChartPoint<double>{1.0, 0.2, 0.3});
    CHECK(std::abs(a - b) < 1e-14);
  }

  TEST_CASE("test function vanishes on the spatial boundary") {
    const MlpParams p = network::init_params({3, 10, 10, 1}, Activation::Tanh, false, 1);
    const auto cutoff = band_cutoff();
    const auto edges = sampler::sample_boundary(cutoff.domain, 1000, 4);
    REQUIRE(edges.size() == 1000);
    for (Eigen::Index j = 0; j < edges.size(); ++j) {
      const ChartPoint<double> q{edges.points(0, j), edges.points(1, j), edges.points(2, j)};
      CHECK(std::abs(network::eval_test_fn(p, cutoff, q)(0)) < 1e-15);
    }
  }

  TEST_CASE("constant adversary reduces to the cutoff jet") {
    MlpParams p = network::init_params({3, 4, 1}, Activation::Tanh, false, 2);
    p.assign(Eigen::VectorXd::Zero(p.parameter_count()));
    p.biases.back()(0) = 1.0;
    for (bool in_time : {false, true}) {
      const auto cutoff = band_cutoff(in_time);
      Eigen::Matrix3Xd pts(3, 1);
      pts << 0.3, 0.1, 0.4;
      const auto jet = network::cutoff_jet(cutoff, pts);
      const Eigen::Vector4d xi = network::eval_test_fn(p, cutoff, ChartPoint<double>{0.3, 0.1, 0.4});
      for (int r = 0; r < 4; ++r) CHECK(std::abs(xi(r) - jet(r, 0)) < 1e-15);
    }
  }

  TEST_CASE("test function derivatives match finite differences") {
    const double h = 1e-5;
    for (Activation act : {Activation::Tanh, Activation::Sin}) {
      for (bool in_time : {false, true}) {
        const MlpParams p = network::init_params({3, 10, 10, 1}, act, false, 21);
        const auto cutoff = band_cutoff(in_time);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> lam(-0.9, 0.9), phi(-0.4, 0.4), t(0.1, 0.9);
        for (int i = 0; i < 20; ++i) {
          const ChartPoint<double> q{lam(rng), phi(rng), t(rng)};
          const Eigen::Vector4d xi = network::eval_test_fn(p, cutoff, q);
          const auto at = [&](double dl, double dp, double dt) {
            return network::eval_test_fn(p, cutoff, ChartPoint<double>{q.lambda + dl, q.phi + dp, q.t + dt})(0);
          };
          const Eigen::Vector3d fd((at(0, 0, h) - at(0, 0, -h)) / (2 * h),
                                   (at(h, 0, 0) - at(-h, 0, 0)) / (2 * h),
                                   (at(0, h, 0) - at(0, -h, 0)) / (2 * h));
          const Eigen::Vector3d got(xi(1), xi(2), xi(3));
          CHECK((got - fd).lpNorm<Eigen::Infinity>() <= 1e-5 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
        }
      }
    }
  }

  TEST_CASE("cutoff is positive inside and zero on every edge") {
    const auto cutoff = band_cutoff();
    Eigen::Matrix3Xd pts(3, 5);
    pts << 0.0, -1.0, 1.0, 0.3, 0.3,
           0.0, 0.2, -0.1, -0.5, 0.5,
           0.5, 0.5, 0.5, 0.5, 0.5;
    const auto jet = network::cutoff_jet(cutoff, pts);
    CHECK(jet(0, 0) > 0.0);
    for (int j = 1; j < 5; ++j) CHECK(jet(0, j) == 0.0);
  }

  TEST_CASE("checkpoint round trip is bitwise exact") {
    const MlpParams p = network::init_params({4, 7, 7, 1}, Activation::Sin, true, 13);
    std::stringstream buf;
    network::write_checkpoint(buf, p, {13, 420, 0.125});
    network::CheckpointMeta meta;
    const MlpParams q = network::read_checkpoint(buf, &meta);
    CHECK(q.flatten() == p.flatten());
    CHECK(q.activation == p.activation);
    CHECK(q.periodic_lambda);
    CHECK(meta.epoch == 420);
    CHECK(meta.best_loss == 0.125);
    Eigen::Matrix3Xd pts(3, 2);
    pts << 0.1, -0.7, 0.2, 0.3, 0.5, 0.9;
    CHECK(q.evaluate(pts) == p.evaluate(pts));
    std::stringstream junk("not a checkpoint");
    CHECK_THROWS_AS(network::read_checkpoint(junk), InputError);
  }
}
