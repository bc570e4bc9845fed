#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "wpinn/autodiff.hpp"
#include "wpinn/errors.hpp"

using namespace wpinn;
using ad::Matrix;
using ad::NodeId;
using ad::Tape;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

double d_wrt(const Tape& tape, NodeId out, NodeId x) {
  const std::vector<NodeId> wrt{x};
  return tape.grad(out, wrt)[0](0, 0);
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("square of 3 is 9 with derivative 6") {
    Tape tape;
    const NodeId x = tape.input(scalar(3.0));
    const NodeId y = tape.square(x);
    CHECK(tape.scalar(y) == 9.0);
    CHECK(d_wrt(tape, y, x) == 6.0);
  }

  TEST_CASE("relu value and subgradient") {
    Tape tape;
    const NodeId x = tape.input(scalar(-2.0));
    const NodeId y = tape.relu(x);
    CHECK(tape.scalar(y) == 0.0);
    Eigen::VectorXd in(1);
    in << -1.0;
    tape.forward(in, Eigen::VectorXd());
    CHECK(d_wrt(tape, y, x) == 0.0);
    in << 2.0;
    tape.forward(in, Eigen::VectorXd());
    CHECK(d_wrt(tape, y, x) == 1.0);
  }

  TEST_CASE("two-path relu network at 0.5") {
    Tape tape;
    const NodeId x = tape.input(scalar(0.5));
    Matrix w0(2, 1);
    w0 << 1.0, -1.0;
    Matrix w1(1, 2);
    w1 << 1.0, 1.0;
    const NodeId W0 = tape.parameter(w0);
    const NodeId W1 = tape.parameter(w1);
    const NodeId out = tape.matmul(W1, tape.relu(tape.matmul(W0, x)));
    CHECK(tape.scalar(out) == 0.5);
  }

  TEST_CASE("sin(pi x) derivative at 0.25") {
    Tape tape;
    const NodeId x = tape.input(scalar(0.25));
    const NodeId y = tape.sin(tape.scale(x, std::numbers::pi));
    const double g = d_wrt(tape, y, x);
    const double exact = std::numbers::pi * std::cos(std::numbers::pi / 4.0);
    const double h = 1e-5;
    const double fd = (std::sin(std::numbers::pi * (0.25 + h)) - std::sin(std::numbers::pi * (0.25 - h))) / (2 * h);
    CHECK(std::abs(g - exact) / exact < 1e-14);
    CHECK(std::abs(g - fd) / std::abs(fd) < 1e-6);
  }

  TEST_CASE("input derivative of a linear map is its weight") {
    Tape tape;
    Matrix t(1, 3);
    t << 0.1, 0.5, 0.9;
    const NodeId x = tape.input(t);
    const NodeId w = tape.parameter(scalar(2.7));
    const NodeId xi = tape.mul(w, x);
    const NodeId d = tape.input_grad_node(xi, x, 0);
    for (int j = 0; j < 3; ++j) CHECK(tape.value(d)(0, j) == 2.7);
  }

  TEST_CASE("nested derivative of sin(w t) in w at (1, 0)") {
    Tape tape;
    const NodeId t = tape.input(scalar(0.0));
    const NodeId w = tape.parameter(scalar(1.0));
    const NodeId xi = tape.sin(tape.mul(w, t));
    const NodeId dt = tape.input_grad_node(xi, t, 0);
    CHECK(tape.scalar(dt) == doctest::Approx(1.0));  // w cos(w t)
    CHECK(d_wrt(tape, dt, w) == doctest::Approx(1.0));  // cos(wt) - wt sin(wt)
  }

  TEST_CASE("nested derivative matches its closed form away from the origin") {
    const double wv = 0.7, tv = 1.3;
    Tape tape;
    const NodeId t = tape.input(scalar(tv));
    const NodeId w = tape.parameter(scalar(wv));
    const NodeId dt = tape.input_grad_node(tape.sin(tape.mul(w, t)), t, 0);
    const double exact = std::cos(wv * tv) - wv * tv * std::sin(wv * tv);
    CHECK(std::abs(d_wrt(tape, dt, w) - exact) < 1e-14);
  }

  TEST_CASE("gradients over a batched expression match finite differences") {
    Matrix xs(2, 4);
    xs << 0.3, -0.2, 0.9, 0.4, 1.1, 0.5, -0.7, 0.2;
    Matrix wv(3, 2);
    wv << 0.5, -0.3, 0.8, 0.1, -0.6, 0.9;
    const auto build = [&](Tape& tape, const Matrix& w) {
      const NodeId x = tape.input(xs);
      const NodeId W = tape.parameter(w);
      const NodeId h = tape.tanh(tape.matmul(W, x));
      const NodeId s = tape.sum(tape.mul(tape.square(h), tape.abs(tape.sin(h))));
      return std::pair{W, s};
    };
    Tape tape;
    const auto [W, s] = build(tape, wv);
    const std::vector<NodeId> wrt{W};
    const Matrix g = tape.grad(s, wrt)[0];
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 2; ++j) {
        Matrix wp = wv, wm = wv;
        wp(i, j) += h;
        wm(i, j) -= h;
        Tape tp, tm;
        const double fd = (tp.scalar(build(tp, wp).second) - tm.scalar(build(tm, wm).second)) / (2 * h);
        CHECK(std::abs(g(i, j) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }

  TEST_CASE("forward replays the tape and is bitwise deterministic") {
    Tape tape;
    const NodeId x = tape.input(scalar(0.3));
    const NodeId w = tape.parameter(scalar(1.7));
    tape.tanh(tape.mul(w, tape.sin(x)));
    Eigen::VectorXd in(1), p(1);
    in << 0.9;
    p << -0.4;
    const double a = tape.forward(in, p);
    const double b = tape.forward(in, p);
    CHECK(a == b);
    CHECK(a == std::tanh(-0.4 * std::sin(0.9)));
  }

  TEST_CASE("error contracts") {
    Tape tape;
    const NodeId x = tape.input(Matrix::Ones(1, 2));
    const NodeId y = tape.square(x);
    CHECK_THROWS_AS(tape.grad(y, std::vector<NodeId>{x}), ContractError);
    CHECK_THROWS_AS(tape.forward(Eigen::VectorXd::Ones(3), Eigen::VectorXd()), ConfigError);
    Eigen::VectorXd bad(2);
    bad << 1.0, NAN;
    CHECK_THROWS_AS(tape.forward(bad, Eigen::VectorXd()), InputError);
    CHECK_THROWS_AS(tape.input(scalar(INFINITY)), InputError);
    const NodeId c = tape.constant(scalar(1.0));
    CHECK_THROWS_AS(tape.input_grad_node(y, c, 0), ContractError);
  }

  TEST_CASE("adjoints reduce over broadcast dimensions") {
    Matrix g(2, 3);
    g << 1, 2, 3, 4, 5, 6;
    const Matrix r = ad::reduce_to(g, 1, 3);
    CHECK(r(0, 0) == 5.0);
    CHECK(r(0, 2) == 9.0);
    CHECK(ad::reduce_to(g, 1, 1)(0, 0) == 21.0);
  }
}
