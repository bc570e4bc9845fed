#include <doctest.h>

#include <cmath>
#include <random>

#include "wpinn/errors.hpp"
#include "wpinn/residual.hpp"
#include "wpinn/suites.hpp"
#include "wpinn/trainer.hpp"

using namespace wpinn;
using geometry::ChartPoint;
using geometry::kPi;
using residual::EntropyPair;

namespace {

residual::FieldValues fields_from(const Eigen::Matrix<double, 4, Eigen::Dynamic>& m) {
  return {m.row(0), m.row(1), m.row(2), m.row(3)};
}

// A small standing-shock problem with tanh networks.
struct Fixture {
  trainer::TrainConfig cfg;
  reference::ExperimentSpec spec = reference::make_experiment(reference::Experiment::Standing);
  residual::Problem pb;
  network::MlpParams u, xi;

  explicit Fixture(int n_c = 4) {
    cfg.N_int = 256;
    cfg.N_tb = 64;
    cfg.N_ini = 64;
    cfg.N_c = n_c;
    pb = trainer::build_problem(cfg, spec, 3);
    u = network::init_params(network::make_arch(8, 2, false), network::Activation::Tanh, false, 1);
    xi = network::init_params(network::make_arch(8, 2, false), network::Activation::Tanh, false, 2);
  }
};

}  // namespace

TEST_SUITE("residual") {
  TEST_CASE("entropy pairs vanish at u = c and U is convex") {
    for (auto pair : {EntropyPair::kruzkov(), EntropyPair::square()}) {
      for (double c : {-0.9, -0.2, 0.0, 0.4, 1.1}) {
        CHECK(pair.U(c, c) == 0.0);
        CHECK(std::abs(pair.G(c, c)) < 1e-15);
        for (double u = -1.5; u <= 1.5; u += 0.1) {
          CHECK(pair.U(u + 0.05, c) + pair.U(u - 0.05, c) >= 2 * pair.U(u, c) - 1e-15);
        }
      }
    }
  }

  TEST_CASE("entropy flux is the compatible flux: dG/du = U'(u) pi u") {
    const double h = 1e-6;
    for (auto pair : {EntropyPair::kruzkov(), EntropyPair::square()}) {
      for (double c : {-0.5, 0.3}) {
        for (double u : {-0.8, -0.1, 0.6, 0.95}) {
          const double dG = (pair.G(u + h, c) - pair.G(u - h, c)) / (2 * h);
          const double dU = (pair.U(u + h, c) - pair.U(u - h, c)) / (2 * h);
          CHECK(dG == doctest::Approx(dU * kPi * u).epsilon(1e-7));
        }
      }
    }
  }

  TEST_CASE("tape entropy pairs agree with the scalar formulas") {
    Eigen::RowVectorXd uv(5);
    uv << -0.9, -0.3, 0.1, 0.5, 1.2;
    for (auto pair : {EntropyPair::kruzkov(), EntropyPair::square()}) {
      ad::Tape tape;
      const ad::NodeId u = tape.input(uv);
      const Eigen::MatrixXd U = tape.value(pair.U(tape, u, 0.2));
      const Eigen::MatrixXd G = tape.value(pair.G(tape, u, 0.2));
      for (int j = 0; j < 5; ++j) {
        CHECK(U(0, j) == doctest::Approx(pair.U(uv(j), 0.2)));
        CHECK(G(0, j) == doctest::Approx(pair.G(uv(j), 0.2)));
      }
    }
  }

  TEST_CASE("pointwise residual examples") {
    const ChartPoint<double> p{0.1, 0.2, 0.5};
    const Eigen::Vector4d xi(0.7, -0.3, 1.1, 0.4);
    for (auto pair : {EntropyPair::kruzkov(), EntropyPair::square()}) {
      CHECK(residual::r_int_point(0.35, 0.35, pair, xi, p) == 0.0);
      CHECK(residual::r_int_point(0.8, -0.2, pair, Eigen::Vector4d(2.0, 0, 0, 0), p) == 0.0);
    }
    CHECK(residual::r_int_point(1.0, 0.0, EntropyPair::kruzkov(), Eigen::Vector4d(1.0, -1.0, 0, 0), p) == 1.0);
    // lambda term: -(1/pi) G d_lambda xi.
    const double r = residual::r_int_point(1.0, 0.0, EntropyPair::kruzkov(), Eigen::Vector4d(1.0, 0, 2.0, 0), p);
    CHECK(r == doctest::Approx(-(1.0 / kPi) * (kPi / 2) * 2.0));
    CHECK_THROWS_AS(residual::r_int_point(1.0, 0.0, EntropyPair::kruzkov(), xi, ChartPoint<double>{0, 1, 0}),
                    SingularityError);
  }

  TEST_CASE("single-point internal loss by hand") {
    sampler::CollocationSet s;
    s.points = Eigen::Matrix3Xd(3, 1);
    s.points << 0.2, 0.0, 0.5;
    s.weights = Eigen::VectorXd::Constant(1, 0.5);
    Eigen::Matrix<double, 4, Eigen::Dynamic> m(4, 1);
    m << 0.6, -0.8, 0.3, 0.2;
    const auto xi = fields_from(m);
    const Eigen::RowVectorXd u = Eigen::RowVectorXd::Constant(1, 0.9);
    const double c = 0.1;
    const auto pair = EntropyPair::kruzkov();
    const double r = 0.5 * (-pair.U(0.9, c) * -0.8 - pair.G(0.9, c) * 0.3 / kPi);
    const double gl = 0.3 / (kPi * std::cos(0.0));
    const double gp = 2.0 / kPi * 0.2;
    const double den = 0.5 * (0.36 + gl * gl + gp * gp) + residual::kDenominatorEps;
    const double want = r > 0 ? r * r / den : 0.0;
    CHECK(want > 0.0);
    CHECK(residual::loss_int(u, xi, s, c, pair) == doctest::Approx(want).epsilon(1e-14));

    // Flip the sign of d_t xi: the residual turns negative and the loss vanishes.
    m(1, 0) = 0.8;
    m(2, 0) = -0.3;
    CHECK(residual::loss_int(u, fields_from(m), s, c, pair) == 0.0);
  }

  TEST_CASE("internal loss is invariant to scaling the test function") {
    Fixture f;
    const auto xi1 = residual::test_field_values(f.xi, f.pb.cutoff, f.pb.interior.points);
    residual::FieldValues xi2{2 * xi1.xi, 2 * xi1.xi_t, 2 * xi1.xi_lambda, 2 * xi1.xi_phi};
    const Eigen::RowVectorXd u = f.u.evaluate(f.pb.interior.points);
    for (double c : {-0.5, 0.0, 0.5}) {
      const double a = residual::loss_int(u, xi1, f.pb.interior, c, f.pb.pair);
      const double b = residual::loss_int(u, xi2, f.pb.interior, c, f.pb.pair);
      CHECK(b == doctest::Approx(a).epsilon(1e-6));
      CHECK(a >= 0.0);
    }
  }

  TEST_CASE("absolute-value boundary losses") {
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25 * 3.0);
    Eigen::RowVectorXd target(4);
    target << 1, -1, 1, -1;
    CHECK(residual::loss_abs(target, target, w) == 0.0);
    CHECK(residual::loss_abs((target.array() + 1.0).matrix(), target, w) == doctest::Approx(3.0));
    CHECK(residual::loss_abs((target.array() - 0.5).matrix(), target, w) == doctest::Approx(1.5));
    CHECK(residual::loss_abs(Eigen::RowVectorXd(), Eigen::RowVectorXd(), Eigen::VectorXd()) == 0.0);
  }

  TEST_CASE("problem data follow the exact solution") {
    Fixture f;
    for (Eigen::Index j = 0; j < f.pb.initial.size(); ++j) {
      CHECK(f.pb.u0(j) == (f.pb.initial.points(0, j) < 0.0 ? 1.0 : -1.0));
    }
    const auto moving = reference::make_experiment(reference::Experiment::Moving);
    const auto pm = trainer::build_problem(f.cfg, moving, 4);
    for (Eigen::Index j = 0; j < pm.boundary.size(); ++j) {
      if (pm.boundary.points(0, j) == -1.0) CHECK(pm.g(j) == 1.0);
    }
    const auto sine = reference::make_experiment(reference::Experiment::Sine);
    CHECK(trainer::build_problem(f.cfg, sine, 5).boundary.empty());
  }

  TEST_CASE("levels") {
    const auto l = residual::levels_for_range(-1.0, 1.0, 16, 3);
    CHECK(l.size() == 16);
    CHECK(l.c_min == doctest::Approx(-1.1));
    CHECK(l.c_max == doctest::Approx(1.1));
    for (double c : l.values) CHECK((c >= -1.1 && c <= 1.1));
    CHECK_THROWS_AS(residual::sample_levels(0, 1, 0, 1), ConfigError);
    residual::LevelSet empty;
    CHECK_THROWS_AS(empty.validate(), ConfigError);
  }

  TEST_CASE("max over levels") {
    Fixture f(1);
    const Eigen::RowVectorXd u_all = f.u.evaluate(f.pb.all_points);
    const auto xi = residual::test_field_values(f.xi, f.pb.cutoff, f.pb.interior.points);
    const Eigen::RowVectorXd u_int = u_all.head(f.pb.interior.size());

    // N_c = 1 reduces to the single-level loss.
    const auto one = residual::combine(u_all, xi, f.pb);
    const double single = residual::loss_int(u_int, xi, f.pb.interior, f.pb.levels.values[0], f.pb.pair);
    CHECK(one.L_int == doctest::Approx(single).epsilon(1e-12));
    CHECK(one.L_max == doctest::Approx(single + f.pb.rho * (one.L_tb + one.L_sb)).epsilon(1e-12));

    // Hand-built levels: the max picks the larger one; ties go to the lowest index.
    residual::Problem pb = f.pb;
    pb.levels = residual::LevelSet{-1.1, 1.1, {-0.9, -0.3, 0.2, 0.8}};
    const auto many = residual::combine(u_all, xi, pb);
    Eigen::Index best = 0;
    many.L_int_levels.maxCoeff(&best);
    CHECK(many.argmax == best);
    for (int k = 0; k < 4; ++k) {
      CHECK(many.L_int_levels(k) ==
            doctest::Approx(residual::loss_int(u_int, xi, pb.interior, pb.levels.values[k], pb.pair)).epsilon(1e-12));
    }
    // Adding a level with a smaller loss leaves the max unchanged.
    Eigen::Index worst = 0;
    many.L_int_levels.minCoeff(&worst);
    residual::Problem pb2 = pb;
    pb2.levels.values.push_back(pb.levels.values[static_cast<std::size_t>(worst)]);
    const auto more = residual::combine(u_all, xi, pb2);
    CHECK(more.L_max == many.L_max);
    CHECK(more.argmax == many.argmax);

    residual::Problem none = pb;
    none.levels.values.clear();
    CHECK_THROWS_AS(residual::combine(u_all, xi, none), ConfigError);
  }

  TEST_CASE("argmax is invariant to a positive rescaling of the adversary") {
    Fixture f(8);
    network::MlpParams scaled = f.xi;
    scaled.weights.back() *= 3.5;
    scaled.biases.back() *= 3.5;
    const auto a = residual::loss_total_max(f.u, f.xi, f.pb);
    const auto b = residual::loss_total_max(f.u, scaled, f.pb);
    CHECK(a.argmax == b.argmax);
    CHECK(b.L_int == doctest::Approx(a.L_int).epsilon(1e-6));
  }

  TEST_CASE("gradient entry points agree with the loss value") {
    Fixture f(4);
    const auto value = residual::loss_total_max(f.u, f.xi, f.pb);
    for (auto who : {residual::Player::Solution, residual::Player::Adversary}) {
      const auto g = residual::loss_total_max_grad(f.u, f.xi, f.pb, who);
      CHECK(g.loss.L_max == doctest::Approx(value.L_max).epsilon(1e-12));
      CHECK(g.loss.argmax == value.argmax);
      CHECK(g.grad.size() == (who == residual::Player::Solution ? f.u : f.xi).parameter_count());
    }
  }

  TEST_CASE("entropy-sign property (reduced size)") {
    const auto checks = suites::entropy_sign(10, 4096);
    for (const auto& c : checks) {
      INFO(c.construction << " " << c.measured);
      CHECK(c.pass);
    }
  }
}
