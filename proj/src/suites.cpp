#include "wpinn/suites.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wpinn/autodiff.hpp"
#include "wpinn/errors.hpp"
#include "wpinn/geometry.hpp"
#include "wpinn/network.hpp"
#include "wpinn/reference.hpp"
#include "wpinn/residual.hpp"
#include "wpinn/sampler.hpp"
#include "wpinn/trainer.hpp"

namespace wpinn::suites {

namespace {

using geometry::ChartPoint;
using geometry::kPi;
using network::Activation;
using network::MlpParams;

void add(std::vector<Check>& out, std::string name, std::string params, double measured,
         double bound) {
  const bool pass = std::isfinite(measured) && measured <= bound;
  out.push_back({std::move(name), std::move(params), measured, bound, pass});
}

double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double scale = std::max(want.lpNorm<Eigen::Infinity>(), 1e-8);
  return (got - want).lpNorm<Eigen::Infinity>() / scale;
}

// Smallest |pre-activation| over the hidden layers, for kink avoidance.
double min_preactivation(const MlpParams& p, const Eigen::Matrix3Xd& points) {
  ad::Tape tape;
  const ad::NodeId x = tape.input(points);
  Eigen::MatrixXd h = tape.value(network::features(tape, x, p.periodic_lambda));
  double margin = INFINITY;
  for (std::size_t k = 0; k + 1 < p.layers(); ++k) {
    const Eigen::MatrixXd z = (p.weights[k] * h).colwise() + p.biases[k];
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return margin;
}

// Domain-shaped random points (lambda, phi, t).
Eigen::Matrix3Xd random_points(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> lam(-0.95, 0.95), phi(-0.45, 0.45), t(0.05, 0.95);
  Eigen::Matrix3Xd p(3, n);
  for (int j = 0; j < n; ++j) p.col(j) << lam(rng), phi(rng), t(rng);
  return p;
}

struct GradErrors {
  double params = 0.0;
  double inputs = 0.0;
  double nested = 0.0;
};

GradErrors check_network(const MlpParams& p, const Eigen::Matrix3Xd& points,
                         const Eigen::RowVectorXd& a) {
  constexpr double h = 1e-5;
  GradErrors err;
  const auto value = [&](const MlpParams& q, const Eigen::Matrix3Xd& x) {
    return (q.evaluate(x).array() * a.array()).sum();
  };

  ad::Tape tape;
  const ad::NodeId x = tape.input(points);
  const network::NetNodes nodes = network::declare(tape, p, true);
  const ad::NodeId u = network::build_forward(tape, p, nodes, x);
  const ad::NodeId weights = tape.constant(Eigen::MatrixXd(a));
  const ad::NodeId total = tape.sum(tape.mul(u, weights));

  // Parameters.
  const Eigen::VectorXd g = network::flat_grad(tape, total, nodes);
  const Eigen::VectorXd flat = p.flatten();
  Eigen::VectorXd fd(flat.size());
  MlpParams q = p;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    Eigen::VectorXd f = flat;
    f(i) += h;
    q.assign(f);
    const double up = value(q, points);
    f(i) -= 2.0 * h;
    q.assign(f);
    fd(i) = (up - value(q, points)) / (2.0 * h);
  }
  err.params = rel_error(g, fd);

  // Input derivatives, one coordinate at a time.
  ad::NodeId du_dt = -1;
  for (int c = 0; c < 3; ++c) {
    const ad::NodeId d = tape.input_grad_node(u, x, c);
    if (c == 2) du_dt = d;
    Eigen::VectorXd fd_in(points.cols());
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      Eigen::Matrix3Xd xp = points.col(j), xm = points.col(j);
      xp(c, 0) += h;
      xm(c, 0) -= h;
      fd_in(j) = (p.evaluate(xp)(0) - p.evaluate(xm)(0)) / (2.0 * h);
    }
    err.inputs = std::max(err.inputs, rel_error(tape.value(d).row(0).transpose(), fd_in));
  }

  // Nested: gradient in the parameters of sum_j a_j d_t u(x_j).
  const ad::NodeId nested = tape.sum(tape.mul(du_dt, weights));
  const Eigen::VectorXd gn = network::flat_grad(tape, nested, nodes);
  const auto nested_value = [&](const MlpParams& r) {
    ad::Tape t2;
    const ad::NodeId x2 = t2.input(points);
    const network::NetNodes n2 = network::declare(t2, r, false);
    const ad::NodeId u2 = network::build_forward(t2, r, n2, x2);
    const ad::NodeId d2 = t2.input_grad_node(u2, x2, 2);
    return (t2.value(d2).row(0).array() * a.array()).sum();
  };
  Eigen::VectorXd fdn(flat.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    Eigen::VectorXd f = flat;
    f(i) += h;
    q.assign(f);
    const double up = nested_value(q);
    f(i) -= 2.0 * h;
    q.assign(f);
    fdn(i) = (up - nested_value(q)) / (2.0 * h);
  }
  err.nested = rel_error(gn, fdn);
  return err;
}

// Both players' loss gradients against central differences of the loss.
std::pair<double, double> check_loss(residual::EntropyKind entropy, std::uint64_t seed) {
  trainer::TrainConfig cfg;
  cfg.N_int = 64;
  cfg.N_tb = 32;
  cfg.N_ini = 32;
  cfg.N_c = 4;
  cfg.entropy = entropy;
  cfg.experiment = reference::Experiment::Standing;
  const reference::ExperimentSpec spec = reference::make_experiment(cfg.experiment);
  const residual::Problem pb = trainer::build_problem(cfg, spec, seed);
  const MlpParams u = network::init_params(network::make_arch(6, 2, false), Activation::Tanh,
                                           false, seed + 11);
  MlpParams xi = network::init_params(network::make_arch(5, 2, false), Activation::Tanh, false,
                                      seed + 12);

  constexpr double h = 1e-6;
  const auto fd_of = [&](MlpParams base, bool is_u) {
    const Eigen::VectorXd flat = base.flatten();
    Eigen::VectorXd fd(flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      Eigen::VectorXd f = flat;
      f(i) += h;
      base.assign(f);
      const double up = is_u ? residual::loss_total_max(base, xi, pb).L_max
                             : residual::loss_total_max(u, base, pb).L_max;
      f(i) -= 2.0 * h;
      base.assign(f);
      const double dn = is_u ? residual::loss_total_max(base, xi, pb).L_max
                             : residual::loss_total_max(u, base, pb).L_max;
      fd(i) = (up - dn) / (2.0 * h);
    }
    return fd;
  };
  const auto gu = residual::loss_total_max_grad(u, xi, pb, residual::Player::Solution);
  const auto gx = residual::loss_total_max_grad(u, xi, pb, residual::Player::Adversary);
  return {rel_error(gu.grad, fd_of(u, true)), rel_error(gx.grad, fd_of(xi, false))};
}

}  // namespace

std::vector<Check> gradcheck(int configs) {
  std::vector<Check> out;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> width(3, 8), depth(1, 3);
  std::normal_distribution<double> normal(0.0, 0.3);
  const Activation acts[] = {Activation::Tanh, Activation::Sin, Activation::Relu};
  GradErrors worst[3];
  for (int k = 0; k < configs; ++k) {
    const int a = k % 3;
    const bool periodic = (k / 3) % 2 == 1;
    MlpParams p = network::init_params(network::make_arch(width(rng), depth(rng), periodic),
                                       acts[a], periodic, 1000 + static_cast<std::uint64_t>(k));
    for (auto& b : p.biases) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = normal(rng);
    }
    Eigen::Matrix3Xd points = random_points(rng, 5);
    if (acts[a] == Activation::Relu) {
      // Resample until every pre-activation is clear of its kink.
      for (int tries = 0; tries < 1000 && min_preactivation(p, points) < 1e-3; ++tries) {
        points = random_points(rng, 5);
      }
    }
    Eigen::RowVectorXd w(5);
    for (int j = 0; j < 5; ++j) w(j) = 1.0 + normal(rng);
    const GradErrors e = check_network(p, points, w);
    worst[a].params = std::max(worst[a].params, e.params);
    worst[a].inputs = std::max(worst[a].inputs, e.inputs);
    worst[a].nested = std::max(worst[a].nested, e.nested);
  }
  const std::string n = "configs=" + std::to_string(configs);
  for (int a = 0; a < 3; ++a) {
    const std::string act(network::to_string(acts[a]));
    add(out, "parameter gradient", n + " " + act, worst[a].params, 1e-6);
    add(out, "input derivative", n + " " + act, worst[a].inputs, 1e-6);
    add(out, "nested derivative", n + " " + act, worst[a].nested, 1e-5);
  }
  for (auto kind : {residual::EntropyKind::Kruzkov, residual::EntropyKind::Square}) {
    double su = 0.0, sx = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto [eu, ex] = check_loss(kind, seed);
      su = std::max(su, eu);
      sx = std::max(sx, ex);
    }
    const std::string e(residual::to_string(kind));
    add(out, "loss gradient (solution)", e, su, 1e-5);
    add(out, "loss gradient (adversary)", e, sx, 1e-5);
  }
  return out;
}

std::vector<Check> geometry() {
  std::vector<Check> out;
  geometry::Domain sphere;
  sphere.lambda = {-1.0, 1.0};
  sphere.phi = {-1.0, 1.0};
  sphere.T = 1.0;

  const sampler::CollocationSet grid = sampler::tensor_grid(sphere, 8, 4096, 1);
  add(out, "sphere area quadrature", "midpoint 8x4096",
      std::abs(grid.measure() - 4.0 * kPi) / (4.0 * kPi), 1e-6);
  add(out, "sphere area closed form", "chart rectangle",
      std::abs(sphere.area() - 4.0 * kPi) / (4.0 * kPi), 1e-12);

  // Uniform chart samples, integrand = surface density.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  constexpr int kMc = 100000;
  Eigen::VectorXd f(kMc);
  for (int i = 0; i < kMc; ++i) {
    f(i) = 4.0 * geometry::area_weight(ChartPoint<double>{unit(rng), unit(rng), 0.0});
  }
  const double mean = f.mean();
  const double sigma = std::sqrt((f.array() - mean).square().sum() / (kMc - 1) / kMc);
  add(out, "sphere area Monte Carlo", "n=1e5 |err| vs 3 sigma", std::abs(mean - 4.0 * kPi),
      3.0 * sigma);

  double norm_dev = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const ChartPoint<double> p{unit(rng), unit(rng), 0.0};
    norm_dev = std::max(norm_dev, std::abs(geometry::embed(p).norm() - 1.0));
  }
  add(out, "embedding unit norm", "n=1e4", norm_dev, 1e-12);

  const std::pair<std::string, geometry::FluxSpec> fluxes[] = {
      {"burgers", geometry::FluxSpec::burgers()},
      {"constant (0.3,-0.7,0.5)", geometry::FluxSpec::constant_direction(0.3, -0.7, 0.5)},
  };
  std::uniform_real_distribution<double> lat(-0.9, 0.9);
  for (const auto& [name, flux] : fluxes) {
    for (double ubar : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      constexpr int kN = 4000;
      Eigen::VectorXd d(kN);
      for (int i = 0; i < kN; ++i) {
        d(i) = geometry::flux_divergence(ubar, ChartPoint<double>{unit(rng), lat(rng), 0.0}, flux);
      }
      const double m = d.mean();
      const double s = std::sqrt((d.array() - m).square().sum() / (kN - 1) / kN);
      const std::string p = name + " u=" + std::to_string(ubar).substr(0, 5);
      add(out, "frozen-state divergence mean", p, std::abs(m), std::max(3.0 * s, 1e-9));
      add(out, "frozen-state divergence max", p, d.cwiseAbs().maxCoeff(), 1e-6);
    }
  }
  return out;
}

std::vector<Check> reference() {
  using reference::Experiment;
  using reference::GridBoundary;
  std::vector<Check> out;

  {
    const auto spec = reference::make_experiment(Experiment::Moving);
    const auto sol = reference::godunov_1d(spec.u0_1d, 1024, 1.0, 0.9, {GridBoundary::Outflow});
    const Eigen::VectorXd u = sol.final_state();
    int i = 0;
    while (i < u.size() && u(i) >= 0.5) ++i;
    const double x = -1.0 + i * sol.dx();
    add(out, "moving shock position", "cells=1024 t=1", std::abs(x - 0.5), sol.dx());
  }

  {
    const auto spec = reference::make_experiment(Experiment::Sine);
    constexpr double t = 0.25;
    const auto sol = reference::godunov_1d(spec.u0_1d, 4096, t, 0.9, {GridBoundary::Periodic});
    const Eigen::VectorXd u = sol.final_state();
    double l1 = 0.0;
    for (int i = 0; i < sol.cells(); ++i) {
      const double x = sol.center(i);
      // u = u0(x - u t); the map is monotone in u before the shock time.
      double lo = -1.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mid - spec.u0_1d(x - mid * t) > 0.0 ? hi : lo) = mid;
      }
      l1 += std::abs(u(i) - 0.5 * (lo + hi)) * sol.dx();
    }
    add(out, "sine characteristics L1", "cells=4096 t=0.25", l1, 1e-3);
  }

  for (Experiment e : {Experiment::Standing, Experiment::Moving, Experiment::Rarefaction,
                       Experiment::Sine}) {
    const auto spec = reference::make_experiment(e);
    const GridBoundary b =
        spec.boundary == reference::Boundary::Periodic ? GridBoundary::Periodic : GridBoundary::Outflow;
    const auto sol = reference::godunov_1d(spec.u0_1d, 1024, spec.T, 0.9, {b});
    const auto& d = sol.diagnostics;
    const std::string p = std::string(reference::to_string(e)) + " cells=1024";
    add(out, "maximum principle", p, d.worst_max_abs - d.initial_max_abs, 1e-12);
    add(out, "TV non-increase", p, d.worst_tv_increase, 1e-12);
    if (e != Experiment::Sine) {
      double l1 = 0.0;
      for (int i = 0; i < sol.cells(); ++i) {
        l1 += std::abs(sol.final_state()(i) - reference::exact_1d(e, sol.center(i), spec.T)) * sol.dx();
      }
      add(out, "closed form agreement L1", p, l1, 0.02);
    }
  }

  {
    const auto u0 = [](double x) { return -std::sin(kPi * x); };
    const auto v0 = [](double x) { return 0.5 * std::cos(2.0 * kPi * x) + (x < 0.2 ? 0.3 : -0.3); };
    const auto rep = reference::l1_contraction_check(u0, v0, 1024, 1.0);
    double worst = 0.0;
    for (std::size_t i = 1; i < rep.distance.size(); ++i) {
      worst = std::max(worst, rep.distance[i] - rep.distance[i - 1]);
    }
    add(out, "L1 contraction", "cells=1024 T=1", worst, 1e-12);
  }
  return out;
}

namespace {

// xi = omega n^2 >= 0 for a random tanh network n, as plain field values.
residual::FieldValues nonnegative_field(const network::CutoffSpec& cutoff,
                                        const Eigen::Matrix3Xd& points, std::uint64_t seed) {
  const MlpParams p = network::init_params(network::make_arch(10, 2, false), Activation::Tanh,
                                           false, seed);
  ad::Tape tape;
  const ad::NodeId x = tape.input(points);
  const network::NetNodes nodes = network::declare(tape, p, false);
  const ad::NodeId n = network::build_forward(tape, p, nodes, x);
  const Eigen::ArrayXXd nv = tape.value(n).array();
  const Eigen::ArrayXXd nl = tape.value(tape.input_grad_node(n, x, 0)).array();
  const Eigen::ArrayXXd np = tape.value(tape.input_grad_node(n, x, 1)).array();
  const Eigen::ArrayXXd nt = tape.value(tape.input_grad_node(n, x, 2)).array();
  const auto jet = network::cutoff_jet(cutoff, points);
  const Eigen::ArrayXXd w = jet.row(0).array(), wt = jet.row(1).array(),
                        wl = jet.row(2).array(), wp = jet.row(3).array();
  residual::FieldValues f;
  f.xi = (w * nv.square()).matrix();
  f.xi_t = (wt * nv.square() + 2.0 * w * nv * nt).matrix();
  f.xi_lambda = (wl * nv.square() + 2.0 * w * nv * nl).matrix();
  f.xi_phi = (wp * nv.square() + 2.0 * w * nv * np).matrix();
  return f;
}

}  // namespace

std::vector<Check> entropy_sign(int adversaries, long n_int) {
  std::vector<Check> out;
  const auto spec = reference::make_experiment(reference::Experiment::Standing);
  const geometry::Domain domain = spec.domain();
  network::CutoffSpec cutoff;
  cutoff.domain = domain;
  cutoff.vanish_in_time = true;
  residual::LevelSet levels;
  levels.values = {-0.5, 0.0, 0.5};
  const auto pair = residual::EntropyPair::kruzkov();

  double worst = -INFINITY;
  double control = -INFINITY;
  for (int k = 0; k < adversaries; ++k) {
    const auto s = sampler::sample_interior(domain, n_int, sampler::Generator::MonteCarlo,
                                            500 + static_cast<std::uint64_t>(k));
    const residual::FieldValues xi = nonnegative_field(cutoff, s.points, 900 + k);
    Eigen::RowVectorXd u(s.size()), bad(s.size());
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      u(j) = reference::exact_1d(reference::Experiment::Standing, s.points(0, j), s.points(2, j));
      // Stationary expansion shock: a weak solution that violates the entropy condition.
      bad(j) = s.points(0, j) < 0.0 ? -1.0 : 1.0;
    }
    worst = std::max(worst, residual::r_int_levels(u, xi, s.weights, levels, pair).maxCoeff());
    control = std::max(control, residual::r_int_levels(bad, xi, s.weights, levels, pair).maxCoeff());
  }
  const std::string p = "xi=" + std::to_string(adversaries) + " N_int=" + std::to_string(n_int);
  add(out, "standing shock max R_int", p, worst, 0.02);
  // The same test functions must detect the non-entropic shock.
  add(out, "expansion shock -max R_int", p, -control, -0.02);
  return out;
}

std::vector<Check> run(const std::string& tag) {
  if (tag == "construct") return construct::verify_constructions();
  if (tag == "gradcheck") return gradcheck();
  if (tag == "geometry") return geometry();
  if (tag == "reference") return reference();
  if (tag == "entropy") return entropy_sign();
  throw ConfigError("unknown verify suite '" + tag +
                    "' (expected construct, gradcheck, geometry, reference or entropy)");
}

bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

}  // namespace wpinn::suites
