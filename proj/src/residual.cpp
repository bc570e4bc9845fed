#include "wpinn/residual.hpp"

#include <cmath>
#include <random>
#include <string>

#include "wpinn/errors.hpp"

namespace wpinn::residual {

using geometry::kPi;

EntropyKind parse_entropy(std::string_view name) {
  if (name == "kruzkov") return EntropyKind::Kruzkov;
  if (name == "square") return EntropyKind::Square;
  throw ConfigError("unknown entropy '" + std::string(name) + "'");
}

std::string_view to_string(EntropyKind kind) {
  return kind == EntropyKind::Square ? "square" : "kruzkov";
}

double EntropyPair::U(double u, double c) const {
  return kind == EntropyKind::Kruzkov ? std::abs(u - c) : (u - c) * (u - c);
}

double EntropyPair::G(double u, double c) const {
  if (kind == EntropyKind::Kruzkov) {
    const double s = u > c ? 1.0 : (u < c ? -1.0 : 0.0);
    return kPi / 2 * s * (u * u - c * c);
  }
  return kPi * (2.0 / 3.0 * u * u * u - c * u * u + c * c * c / 3.0);
}

Eigen::RowVectorXd EntropyPair::U(const Eigen::RowVectorXd& u, double c) const {
  Eigen::RowVectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = U(u(i), c);
  return out;
}

Eigen::RowVectorXd EntropyPair::G(const Eigen::RowVectorXd& u, double c) const {
  Eigen::RowVectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = G(u(i), c);
  return out;
}

ad::NodeId EntropyPair::U(ad::Tape& tape, ad::NodeId u, double c) const {
  const ad::NodeId d = tape.add_scalar(u, -c);
  return kind == EntropyKind::Kruzkov ? tape.abs(d) : tape.square(d);
}

ad::NodeId EntropyPair::G(ad::Tape& tape, ad::NodeId u, double c) const {
  const ad::NodeId u2 = tape.square(u);
  if (kind == EntropyKind::Kruzkov) {
    const ad::NodeId s = tape.sign(tape.add_scalar(u, -c));
    return tape.scale(tape.mul(s, tape.add_scalar(u2, -c * c)), kPi / 2);
  }
  const ad::NodeId u3 = tape.mul(u2, u);
  const ad::NodeId poly = tape.sub(tape.scale(u3, 2.0 / 3.0), tape.scale(u2, c));
  return tape.scale(tape.add_scalar(poly, c * c * c / 3.0), kPi);
}

void LevelSet::validate() const {
  if (values.empty()) throw ConfigError("empty level set");
  if (!(c_min <= c_max)) throw ConfigError("level interval is reversed");
  for (double c : values) {
    if (c < c_min || c > c_max) throw ConfigError("level outside its interval");
  }
}

LevelSet sample_levels(double c_min, double c_max, int n_c, std::uint64_t seed) {
  if (n_c < 1) throw ConfigError("N_c must be at least 1");
  LevelSet set{c_min, c_max, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(c_min, c_max);
  set.values.reserve(static_cast<std::size_t>(n_c));
  for (int i = 0; i < n_c; ++i) set.values.push_back(dist(rng));
  set.validate();
  return set;
}

LevelSet levels_for_range(double u0_min, double u0_max, int n_c, std::uint64_t seed) {
  return sample_levels(u0_min - 0.1, u0_max + 0.1, n_c, seed);
}

double r_int_point(double u, double c, const EntropyPair& pair, const Eigen::Vector4d& xi,
                   const ChartPoint<double>& p) {
  geometry::require_off_pole(p.phi);
  const double cs = geometry::chart_cosine(p.phi);
  const double f_lambda = pair.G(u, c) * cs;
  const double f_phi = 0.0;
  return -pair.U(u, c) * xi(1) - xi(2) * f_lambda / (kPi * cs) - 2.0 / kPi * xi(3) * f_phi;
}

FieldValues test_field_values(const network::MlpParams& xi_net, const network::CutoffSpec& cutoff,
                              const Eigen::Matrix3Xd& points) {
  ad::Tape tape;
  const ad::NodeId coords = tape.input(points);
  const network::NetNodes nodes = network::declare(tape, xi_net, false);
  const network::TestFields f = network::eval_test_fn(tape, xi_net, nodes, cutoff, coords);
  return {tape.value(f.xi), tape.value(f.xi_t), tape.value(f.xi_lambda), tape.value(f.xi_phi)};
}

Eigen::RowVectorXd lambda_metric(const Eigen::Matrix3Xd& points) {
  Eigen::RowVectorXd m(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const ChartPoint<double> p{points(0, j), points(1, j), points(2, j)};
    geometry::require_off_pole(p.phi);
    m(j) = 1.0 / (kPi * geometry::chart_cosine(p.phi));
  }
  return m;
}

Eigen::VectorXd r_int_levels(const Eigen::RowVectorXd& u, const FieldValues& xi,
                             const Eigen::VectorXd& weights, const LevelSet& levels,
                             const EntropyPair& pair) {
  levels.validate();
  const Eigen::RowVectorXd wt = weights.transpose().cwiseProduct(xi.xi_t);
  const Eigen::RowVectorXd wl = weights.transpose().cwiseProduct(xi.xi_lambda) / kPi;
  Eigen::VectorXd out(static_cast<Eigen::Index>(levels.size()));
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double c = levels.values[k];
    out(static_cast<Eigen::Index>(k)) = -pair.U(u, c).dot(wt) - pair.G(u, c).dot(wl);
  }
  return out;
}

double normalization(const FieldValues& xi, const Eigen::VectorXd& weights,
                     const Eigen::RowVectorXd& metric) {
  const Eigen::ArrayXd w = weights.array();
  const Eigen::ArrayXd g_lambda = (xi.xi_lambda.cwiseProduct(metric)).transpose().array();
  const Eigen::ArrayXd g_phi = (2.0 / kPi) * xi.xi_phi.transpose().array();
  const Eigen::ArrayXd v = xi.xi.transpose().array();
  return (w * (v.square() + g_lambda.square() + g_phi.square())).sum() + kDenominatorEps;
}

double loss_int(const Eigen::RowVectorXd& u, const FieldValues& xi,
                const sampler::CollocationSet& s_int, double c, const EntropyPair& pair) {
  if (s_int.empty()) throw ConfigError("empty interior collocation set");
  const LevelSet one{c, c, {c}};
  const double r = r_int_levels(u, xi, s_int.weights, one, pair)(0);
  return loss_int_value(r, normalization(xi, s_int.weights, lambda_metric(s_int.points)));
}

double loss_abs(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& target,
                const Eigen::VectorXd& weights) {
  if (u.size() == 0) return 0.0;
  return (u - target).cwiseAbs().dot(weights.transpose());
}

void Problem::finalize() {
  if (interior.empty()) throw ConfigError("empty interior collocation set");
  if (initial.empty()) throw ConfigError("empty initial collocation set");
  if (u0.size() != initial.size()) throw ConfigError("initial data size mismatch");
  if (g.size() != boundary.size()) throw ConfigError("boundary data size mismatch");
  levels.validate();
  metric = lambda_metric(interior.points);
  all_points.resize(3, interior.size() + initial.size() + boundary.size());
  all_points << interior.points, initial.points, boundary.points;
}

LossBreakdown combine(const Eigen::RowVectorXd& u_all, const FieldValues& xi, const Problem& pb,
                      double* den) {
  if (pb.all_points.cols() == 0) throw ConfigError("problem not finalized");
  if (u_all.size() != pb.all_points.cols()) throw ContractError("solution values size mismatch");
  const Eigen::Index ni = pb.interior.size();
  const Eigen::Index n0 = pb.initial.size();
  const Eigen::Index nb = pb.boundary.size();

  const Eigen::VectorXd r = r_int_levels(u_all.head(ni), xi, pb.interior.weights, pb.levels, pb.pair);
  const double d = normalization(xi, pb.interior.weights, pb.metric);
  if (den) *den = d;

  LossBreakdown lb;
  lb.L_int_levels.resize(r.size());
  for (Eigen::Index k = 0; k < r.size(); ++k) lb.L_int_levels(k) = loss_int_value(r(k), d);
  // Strict comparison keeps the lowest index on ties.
  lb.argmax = 0;
  for (Eigen::Index k = 1; k < r.size(); ++k) {
    if (lb.L_int_levels(k) > lb.L_int_levels(lb.argmax)) lb.argmax = static_cast<int>(k);
  }
  lb.L_int = lb.L_int_levels(lb.argmax);
  lb.L_tb = loss_abs(u_all.segment(ni, n0), pb.u0, pb.initial.weights);
  lb.L_sb = nb > 0 ? loss_abs(u_all.tail(nb), pb.g, pb.boundary.weights) : 0.0;
  lb.L_max = lb.L_int + pb.rho * (lb.L_tb + lb.L_sb);
  if (!std::isfinite(lb.L_max)) {
    throw NumericalError("non-finite loss at level " + std::to_string(lb.argmax));
  }
  return lb;
}

LossBreakdown loss_total_max(const network::MlpParams& u_net, const network::MlpParams& xi_net,
                             const Problem& pb) {
  return combine(u_net.evaluate(pb.all_points),
                 test_field_values(xi_net, pb.cutoff, pb.interior.points), pb);
}

namespace {

void require_finite(const LossGradient& g) {
  if (!g.grad.allFinite()) {
    throw NumericalError("non-finite gradient at level " + std::to_string(g.loss.argmax));
  }
}

}  // namespace

LossGradient adversary_grad(const Eigen::RowVectorXd& u_all, const network::MlpParams& xi_net,
                            const Problem& pb) {
  ad::Tape tape;
  const ad::NodeId coords = tape.input(pb.interior.points);
  const network::NetNodes nodes = network::declare(tape, xi_net, true);
  const network::TestFields f = network::eval_test_fn(tape, xi_net, nodes, pb.cutoff, coords);
  const FieldValues xi{tape.value(f.xi), tape.value(f.xi_t), tape.value(f.xi_lambda),
                       tape.value(f.xi_phi)};

  LossGradient out;
  out.loss = combine(u_all, xi, pb);
  const double c = pb.levels.values[static_cast<std::size_t>(out.loss.argmax)];
  const Eigen::RowVectorXd w = pb.interior.weights.transpose();
  const Eigen::RowVectorXd u = u_all.head(pb.interior.size());

  // The boundary terms do not depend on the adversary.
  const ad::NodeId a = tape.constant(ad::Matrix(-w.cwiseProduct(pb.pair.U(u, c))));
  const ad::NodeId b = tape.constant(ad::Matrix(-w.cwiseProduct(pb.pair.G(u, c)) / kPi));
  const ad::NodeId r = tape.add(tape.sum(tape.mul(a, f.xi_t)), tape.sum(tape.mul(b, f.xi_lambda)));
  const ad::NodeId num = tape.square(tape.posclip(r));

  const ad::NodeId w_node = tape.constant(ad::Matrix(w));
  const ad::NodeId wl = tape.constant(ad::Matrix(w.cwiseProduct(pb.metric.cwiseProduct(pb.metric))));
  ad::NodeId den = tape.sum(tape.mul(w_node, tape.square(f.xi)));
  den = tape.add(den, tape.sum(tape.mul(wl, tape.square(f.xi_lambda))));
  den = tape.add(den,
                 tape.scale(tape.sum(tape.mul(w_node, tape.square(f.xi_phi))), 4.0 / (kPi * kPi)));
  den = tape.add_scalar(den, kDenominatorEps);
  out.grad = network::flat_grad(tape, tape.div(num, den), nodes);
  require_finite(out);
  return out;
}

LossGradient solution_grad(const network::MlpParams& u_net, const FieldValues& xi,
                           const Problem& pb) {
  const Eigen::Index ni = pb.interior.size();
  const Eigen::Index n0 = pb.initial.size();
  const Eigen::Index nb = pb.boundary.size();

  ad::Tape tape;
  const ad::NodeId coords = tape.constant(ad::Matrix(pb.all_points));
  const network::NetNodes nodes = network::declare(tape, u_net, true);
  const ad::NodeId u_all = network::build_forward(tape, u_net, nodes, coords);

  LossGradient out;
  double den = 0.0;
  out.loss = combine(tape.value(u_all), xi, pb, &den);
  const double c = pb.levels.values[static_cast<std::size_t>(out.loss.argmax)];
  const Eigen::RowVectorXd w = pb.interior.weights.transpose();

  const ad::NodeId u = tape.cols(u_all, 0, ni);
  const ad::NodeId a = tape.constant(ad::Matrix(-w.cwiseProduct(xi.xi_t)));
  const ad::NodeId b = tape.constant(ad::Matrix(-w.cwiseProduct(xi.xi_lambda) / kPi));
  const ad::NodeId r = tape.add(tape.sum(tape.mul(a, pb.pair.U(tape, u, c))),
                                tape.sum(tape.mul(b, pb.pair.G(tape, u, c))));
  ad::NodeId loss = tape.scale(tape.square(tape.posclip(r)), 1.0 / den);

  const auto fit = [&](Eigen::Index begin, Eigen::Index n, const Eigen::RowVectorXd& target,
                       const Eigen::VectorXd& weights) {
    const ad::NodeId diff = tape.sub(tape.cols(u_all, begin, n), tape.constant(ad::Matrix(target)));
    return tape.sum(tape.mul(tape.constant(ad::Matrix(weights.transpose())), tape.abs(diff)));
  };
  ad::NodeId boundary = fit(ni, n0, pb.u0, pb.initial.weights);
  if (nb > 0) boundary = tape.add(boundary, fit(ni + n0, nb, pb.g, pb.boundary.weights));
  loss = tape.add(loss, tape.scale(boundary, pb.rho));
  out.grad = network::flat_grad(tape, loss, nodes);
  require_finite(out);
  return out;
}

LossGradient loss_total_max_grad(const network::MlpParams& u_net,
                                 const network::MlpParams& xi_net, const Problem& pb,
                                 Player wrt) {
  if (wrt == Player::Adversary) return adversary_grad(u_net.evaluate(pb.all_points), xi_net, pb);
  return solution_grad(u_net, test_field_values(xi_net, pb.cutoff, pb.interior.points), pb);
}

}  // namespace wpinn::residual
