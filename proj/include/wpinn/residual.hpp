#pragma once

// Entropy pairs, the weak-form entropy residual and the wPINN loss terms.
//
// For the reduced Burgers flux (f1 = f2 = 0, f3 = (pi/2) u^2) the entropy
// flux has F_lambda = G(u, c) cos(pi phi / 2) and F_phi = 0, so the residual
// integrand is
//
//   r = -U(u, c) d_t xi - (1/pi) G(u, c) d_lambda xi.
//
// Integrals are collocation sums sum_i w_i f(x_i) against dV_g dt.

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

#include "wpinn/autodiff.hpp"
#include "wpinn/geometry.hpp"
#include "wpinn/network.hpp"
#include "wpinn/sampler.hpp"

namespace wpinn::residual {

using geometry::ChartPoint;

enum class EntropyKind { Kruzkov, Square };

EntropyKind parse_entropy(std::string_view name);
std::string_view to_string(EntropyKind kind);

// U(u, c) and the reduced entropy-flux coefficient G(u, c).
//   kruzkov: U = |u - c|,   G = (pi/2) sgn(u - c) (u^2 - c^2)
//   square:  U = (u - c)^2, G = pi (2u^3/3 - c u^2 + c^3/3)
struct EntropyPair {
  EntropyKind kind = EntropyKind::Kruzkov;

  static EntropyPair kruzkov() { return {EntropyKind::Kruzkov}; }
  static EntropyPair square() { return {EntropyKind::Square}; }

  double U(double u, double c) const;
  double G(double u, double c) const;
  // Batched over a row of states.
  Eigen::RowVectorXd U(const Eigen::RowVectorXd& u, double c) const;
  Eigen::RowVectorXd G(const Eigen::RowVectorXd& u, double c) const;

  // Differentiable versions on a 1 x N tape node.
  ad::NodeId U(ad::Tape& tape, ad::NodeId u, double c) const;
  ad::NodeId G(ad::Tape& tape, ad::NodeId u, double c) const;
};

struct LevelSet {
  double c_min = -1.0;
  double c_max = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  void validate() const;
};

// N_c levels drawn uniformly from [c_min, c_max].
LevelSet sample_levels(double c_min, double c_max, int n_c, std::uint64_t seed);
// Levels from [min u0 - 0.1, max u0 + 0.1].
LevelSet levels_for_range(double u0_min, double u0_max, int n_c, std::uint64_t seed);

// Pointwise integrand; `xi` holds (xi, d_t, d_lambda, d_phi).
double r_int_point(double u, double c, const EntropyPair& pair, const Eigen::Vector4d& xi,
                   const ChartPoint<double>& p);

// Plain-value test-function fields on a collocation set, rows as in TestFields.
struct FieldValues {
  Eigen::RowVectorXd xi, xi_t, xi_lambda, xi_phi;
};

// Values of the adversary and of the solution network on the collocation sets.
FieldValues test_field_values(const network::MlpParams& xi_net, const network::CutoffSpec& cutoff,
                              const Eigen::Matrix3Xd& points);

// 1 / (pi cos(pi phi / 2)) per interior point; throws near the poles.
Eigen::RowVectorXd lambda_metric(const Eigen::Matrix3Xd& points);

// Integral of the raw residual for every level: R_c = sum_i w_i r_c(x_i).
Eigen::VectorXd r_int_levels(const Eigen::RowVectorXd& u, const FieldValues& xi,
                             const Eigen::VectorXd& weights, const LevelSet& levels,
                             const EntropyPair& pair);

// sum_i w_i (xi^2 + g_lambda^2 + g_phi^2) + kDenominatorEps
double normalization(const FieldValues& xi, const Eigen::VectorXd& weights,
                     const Eigen::RowVectorXd& metric);

inline constexpr double kDenominatorEps = 1e-8;

// (R)_+^2 / den for a raw residual integral R.
inline double loss_int_value(double r_int, double den) {
  const double pos = r_int > 0.0 ? r_int : 0.0;
  return pos * pos / den;
}

// Single-level internal loss from plain values.
double loss_int(const Eigen::RowVectorXd& u, const FieldValues& xi,
                const sampler::CollocationSet& s_int, double c, const EntropyPair& pair);

// sum_i w_i |u_i - target_i|; zero for an empty set.
double loss_abs(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& target,
                const Eigen::VectorXd& weights);

// Everything the min-max loop needs, fixed for a run.
struct Problem {
  sampler::CollocationSet interior;
  sampler::CollocationSet initial;
  sampler::CollocationSet boundary;  // may be empty
  Eigen::RowVectorXd u0;             // data at the initial points
  Eigen::RowVectorXd g;              // data at the boundary points
  Eigen::RowVectorXd metric;         // lambda_metric(interior.points)
  Eigen::Matrix3Xd all_points;       // interior | initial | boundary
  network::CutoffSpec cutoff;
  EntropyPair pair;
  LevelSet levels;
  double rho = 10.0;

  // Fills metric and all_points from the three sets.
  void finalize();
};

struct LossBreakdown {
  double L_max = 0.0;
  double L_int = 0.0;  // at the maximizing level
  double L_tb = 0.0;
  double L_sb = 0.0;
  int argmax = 0;
  Eigen::VectorXd L_int_levels;
};

// max over levels of L_int(c) + rho (L_tb + L_sb); ties go to the lowest level.
LossBreakdown loss_total_max(const network::MlpParams& u_net, const network::MlpParams& xi_net,
                             const Problem& problem);

enum class Player { Solution, Adversary };

struct LossGradient {
  LossBreakdown loss;
  Eigen::VectorXd grad;  // flat layout of the selected player's MlpParams
};

// Loss terms from the solution values on all_points and the adversary fields.
// `den` receives the normalization denominator.
LossBreakdown combine(const Eigen::RowVectorXd& u_all, const FieldValues& xi, const Problem& problem,
                      double* den = nullptr);

// Gradient with respect to the adversary for fixed solution values u_all.
LossGradient adversary_grad(const Eigen::RowVectorXd& u_all, const network::MlpParams& xi_net,
                            const Problem& problem);
// Gradient with respect to the solution network for fixed adversary fields.
LossGradient solution_grad(const network::MlpParams& u_net, const FieldValues& xi,
                           const Problem& problem);

// Value of loss_total_max and its gradient with respect to one player,
// holding the other player fixed. The gradient flows through the maximizing
// level only.
LossGradient loss_total_max_grad(const network::MlpParams& u_net,
                                 const network::MlpParams& xi_net, const Problem& problem,
                                 Player wrt);

}  // namespace wpinn::residual
