#pragma once

// Unit sphere chart (lambda, phi) in [-1,1]^2 with longitude pi*lambda and
// latitude pi*phi/2, tangent-frame operators and geometry-compatible fluxes.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "wpinn/errors.hpp"

namespace wpinn::geometry {

inline constexpr double kPi = std::numbers::pi;
// Sampling and quadrature never go closer to a pole than this in phi.
inline constexpr double kPoleMargin = 1e-6;
inline constexpr double kPoleCosine = 1e-9;

template <typename Scalar = double>
struct ChartPoint {
  Scalar lambda{};
  Scalar phi{};
  Scalar t{};
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

struct Domain {
  Interval lambda{-1.0, 1.0};
  Interval phi{-0.5, 0.5};
  bool periodic_lambda = false;
  double T = 1.0;

  void validate() const;
  // Surface area of the chart rectangle.
  double area() const;
  // Total length of the non-periodic spatial boundary.
  double boundary_length() const;
  double lambda_edge_length() const;
  double phi_edge_length(double phi_edge) const;
  bool has_phi_edge(double phi_edge) const;
  bool contains(const ChartPoint<double>& p, double tol = 1e-12) const;
};

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> embed(const ChartPoint<Scalar>& p) {
  using std::cos;
  using std::sin;
  const Scalar lon = Scalar(kPi) * p.lambda;
  const Scalar lat = Scalar(kPi / 2) * p.phi;
  return {cos(lat) * cos(lon), cos(lat) * sin(lon), sin(lat)};
}

// Unit tangent vectors i_lambda, i_phi in R^3.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 2> tangent_frame(const ChartPoint<Scalar>& p) {
  using std::cos;
  using std::sin;
  const Scalar lon = Scalar(kPi) * p.lambda;
  const Scalar lat = Scalar(kPi / 2) * p.phi;
  Eigen::Matrix<Scalar, 3, 2> frame;
  frame << -sin(lon), -sin(lat) * cos(lon),
            cos(lon), -sin(lat) * sin(lon),
            Scalar(0), cos(lat);
  return frame;
}

template <typename Scalar>
Scalar chart_cosine(Scalar phi) {
  using std::cos;
  return cos(Scalar(kPi / 2) * phi);
}

template <typename Scalar>
void require_off_pole(Scalar phi) {
  using std::abs;
  if (abs(chart_cosine(phi)) < Scalar(kPoleCosine)) {
    throw SingularityError("chart evaluation too close to a pole");
  }
}

// Surface gradient of xi, as components along (i_lambda, i_phi).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> grad_g(Scalar dxi_dlambda, Scalar dxi_dphi, const ChartPoint<Scalar>& p) {
  require_off_pole(p.phi);
  return {dxi_dlambda / (Scalar(kPi) * chart_cosine(p.phi)), Scalar(2 / kPi) * dxi_dphi};
}

// A tangent field and the two partial derivatives its divergence needs.
template <typename Scalar = double>
struct FieldJet {
  Scalar f_lambda{};
  Scalar f_phi{};
  Scalar dlambda_f_lambda{};
  Scalar dphi_f_phi{};
};

template <typename Scalar>
Scalar div_g(const FieldJet<Scalar>& f, const ChartPoint<Scalar>& p) {
  using std::sin;
  require_off_pole(p.phi);
  const Scalar c = chart_cosine(p.phi);
  const Scalar s = sin(Scalar(kPi / 2) * p.phi);
  // d/dphi (f_phi cos(pi phi / 2))
  const Scalar d_phi_term = f.dphi_f_phi * c - f.f_phi * Scalar(kPi / 2) * s;
  return (Scalar(2 / kPi) * d_phi_term + Scalar(1 / kPi) * f.dlambda_f_lambda) / c;
}

// Surface density per unit dlambda dphi.
template <typename Scalar>
Scalar area_weight(const ChartPoint<Scalar>& p) {
  return Scalar(kPi * kPi / 2) * chart_cosine(p.phi);
}

// Ambient flux Phi(u) = f1 i1 + f2 i2 + f3 i3, independent of position.
struct FluxSpec {
  std::function<double(double)> f1 = [](double) { return 0.0; };
  std::function<double(double)> f2 = [](double) { return 0.0; };
  std::function<double(double)> f3 = [](double) { return 0.0; };
  std::function<double(double)> df3 = [](double) { return 0.0; };
  std::string descriptor;

  // f1 = f2 = 0, f3 = (pi/2) u^2: reduces to Burgers in lambda.
  static FluxSpec burgers();
  // Position-independent constants (a, b, c) times the given u-profile.
  static FluxSpec constant_direction(double a, double b, double c);
};

// Tangent components (f_lambda, f_phi) of n(x) x Phi(u).
Eigen::Vector2d flux_components(double u, const ChartPoint<double>& p, const FluxSpec& spec);

// Divergence of the frozen-state field x -> f_x(u_bar), using central
// differences of flux_components in the chart.
double flux_divergence(double u_bar, const ChartPoint<double>& p, const FluxSpec& spec,
                       double h = 1e-5);

}  // namespace wpinn::geometry
