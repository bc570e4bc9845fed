#include "wpinn/geometry.hpp"

#include <algorithm>

namespace wpinn::geometry {

void Domain::validate() const {
  if (!(lambda.lo < lambda.hi) || !(phi.lo < phi.hi)) throw ConfigError("empty domain interval");
  if (lambda.lo < -1.0 || lambda.hi > 1.0) throw ConfigError("lambda range outside [-1,1]");
  if (phi.lo < -1.0 || phi.hi > 1.0) throw ConfigError("phi range outside [-1,1]");
  if (periodic_lambda && (lambda.lo != -1.0 || lambda.hi != 1.0)) {
    throw ConfigError("periodic lambda requires the full range [-1,1]");
  }
  if (!(T > 0.0)) throw ConfigError("final time must be positive");
}

double Domain::area() const {
  return kPi * lambda.length() * (std::sin(kPi / 2 * phi.hi) - std::sin(kPi / 2 * phi.lo));
}

bool Domain::has_phi_edge(double phi_edge) const { return std::abs(phi_edge) < 1.0; }

double Domain::lambda_edge_length() const { return kPi / 2 * phi.length(); }

double Domain::phi_edge_length(double phi_edge) const {
  return kPi * lambda.length() * chart_cosine(phi_edge);
}

double Domain::boundary_length() const {
  double total = 0.0;
  if (!periodic_lambda) total += 2.0 * lambda_edge_length();
  if (has_phi_edge(phi.lo)) total += phi_edge_length(phi.lo);
  if (has_phi_edge(phi.hi)) total += phi_edge_length(phi.hi);
  return total;
}

bool Domain::contains(const ChartPoint<double>& p, double tol) const {
  return lambda.contains(p.lambda, tol) && phi.contains(p.phi, tol) && p.t >= -tol &&
         p.t <= T + tol;
}

FluxSpec FluxSpec::burgers() {
  FluxSpec spec;
  spec.f3 = [](double u) { return kPi / 2 * u * u; };
  spec.df3 = [](double u) { return kPi * u; };
  spec.descriptor = "burgers: f1=f2=0, f3=(pi/2)u^2";
  return spec;
}

FluxSpec FluxSpec::constant_direction(double a, double b, double c) {
  FluxSpec spec;
  spec.f1 = [a](double u) { return a * u; };
  spec.f2 = [b](double u) { return b * u; };
  spec.f3 = [c](double u) { return c * u; };
  spec.df3 = [c](double) { return c; };
  spec.descriptor = "linear: Phi(u) = u (a, b, c)";
  return spec;
}

Eigen::Vector2d flux_components(double u, const ChartPoint<double>& p, const FluxSpec& spec) {
  const double lon = kPi * p.lambda;
  const double lat = kPi / 2 * p.phi;
  const double f1 = spec.f1(u);
  const double f2 = spec.f2(u);
  const double f3 = spec.f3(u);
  const double f_lambda =
      f1 * std::sin(lat) * std::cos(lon) + f2 * std::sin(lat) * std::sin(lon) + f3 * std::cos(lat);
  const double f_phi = -f1 * std::sin(lon) + f2 * std::cos(lon);
  return {f_lambda, f_phi};
}

double flux_divergence(double u_bar, const ChartPoint<double>& p, const FluxSpec& spec, double h) {
  const auto at = [&](double dl, double dp) {
    return flux_components(u_bar, {p.lambda + dl, p.phi + dp, p.t}, spec);
  };
  FieldJet<double> jet;
  const Eigen::Vector2d centre = at(0.0, 0.0);
  jet.f_lambda = centre(0);
  jet.f_phi = centre(1);
  jet.dlambda_f_lambda = (at(h, 0.0)(0) - at(-h, 0.0)(0)) / (2 * h);
  jet.dphi_f_phi = (at(0.0, h)(1) - at(0.0, -h)(1)) / (2 * h);
  return div_g(jet, p);
}

}  // namespace wpinn::geometry
