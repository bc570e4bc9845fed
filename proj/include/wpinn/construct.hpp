#pragma once

// Piecewise-linear ReLU constructions used by the approximation theory:
// the squaring network SQ, products Mult^2 and Mult^k, the hat-product
// partition of unity, and three-ReLU hat interpolation in time. Every
// stated bound can be measured with `verify_constructions`.

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wpinn::construct {

// Plain feed-forward ReLU network, linear output layer.
struct ReluNet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
  Eigen::Index width() const;
  Eigen::Index nonzeros() const;
};

// Unique s with (s-1) 2^(s-1) + 1 <= G <= s 2^s.
int teeth_parameter(int G);

// T^s(x) = min(x/2, 2^(1-2s) - x/2).
double tooth(int s, double x);
// R^{k,s} = T^s o ... o T^k, composed literally.
double compose_teeth(int k, int s, double x);
// Piecewise-linear interpolant of x^2 on the knots j / 2^m.
double dyadic_interpolant(int m, double x);

class SqNetwork {
 public:
  SqNetwork(int Q, int G);

  int Q() const { return Q_; }
  int G() const { return G_; }
  int s() const { return s_; }
  // Closed-form evaluation: f^{Qs} clamped to [0, 1].
  double operator()(double x) const;
  // Realized network: Q blocks of sawtooth layers plus a two-layer clamp.
  const ReluNet& network() const { return net_; }
  double evaluate_network(double x) const;

 private:
  int Q_, G_, s_;
  ReluNet net_;
};

// 2 (SQ((x+y)/2) - SQ(x/2) - SQ(y/2)), clamped to [0, 1].
class Mult2 {
 public:
  Mult2(int Q, int G) : sq_(Q, G) {}
  double operator()(double x, double y) const;
  const SqNetwork& sq() const { return sq_; }

 private:
  SqNetwork sq_;
};

// Mult^k(x) = Mult^2(Mult^{k-1}(x_1..x_{k-1}), x_k). Requires G^Q >= 4 k^4.
class MultK {
 public:
  MultK(int k, int Q, int G);
  int k() const { return k_; }
  double operator()(std::span<const double> x) const;

 private:
  int k_;
  Mult2 mult_;
};

// rho_l(x) = prod_j (1 - N |x_j - l_j / N|)_+ over the (N+1)^D grid nodes.
class Partition {
 public:
  Partition(int N, int D);
  int N() const { return N_; }
  int D() const { return D_; }
  long size() const;
  // Node index -> grid multi-index l in {0..N}^D.
  Eigen::VectorXi node(long index) const;
  double rho(const Eigen::VectorXi& l, const Eigen::VectorXd& x) const;
  double sum(const Eigen::VectorXd& x) const;

 private:
  int N_, D_;
};

// Hat functions delta_j, j = 2 .. N-1 (1-based as in the knots t_1 < ... < t_N),
// each a combination of three ReLUs.
class HatBasis {
 public:
  explicit HatBasis(std::vector<double> knots);
  const std::vector<double>& knots() const { return t_; }
  int size() const { return static_cast<int>(t_.size()); }
  double delta(int j, double u) const;
  // max_{j=3..N-1} |t_j - t_{j-1}|
  double mesh() const;

 private:
  std::vector<double> t_;
};

// Knots t_j = a + (j - 2) (b - a) / (N - 3), so t_2 = a and t_{N-1} = b.
HatBasis uniform_knots(int N, double a, double b);

// L_t(f)(u) = sum_{j=2}^{N-1} f(t_j) delta_j(u).
class SplineInterp {
 public:
  SplineInterp(HatBasis basis, const std::function<double(double)>& f);
  double operator()(double u) const;
  const HatBasis& basis() const { return basis_; }

 private:
  HatBasis basis_;
  std::vector<double> values_;
};

// sup |f(v) - f(y)| over v, y in [a, b], |v - y| <= mu, on an n-point grid.
double modulus_of_continuity(const std::function<double(double)>& f, double a, double b,
                             double mu, int n = 20001);

struct BoundCheck {
  std::string construction;
  std::string params;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// Every bound of the constructions over the standard parameter matrix.
std::vector<BoundCheck> verify_constructions();
void print_table(std::ostream& out, const std::vector<BoundCheck>& checks);

}  // namespace wpinn::construct
