#include "wpinn/construct.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "wpinn/errors.hpp"

namespace wpinn::construct {

Eigen::VectorXd ReluNet::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = x;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    h = weights[k] * h + biases[k];
    if (k + 1 < weights.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

Eigen::Index ReluNet::width() const {
  Eigen::Index w = 0;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) w = std::max(w, weights[k].rows());
  return w;
}

Eigen::Index ReluNet::nonzeros() const {
  Eigen::Index n = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    n += (weights[k].array() != 0.0).count() + (biases[k].array() != 0.0).count();
  }
  return n;
}

int teeth_parameter(int G) {
  if (G < 1) throw ConfigError("G must be at least 1");
  for (int s = 1; s < 31; ++s) {
    const long lo = static_cast<long>(s - 1) * (1L << (s - 1)) + 1;
    const long hi = static_cast<long>(s) * (1L << s);
    if (lo <= G && G <= hi) return s;
  }
  throw ConfigError("G too large");
}

double tooth(int s, double x) {
  return std::min(x / 2.0, std::ldexp(1.0, 1 - 2 * s) - x / 2.0);
}

double compose_teeth(int k, int s, double x) {
  for (int i = k; i <= s; ++i) x = tooth(i, x);
  return x;
}

double dyadic_interpolant(int m, double x) {
  const double n = std::ldexp(1.0, m);
  const double y = std::clamp(x, 0.0, 1.0) * n;
  const double j = std::min(std::floor(y), n - 1.0);
  const double t = y - j;
  return ((1.0 - t) * j * j + t * (j + 1.0) * (j + 1.0)) / (n * n);
}

namespace {

// i-fold tent map on [0, 1] as one hidden layer: sum_j c_j relu(y - j / 2^i).
double tent_coefficient(int i, int j) {
  if (j == 0) return std::ldexp(1.0, i);
  return (j % 2 == 0 ? 1.0 : -1.0) * std::ldexp(1.0, i + 1);
}

}  // namespace

SqNetwork::SqNetwork(int Q, int G) : Q_(Q), G_(G), s_(teeth_parameter(G)) {
  if (Q < 1) throw ConfigError("Q must be at least 1");
  const int s = s_;
  const auto offset = [](int i) { return (1 << i) - 2; };  // first neuron of sawtooth i
  const int saw = (1 << (s + 1)) - 2;
  const int carry = saw;
  const int width = saw + 1;

  // Block b takes z_b = R^{(b-1)s}(x) on [0, a_b], a_b = 4^{-(b-1)s}, and
  // R^{(b-1)s+i}(x) = (a_b / 4^i) g_i(z_b / a_b).
  const auto a = [&](int b) { return std::ldexp(1.0, -2 * (b - 1) * s); };
  const auto sawtooth_bias = [&](Eigen::VectorXd& bias) {
    for (int i = 1; i <= s; ++i) {
      for (int j = 0; j < (1 << i); ++j) bias(offset(i) + j) = -std::ldexp(static_cast<double>(j), -i);
    }
  };
  // Linear combination sum_i R^{(b-1)s+i}(x) of block b's neurons.
  const auto block_sum = [&](int b, Eigen::Ref<Eigen::RowVectorXd> row, double sign) {
    for (int i = 1; i <= s; ++i) {
      for (int j = 0; j < (1 << i); ++j) {
        row(offset(i) + j) += sign * a(b) * std::ldexp(1.0, -2 * i) * tent_coefficient(i, j);
      }
    }
  };

  Eigen::MatrixXd W0 = Eigen::MatrixXd::Zero(width, 1);
  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(width);
  W0.topRows(saw).setConstant(1.0);
  W0(carry, 0) = 1.0;
  sawtooth_bias(b0);
  net_.weights.push_back(W0);
  net_.biases.push_back(b0);

  for (int b = 2; b <= Q; ++b) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(width, width);
    Eigen::VectorXd bias = Eigen::VectorXd::Zero(width);
    // z_b / a_b is the last sawtooth of block b-1 rescaled: weights c_{s,j}.
    for (int r = 0; r < saw; ++r) {
      for (int j = 0; j < (1 << s); ++j) W(r, offset(s) + j) = tent_coefficient(s, j);
    }
    sawtooth_bias(bias);
    W(carry, carry) = 1.0;
    Eigen::RowVectorXd row = W.row(carry);
    block_sum(b - 1, row, -1.0);
    W.row(carry) = row;
    net_.weights.push_back(W);
    net_.biases.push_back(bias);
  }

  // 1 - f^{Qs}(x), then the clamp (1 - (1 - u)_+)_+.
  Eigen::MatrixXd Wc = Eigen::MatrixXd::Zero(1, width);
  Wc(0, carry) = -1.0;
  Eigen::RowVectorXd row = Wc.row(0);
  block_sum(Q, row, 1.0);
  Wc.row(0) = row;
  net_.weights.push_back(Wc);
  net_.biases.push_back(Eigen::VectorXd::Ones(1));
  net_.weights.push_back(-Eigen::MatrixXd::Ones(1, 1));
  net_.biases.push_back(Eigen::VectorXd::Ones(1));
  net_.weights.push_back(Eigen::MatrixXd::Ones(1, 1));
  net_.biases.push_back(Eigen::VectorXd::Zero(1));
}

double SqNetwork::operator()(double x) const {
  return std::clamp(dyadic_interpolant(Q_ * s_, x), 0.0, 1.0);
}

double SqNetwork::evaluate_network(double x) const {
  return net_.evaluate(Eigen::VectorXd::Constant(1, x))(0);
}

double Mult2::operator()(double x, double y) const {
  const double v = 2.0 * (sq_((x + y) / 2.0) - sq_(x / 2.0) - sq_(y / 2.0));
  return std::clamp(v, 0.0, 1.0);
}

MultK::MultK(int k, int Q, int G) : k_(k), mult_(Q, G) {
  if (k < 2) throw ConfigError("Mult^k needs k >= 2");
  const double lhs = std::pow(static_cast<double>(G), Q);
  const double rhs = 4.0 * std::pow(static_cast<double>(k), 4);
  if (lhs < rhs) {
    std::ostringstream msg;
    msg << "Mult^" << k << " requires G^Q >= 4k^4, got G^Q = " << lhs << " < " << rhs;
    throw ConfigError(msg.str());
  }
}

double MultK::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != k_) throw ContractError("Mult^k arity mismatch");
  double acc = mult_(x[0], x[1]);
  for (int i = 2; i < k_; ++i) acc = mult_(acc, x[static_cast<std::size_t>(i)]);
  return acc;
}

Partition::Partition(int N, int D) : N_(N), D_(D) {
  if (N < 1) throw ConfigError("partition needs N >= 1");
  if (D < 1) throw ConfigError("partition needs D >= 1");
}

long Partition::size() const {
  long n = 1;
  for (int d = 0; d < D_; ++d) n *= N_ + 1;
  return n;
}

Eigen::VectorXi Partition::node(long index) const {
  Eigen::VectorXi l(D_);
  for (int d = 0; d < D_; ++d) {
    l(d) = static_cast<int>(index % (N_ + 1));
    index /= N_ + 1;
  }
  return l;
}

double Partition::rho(const Eigen::VectorXi& l, const Eigen::VectorXd& x) const {
  double v = 1.0;
  for (int d = 0; d < D_; ++d) {
    v *= std::max(0.0, 1.0 - N_ * std::abs(x(d) - static_cast<double>(l(d)) / N_));
  }
  return v;
}

double Partition::sum(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (long i = 0; i < size(); ++i) total += rho(node(i), x);
  return total;
}

HatBasis::HatBasis(std::vector<double> knots) : t_(std::move(knots)) {
  if (t_.size() < 4) throw ConfigError("hat basis needs at least 4 knots");
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw ConfigError("knots must be strictly increasing");
  }
}

double HatBasis::delta(int j, double u) const {
  if (j < 2 || j > size() - 1) throw ContractError("hat index out of range");
  const auto t = [&](int k) { return t_[static_cast<std::size_t>(k - 1)]; };
  const auto relu = [](double v) { return v > 0.0 ? v : 0.0; };
  const double left = t(j) - t(j - 1);
  const double right = t(j + 1) - t(j);
  return relu(u - t(j - 1)) / left - (t(j + 1) - t(j - 1)) / (right * left) * relu(u - t(j)) +
         relu(u - t(j + 1)) / right;
}

double HatBasis::mesh() const {
  double m = 0.0;
  for (int j = 3; j <= size() - 1; ++j) {
    m = std::max(m, t_[static_cast<std::size_t>(j - 1)] - t_[static_cast<std::size_t>(j - 2)]);
  }
  return m;
}

HatBasis uniform_knots(int N, double a, double b) {
  if (N < 4) throw ConfigError("need at least 4 knots");
  std::vector<double> t(static_cast<std::size_t>(N));
  for (int j = 1; j <= N; ++j) {
    t[static_cast<std::size_t>(j - 1)] = a + (j - 2) * (b - a) / (N - 3);
  }
  return HatBasis(std::move(t));
}

SplineInterp::SplineInterp(HatBasis basis, const std::function<double(double)>& f)
    : basis_(std::move(basis)) {
  for (int j = 2; j <= basis_.size() - 1; ++j) {
    values_.push_back(f(basis_.knots()[static_cast<std::size_t>(j - 1)]));
  }
}

double SplineInterp::operator()(double u) const {
  double v = 0.0;
  for (int j = 2; j <= basis_.size() - 1; ++j) {
    v += values_[static_cast<std::size_t>(j - 2)] * basis_.delta(j, u);
  }
  return v;
}

double modulus_of_continuity(const std::function<double(double)>& f, double a, double b,
                             double mu, int n) {
  if (n < 2 || !(b > a)) throw ConfigError("bad modulus grid");
  const double h = (b - a) / (n - 1);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = f(a + i * h);
  const auto window = static_cast<std::size_t>(std::floor(mu / h + 1e-9));
  // Sliding-window max - min with monotone deques.
  std::deque<std::size_t> hi, lo;
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    while (!hi.empty() && v[hi.back()] <= v[i]) hi.pop_back();
    while (!lo.empty() && v[lo.back()] >= v[i]) lo.pop_back();
    hi.push_back(i);
    lo.push_back(i);
    while (hi.front() + window < i) hi.pop_front();
    while (lo.front() + window < i) lo.pop_front();
    best = std::max(best, v[hi.front()] - v[lo.front()]);
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

std::string params_qg(int Q, int G) {
  return "Q=" + std::to_string(Q) + " G=" + std::to_string(G);
}

void add(std::vector<BoundCheck>& out, std::string name, std::string params, double measured,
         double bound) {
  out.push_back({std::move(name), std::move(params), measured, bound, measured <= bound});
}

}  // namespace

std::vector<BoundCheck> verify_constructions() {
  std::vector<BoundCheck> out;
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int Q : {2, 3, 4, 6}) {
    for (int G : {2, 4}) {
      const SqNetwork sq(Q, G);
      const double eps = std::pow(static_cast<double>(G), -Q);
      const int m = Q * sq.s();

      double err = 0.0;
      double net_err = 0.0;
      constexpr int kGrid = 100000;
      for (int i = 0; i <= kGrid; ++i) {
        const double x = static_cast<double>(i) / kGrid;
        err = std::max(err, std::abs(sq(x) - x * x));
        if (i % 10 == 0) net_err = std::max(net_err, std::abs(sq.evaluate_network(x) - sq(x)));
      }
      for (int i = 0; i < 1000; ++i) {
        const double x = unit(rng);
        err = std::max(err, std::abs(sq(x) - x * x));
        net_err = std::max(net_err, std::abs(sq.evaluate_network(x) - sq(x)));
      }
      add(out, "SQ sup error", params_qg(Q, G), err, eps);
      add(out, "SQ network = interpolant", params_qg(Q, G), net_err, 1e-12);
      add(out, "SQ nonzero parameters", params_qg(Q, G),
          static_cast<double>(sq.network().nonzeros()), 12.0 * Q * G * G);

      // Sup of |SQ' - 2x| over each open cell, slope taken inside the cell.
      double slope_err = 0.0;
      const double cell = std::ldexp(1.0, -m);
      for (long j = 0; j < (1L << m); ++j) {
        const double left = static_cast<double>(j) * cell;
        const double h = cell / 4.0;
        const double slope = (sq(left + 3.0 * h) - sq(left + h)) / (2.0 * h);
        slope_err = std::max({slope_err, std::abs(slope - 2.0 * left),
                              std::abs(slope - 2.0 * (left + cell))});
      }
      add(out, "SQ derivative error", params_qg(Q, G), slope_err, std::sqrt(eps));

      // f^{i-1} - f^i = R^i, composing the tooth maps literally.
      double tooth_err = 0.0;
      for (int i = 1; i <= std::min(m, 10); ++i) {
        for (int g = 0; g <= 2048; ++g) {
          const double x = g / 2048.0;
          const double lhs = (i == 1 ? x : dyadic_interpolant(i - 1, x)) - dyadic_interpolant(i, x);
          tooth_err = std::max(tooth_err, std::abs(lhs - compose_teeth(1, i, x)));
        }
      }
      add(out, "SQ tooth composition", params_qg(Q, G), tooth_err, 1e-14);

      const Mult2 mult(Q, G);
      double m2 = 0.0;
      double zero = 0.0;
      for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        for (int j = 0; j <= 100; ++j) {
          const double y = j / 100.0;
          m2 = std::max(m2, std::abs(mult(x, y) - x * y));
        }
        zero = std::max({zero, std::abs(mult(x, 0.0)), std::abs(mult(0.0, x))});
      }
      for (int i = 0; i < 1000; ++i) {
        const double x = unit(rng), y = unit(rng);
        m2 = std::max(m2, std::abs(mult(x, y) - x * y));
      }
      add(out, "Mult2 sup error", params_qg(Q, G), m2, 6.0 * eps);
      add(out, "Mult2 zero edges", params_qg(Q, G), zero, 0.0);

      for (int k : {2, 3, 4}) {
        if (std::pow(static_cast<double>(G), Q) < 4.0 * std::pow(k, 4)) continue;
        const MultK mk(k, Q, G);
        const std::string p = params_qg(Q, G) + " k=" + std::to_string(k);
        const int per_axis = static_cast<int>(std::ceil(std::pow(1e4, 1.0 / k)));
        long total = 1;
        for (int d = 0; d < k; ++d) total *= per_axis + 1;
        std::vector<double> x(static_cast<std::size_t>(k));
        double mk_err = 0.0;
        const auto probe = [&] {
          double prod = 1.0;
          for (double v : x) prod *= v;
          mk_err = std::max(mk_err, std::abs(mk(x) - prod));
        };
        for (long idx = 0; idx < total; ++idx) {
          long rest = idx;
          for (int d = 0; d < k; ++d) {
            x[static_cast<std::size_t>(d)] = static_cast<double>(rest % (per_axis + 1)) / per_axis;
            rest /= per_axis + 1;
          }
          probe();
        }
        double mk_zero = 0.0;
        double sym = 0.0;
        for (int i = 0; i < 1000; ++i) {
          for (double& v : x) v = unit(rng);
          probe();
          if (k == 3) {
            const std::vector<double> rev{x[2], x[1], x[0]};
            sym = std::max(sym, std::abs(mk(x) - mk(rev)));
          }
          x[static_cast<std::size_t>(i % k)] = 0.0;
          mk_zero = std::max(mk_zero, std::abs(mk(x)));
        }
        add(out, "Multk sup error", p, mk_err, k * eps);
        add(out, "Multk zero coordinate", p, mk_zero, 0.0);
        if (k == 3) add(out, "Multk permutation", p, sym, 2.0 * 3.0 * eps);
      }
    }
  }

  for (int N : {2, 4, 8}) {
    for (int D : {1, 2, 3}) {
      const Partition part(N, D);
      const std::string p = "N=" + std::to_string(N) + " D=" + std::to_string(D);
      double sum_err = 0.0;
      double support = 0.0;
      Eigen::VectorXd x(D);
      for (int i = 0; i < 1000; ++i) {
        for (int d = 0; d < D; ++d) x(d) = unit(rng);
        sum_err = std::max(sum_err, std::abs(part.sum(x) - 1.0));
        for (long l = 0; l < part.size(); ++l) {
          const Eigen::VectorXi node = part.node(l);
          const double dist = (x - node.cast<double>() / N).cwiseAbs().maxCoeff();
          if (dist > 1.0 / N) support = std::max(support, part.rho(node, x));
        }
      }
      add(out, "partition of unity", p, sum_err, 1e-12);
      add(out, "partition support", p, support, 0.0);
    }
  }

  const std::vector<std::pair<std::string, std::function<double(double)>>> fns{
      {"|t|", [](double t) { return std::abs(t); }},
      {"t^2", [](double t) { return t * t; }},
      {"sin 3t", [](double t) { return std::sin(3.0 * t); }},
  };
  for (const auto& [name, f] : fns) {
    for (int N : {8, 16, 32}) {
      const SplineInterp interp(uniform_knots(N, -1.0, 1.0), f);
      double err = 0.0;
      constexpr int kGrid = 10000;
      for (int i = 0; i <= kGrid; ++i) {
        const double u = -1.0 + 2.0 * i / kGrid;
        err = std::max(err, std::abs(interp(u) - f(u)));
      }
      const double omega = modulus_of_continuity(f, -1.0, 1.0, interp.basis().mesh());
      add(out, "spline interpolation", "f=" + name + " N=" + std::to_string(N), err, 2.0 * omega);
    }
  }
  return out;
}

void print_table(std::ostream& out, const std::vector<BoundCheck>& checks) {
  out << std::left << std::setw(32) << "construction" << std::setw(36) << "parameters"
      << std::setw(14) << "measured" << std::setw(14) << "bound" << "result\n";
  for (const BoundCheck& c : checks) {
    out << std::left << std::setw(32) << c.construction << std::setw(36) << c.params
        << std::setw(14) << std::setprecision(4) << std::scientific << c.measured << std::setw(14)
        << c.bound << std::defaultfloat << (c.pass ? "PASS" : "FAIL") << '\n';
  }
}

}  // namespace wpinn::construct
