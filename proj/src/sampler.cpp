#include "wpinn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>

#include "wpinn/errors.hpp"

namespace wpinn::sampler {

using geometry::kPi;
using geometry::kPoleMargin;

std::string_view to_string(Region r) {
  switch (r) {
    case Region::Interior: return "interior";
    case Region::Initial: return "initial";
    case Region::Boundary: return "boundary";
  }
  return "interior";
}

std::string_view to_string(Generator g) { return g == Generator::Sobol ? "sobol" : "mc"; }

Generator parse_generator(std::string_view name) {
  if (name == "mc") return Generator::MonteCarlo;
  if (name == "sobol") return Generator::Sobol;
  throw ConfigError("unknown generator '" + std::string(name) + "'");
}

namespace {

// new-joe-kuo-6.21201, dimensions 2..4: degree s, coefficients a, initial m.
struct DirectionEntry {
  int s;
  std::uint32_t a;
  std::array<std::uint32_t, 3> m;
};
constexpr std::array<DirectionEntry, 3> kJoeKuo{{
    {1, 0, {1, 0, 0}},
    {2, 1, {1, 3, 0}},
    {3, 1, {1, 3, 1}},
}};

double clamp_phi(double phi) { return std::clamp(phi, -1.0 + kPoleMargin, 1.0 - kPoleMargin); }

// Inverse CDF of the area measure in phi.
double phi_from_unit(double u, const Domain& d) {
  const double s_lo = std::sin(kPi / 2 * d.phi.lo);
  const double s_hi = std::sin(kPi / 2 * d.phi.hi);
  const double s = s_lo + u * (s_hi - s_lo);
  return clamp_phi(2.0 / kPi * std::asin(std::clamp(s, -1.0, 1.0)));
}

void require_count(Eigen::Index n) {
  if (n <= 0) throw ConfigError("collocation count must be at least 1");
}

}  // namespace

SobolSequence::SobolSequence(int dims) : dims_(dims) {
  if (dims < 1 || dims > kMaxDims) throw ConfigError("Sobol dimension must be in [1,4]");
  for (int k = 0; k < kBits; ++k) directions_[0][static_cast<std::size_t>(k)] = 1u << (kBits - 1 - k);
  for (int d = 1; d < dims; ++d) {
    const DirectionEntry& e = kJoeKuo[static_cast<std::size_t>(d - 1)];
    auto& v = directions_[static_cast<std::size_t>(d)];
    for (int k = 0; k < e.s; ++k) {
      v[static_cast<std::size_t>(k)] = e.m[static_cast<std::size_t>(k)] << (kBits - 1 - k);
    }
    for (int k = e.s; k < kBits; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const auto us = static_cast<std::size_t>(e.s);
      std::uint32_t x = v[uk - us] ^ (v[uk - us] >> e.s);
      for (int j = 1; j < e.s; ++j) {
        if ((e.a >> (e.s - 1 - j)) & 1u) x ^= v[uk - static_cast<std::size_t>(j)];
      }
      v[uk] = x;
    }
  }
}

Eigen::VectorXd SobolSequence::next() {
  // Bit of the rightmost zero in the current index selects the direction.
  std::uint64_t i = index_;
  int c = 0;
  while (i & 1u) {
    i >>= 1;
    ++c;
  }
  if (c >= kBits) throw NumericalError("Sobol sequence exhausted");
  ++index_;
  Eigen::VectorXd out(dims_);
  for (int d = 0; d < dims_; ++d) {
    const auto ud = static_cast<std::size_t>(d);
    state_[ud] ^= directions_[ud][static_cast<std::size_t>(c)];
    out(d) = static_cast<double>(state_[ud]) / 4294967296.0;
  }
  return out;
}

CollocationSet sample_interior(const Domain& domain, Eigen::Index n, Generator gen,
                               std::uint64_t seed) {
  domain.validate();
  require_count(n);
  CollocationSet set;
  set.kind = Region::Interior;
  set.seed = seed;
  set.generator = gen;
  set.points.resize(3, n);
  if (gen == Generator::Sobol) {
    SobolSequence sobol(3);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd u = sobol.next();
      set.points(0, j) = domain.lambda.lo + u(0) * domain.lambda.length();
      set.points(1, j) = phi_from_unit(u(1), domain);
      set.points(2, j) = u(2) * domain.T;
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      set.points(0, j) = domain.lambda.lo + unit(rng) * domain.lambda.length();
      set.points(1, j) = phi_from_unit(unit(rng), domain);
      set.points(2, j) = unit(rng) * domain.T;
    }
  }
  set.weights = Eigen::VectorXd::Constant(n, domain.area() * domain.T / static_cast<double>(n));
  return set;
}

CollocationSet sample_initial(const Domain& domain, Eigen::Index n, std::uint64_t seed) {
  domain.validate();
  require_count(n);
  CollocationSet set;
  set.kind = Region::Initial;
  set.seed = seed;
  set.points.resize(3, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    set.points(0, j) = domain.lambda.lo + unit(rng) * domain.lambda.length();
    set.points(1, j) = phi_from_unit(unit(rng), domain);
    set.points(2, j) = 0.0;
  }
  set.weights = Eigen::VectorXd::Constant(n, domain.area() / static_cast<double>(n));
  return set;
}

CollocationSet sample_boundary(const Domain& domain, Eigen::Index n, std::uint64_t seed) {
  domain.validate();
  require_count(n);
  CollocationSet set;
  set.kind = Region::Boundary;
  set.seed = seed;

  // Edges: 0 lambda=lo, 1 lambda=hi, 2 phi=lo, 3 phi=hi.
  std::array<double, 4> lengths{};
  if (!domain.periodic_lambda) {
    lengths[0] = lengths[1] = domain.lambda_edge_length();
  }
  if (domain.has_phi_edge(domain.phi.lo)) lengths[2] = domain.phi_edge_length(domain.phi.lo);
  if (domain.has_phi_edge(domain.phi.hi)) lengths[3] = domain.phi_edge_length(domain.phi.hi);
  const double total = lengths[0] + lengths[1] + lengths[2] + lengths[3];
  if (total <= 0.0) {
    set.points.resize(3, 0);
    set.weights.resize(0);
    return set;
  }

  set.points.resize(3, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> edge_of(lengths.begin(), lengths.end());
  for (Eigen::Index j = 0; j < n; ++j) {
    const int edge = edge_of(rng);
    double lambda = 0.0;
    double phi = 0.0;
    if (edge < 2) {
      lambda = edge == 0 ? domain.lambda.lo : domain.lambda.hi;
      phi = clamp_phi(domain.phi.lo + unit(rng) * domain.phi.length());
    } else {
      lambda = domain.lambda.lo + unit(rng) * domain.lambda.length();
      phi = edge == 2 ? domain.phi.lo : domain.phi.hi;
    }
    set.points(0, j) = lambda;
    set.points(1, j) = phi;
    set.points(2, j) = unit(rng) * domain.T;
  }
  set.weights = Eigen::VectorXd::Constant(n, total * domain.T / static_cast<double>(n));
  return set;
}

CollocationSet tensor_grid(const Domain& domain, Eigen::Index n_lambda, Eigen::Index n_phi,
                           Eigen::Index n_t) {
  domain.validate();
  if (n_lambda <= 0 || n_phi <= 0 || n_t <= 0) throw ConfigError("empty quadrature grid");
  const double dl = domain.lambda.length() / static_cast<double>(n_lambda);
  const double dp = domain.phi.length() / static_cast<double>(n_phi);
  const double dt = domain.T / static_cast<double>(n_t);
  CollocationSet set;
  set.kind = Region::Interior;
  const Eigen::Index n = n_lambda * n_phi * n_t;
  set.points.resize(3, n);
  set.weights.resize(n);
  Eigen::Index j = 0;
  for (Eigen::Index k = 0; k < n_t; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt;
    for (Eigen::Index b = 0; b < n_phi; ++b) {
      const double phi = domain.phi.lo + (static_cast<double>(b) + 0.5) * dp;
      const double w = geometry::area_weight(geometry::ChartPoint<double>{0.0, phi, t}) * dl * dp * dt;
      for (Eigen::Index a = 0; a < n_lambda; ++a) {
        set.points(0, j) = domain.lambda.lo + (static_cast<double>(a) + 0.5) * dl;
        set.points(1, j) = phi;
        set.points(2, j) = t;
        set.weights(j) = w;
        ++j;
      }
    }
  }
  return set;
}

void write_csv(std::ostream& out, const CollocationSet& set, bool header) {
  if (header) out << "lambda,phi,t,weight,kind\n";
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < set.size(); ++j) {
    out << set.points(0, j) << ',' << set.points(1, j) << ',' << set.points(2, j) << ','
        << set.weights(j) << ',' << to_string(set.kind) << '\n';
  }
}

}  // namespace wpinn::sampler
