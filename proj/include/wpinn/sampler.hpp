#pragma once

// Collocation sets over the space-time chart domain. Points are stored
// column-wise as (lambda, phi, t) with one quadrature weight per point, so
// sum_i w_i f(x_i) estimates the integral of f against dV_g dt.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "wpinn/geometry.hpp"

namespace wpinn::sampler {

using geometry::Domain;

enum class Region { Interior, Initial, Boundary };
enum class Generator { MonteCarlo, Sobol };

std::string_view to_string(Region r);
std::string_view to_string(Generator g);
Generator parse_generator(std::string_view name);

struct CollocationSet {
  Eigen::Matrix3Xd points;
  Eigen::VectorXd weights;
  Region kind = Region::Interior;
  std::uint64_t seed = 0;
  Generator generator = Generator::MonteCarlo;

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
  double measure() const { return weights.sum(); }
};

// Gray-code Sobol sequence in up to four dimensions (Joe-Kuo direction
// numbers). The origin is skipped, so the first point is (0.5, ..., 0.5).
class SobolSequence {
 public:
  static constexpr int kMaxDims = 4;
  static constexpr int kBits = 32;

  explicit SobolSequence(int dims);
  Eigen::VectorXd next();
  int dims() const { return dims_; }

 private:
  int dims_;
  std::uint64_t index_ = 0;
  std::array<std::array<std::uint32_t, kBits>, kMaxDims> directions_{};
  std::array<std::uint32_t, kMaxDims> state_{};
};

// Area-uniform points: lambda uniform, sin(pi phi / 2) uniform, t uniform.
// Sobol sets ignore the seed.
CollocationSet sample_interior(const Domain& domain, Eigen::Index n, Generator gen,
                               std::uint64_t seed);
CollocationSet sample_initial(const Domain& domain, Eigen::Index n, std::uint64_t seed);
// Spread over the non-periodic edges in proportion to their lengths; empty
// when the domain has no boundary.
CollocationSet sample_boundary(const Domain& domain, Eigen::Index n, std::uint64_t seed);

// Midpoint tensor grid with exact area weights, for deterministic quadrature.
CollocationSet tensor_grid(const Domain& domain, Eigen::Index n_lambda, Eigen::Index n_phi,
                           Eigen::Index n_t);

// Columns: lambda, phi, t, weight, kind.
void write_csv(std::ostream& out, const CollocationSet& set, bool header = true);

}  // namespace wpinn::sampler
