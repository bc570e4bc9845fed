#pragma once

// Reference entropy solutions for the four spherical Burgers benchmarks.
//
// With f1 = f2 = 0 and f3 = (pi/2) u^2 the conservation law on the sphere
// reduces to u_t + (u^2/2)_lambda = 0 in the longitude parameter, and
// u(lambda, phi, t) = u_1d(lambda, t) * u_hat(phi) solves the spherical
// problem. Closed forms cover the shocks and the rarefaction; the sine wave
// uses a first-order Godunov run.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wpinn/geometry.hpp"

namespace wpinn::reference {

using geometry::ChartPoint;
using geometry::Domain;

enum class Experiment { Standing, Moving, Rarefaction, Sine };

Experiment parse_experiment(std::string_view name);
std::string_view to_string(Experiment e);

enum class Boundary { Dirichlet, Periodic };

struct ExperimentSpec {
  Experiment name = Experiment::Standing;
  std::function<double(double)> u0_1d;
  Boundary boundary = Boundary::Dirichlet;
  double T = 1.0;
  geometry::FluxSpec flux = geometry::FluxSpec::burgers();

  Domain domain() const;
  double u0_min() const;
  double u0_max() const;
};

// Default final times: 1 for the Riemann problems, 0.5 for the sine wave
// (past the shock time 1/pi).
ExperimentSpec make_experiment(Experiment name, std::optional<double> T = std::nullopt);

// Closed-form solutions; throws ConfigError for the sine wave.
double exact_1d(Experiment name, double lambda, double t);

enum class GridBoundary { Periodic, Outflow };

struct GodunovOptions {
  GridBoundary boundary = GridBoundary::Periodic;
  // Uniformly spaced stored time slices, including t = 0 and t = T.
  int slices = 129;
  // Check the maximum principle and TV diminishing on every step.
  bool record_diagnostics = true;
};

struct GodunovDiagnostics {
  long steps = 0;
  double initial_max_abs = 0.0;
  double worst_max_abs = 0.0;     // max over steps of max_i |u_i|
  double worst_tv_increase = 0.0; // max over steps of TV(u^{n+1}) - TV(u^n)
  bool maximum_principle = true;
  bool tv_nonincreasing = true;
};

// Cell averages on a uniform lambda grid at stored time slices.
class GodunovSolution {
 public:
  GodunovSolution(int cells, double T, double cfl, GridBoundary boundary, Eigen::VectorXd times,
                  Eigen::MatrixXd values);

  int cells() const { return cells_; }
  double T() const { return T_; }
  double cfl() const { return cfl_; }
  double dx() const { return 2.0 / cells_; }
  GridBoundary boundary() const { return boundary_; }
  const Eigen::VectorXd& times() const { return times_; }
  // Row k holds slice k.
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd slice(Eigen::Index k) const { return values_.row(k).transpose(); }
  Eigen::VectorXd final_state() const { return slice(values_.rows() - 1); }
  double center(int i) const { return -1.0 + (i + 0.5) * dx(); }

  // Bilinear interpolation in (lambda, t) between cell centres and slices.
  double operator()(double lambda, double t) const;

  GodunovDiagnostics diagnostics;

 private:
  double at_slice(Eigen::Index k, double lambda) const;

  int cells_;
  double T_;
  double cfl_;
  GridBoundary boundary_;
  Eigen::VectorXd times_;
  Eigen::MatrixXd values_;
};

// Exact Riemann flux for u^2 / 2.
double godunov_flux(double left, double right);

// One explicit step with ratio dt / dx; returns the updated state.
Eigen::VectorXd godunov_step(const Eigen::VectorXd& u, double dt_over_dx, GridBoundary boundary);

double total_variation(const Eigen::VectorXd& u, GridBoundary boundary);

GodunovSolution godunov_1d(const std::function<double(double)>& u0, int cells, double T,
                           double cfl, const GodunovOptions& options = {});

void write_cache(const std::string& path, const GodunovSolution& sol);
GodunovSolution read_cache(const std::string& path);

class ReferenceSolution {
 public:
  enum class Kind { ClosedForm, GodunovGrid };

  static ReferenceSolution closed_form(Experiment name);
  static ReferenceSolution from_grid(std::shared_ptr<const GodunovSolution> grid);

  Kind kind() const { return kind_; }
  const GodunovSolution* grid() const { return grid_.get(); }
  double operator()(double lambda, double t) const;

 private:
  Kind kind_ = Kind::ClosedForm;
  Experiment name_ = Experiment::Standing;
  std::shared_ptr<const GodunovSolution> grid_;
};

// Sine wave uses an 8192-cell Godunov run, loaded from / saved to
// `cache_path` when one is given.
ReferenceSolution make_reference(const ExperimentSpec& spec, const std::string& cache_path = {},
                                 int cells = 8192);

// u_1d(lambda, t) * u_hat(phi); u_hat defaults to 1.
double lift_to_sphere(const ReferenceSolution& ref, const std::function<double(double)>& u_hat,
                      const ChartPoint<double>& p);
double lift_to_sphere(const ReferenceSolution& ref, const ChartPoint<double>& p);

// Batched evaluator over 3 x N (lambda, phi, t) columns.
using Predictor = std::function<Eigen::RowVectorXd(const Eigen::Matrix3Xd&)>;

Predictor lifted_predictor(const ReferenceSolution& ref);

struct QuadratureSpec {
  Eigen::Index n_lambda = 128;
  Eigen::Index n_phi = 32;
  Eigen::Index n_t = 32;
};

// Relative L1 error over the space-time domain (midpoint tensor grid).
double test_error(const Predictor& prediction, const Predictor& reference, const Domain& domain,
                  const QuadratureSpec& grid = {});

struct ContractionReport {
  std::vector<double> times;
  std::vector<double> distance;  // L1 distance between the two runs per step
  std::vector<double> tv_u;
  std::vector<double> tv_v;
  bool distance_nonincreasing = true;
  bool tv_nonincreasing = true;
  double initial_tv_u = 0.0;
  double initial_tv_v = 0.0;
};

// Evolves both initial data with a shared time step on the same periodic grid.
ContractionReport l1_contraction_check(const std::function<double(double)>& u0,
                                       const std::function<double(double)>& v0, int cells,
                                       double T, double cfl = 0.9);

}  // namespace wpinn::reference
