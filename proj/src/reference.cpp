#include "wpinn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wpinn/errors.hpp"
#include "wpinn/sampler.hpp"

namespace wpinn::reference {

using geometry::kPi;

namespace {
constexpr double kRoundoff = 1e-12;
}

Experiment parse_experiment(std::string_view name) {
  if (name == "standing") return Experiment::Standing;
  if (name == "moving") return Experiment::Moving;
  if (name == "rarefaction") return Experiment::Rarefaction;
  if (name == "sine") return Experiment::Sine;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Standing: return "standing";
    case Experiment::Moving: return "moving";
    case Experiment::Rarefaction: return "rarefaction";
    case Experiment::Sine: return "sine";
  }
  return "standing";
}

Domain ExperimentSpec::domain() const {
  Domain d;
  d.lambda = {-1.0, 1.0};
  d.phi = {-0.5, 0.5};
  d.periodic_lambda = boundary == Boundary::Periodic;
  d.T = T;
  return d;
}

double ExperimentSpec::u0_min() const {
  return name == Experiment::Moving ? 0.0 : -1.0;
}

double ExperimentSpec::u0_max() const { return 1.0; }

ExperimentSpec make_experiment(Experiment name, std::optional<double> T) {
  ExperimentSpec spec;
  spec.name = name;
  switch (name) {
    case Experiment::Standing:
      spec.u0_1d = [](double l) { return l < 0.0 ? 1.0 : -1.0; };
      break;
    case Experiment::Moving:
      spec.u0_1d = [](double l) { return l < 0.0 ? 1.0 : 0.0; };
      break;
    case Experiment::Rarefaction:
      spec.u0_1d = [](double l) { return l < 0.0 ? -1.0 : 1.0; };
      break;
    case Experiment::Sine:
      spec.u0_1d = [](double l) { return -std::sin(kPi * l); };
      spec.boundary = Boundary::Periodic;
      break;
  }
  spec.T = T.value_or(name == Experiment::Sine ? 0.5 : 1.0);
  if (!(spec.T > 0.0)) throw ConfigError("final time must be positive");
  return spec;
}

double exact_1d(Experiment name, double lambda, double t) {
  if (t < 0.0) throw InputError("negative time");
  switch (name) {
    case Experiment::Standing:
      return lambda < 0.0 ? 1.0 : -1.0;
    case Experiment::Moving:
      return lambda < t / 2.0 ? 1.0 : 0.0;
    case Experiment::Rarefaction:
      if (t == 0.0) return lambda < 0.0 ? -1.0 : 1.0;
      if (lambda < -t) return -1.0;
      if (lambda <= t) return lambda / t;
      return 1.0;
    case Experiment::Sine:
      throw ConfigError("the sine wave has no closed form; use godunov_1d");
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Godunov

double godunov_flux(double left, double right) {
  const auto f = [](double u) { return 0.5 * u * u; };
  if (left > right) {
    const double speed = 0.5 * (left + right);
    return speed >= 0.0 ? f(left) : f(right);
  }
  if (left > 0.0) return f(left);
  if (right < 0.0) return f(right);
  return 0.0;
}

Eigen::VectorXd godunov_step(const Eigen::VectorXd& u, double dt_over_dx, GridBoundary boundary) {
  const Eigen::Index n = u.size();
  // Interface k sits between cells k-1 and k, k = 0..n.
  Eigen::VectorXd flux(n + 1);
  for (Eigen::Index k = 1; k < n; ++k) flux(k) = godunov_flux(u(k - 1), u(k));
  if (boundary == GridBoundary::Periodic) {
    flux(0) = flux(n) = godunov_flux(u(n - 1), u(0));
  } else {
    flux(0) = godunov_flux(u(0), u(0));
    flux(n) = godunov_flux(u(n - 1), u(n - 1));
  }
  return u - dt_over_dx * (flux.tail(n) - flux.head(n));
}

double total_variation(const Eigen::VectorXd& u, GridBoundary boundary) {
  const Eigen::Index n = u.size();
  double tv = (u.tail(n - 1) - u.head(n - 1)).cwiseAbs().sum();
  if (boundary == GridBoundary::Periodic) tv += std::abs(u(0) - u(n - 1));
  return tv;
}

GodunovSolution::GodunovSolution(int cells, double T, double cfl, GridBoundary boundary,
                                 Eigen::VectorXd times, Eigen::MatrixXd values)
    : cells_(cells),
      T_(T),
      cfl_(cfl),
      boundary_(boundary),
      times_(std::move(times)),
      values_(std::move(values)) {
  if (values_.cols() != cells_ || values_.rows() != times_.size() || times_.size() < 2) {
    throw ConfigError("inconsistent Godunov grid");
  }
}

double GodunovSolution::at_slice(Eigen::Index k, double lambda) const {
  const double pos = (lambda + 1.0) / dx() - 0.5;
  double fl = std::floor(pos);
  const double w = pos - fl;
  auto i0 = static_cast<Eigen::Index>(fl);
  Eigen::Index i1 = i0 + 1;
  if (boundary_ == GridBoundary::Periodic) {
    i0 = ((i0 % cells_) + cells_) % cells_;
    i1 = ((i1 % cells_) + cells_) % cells_;
  } else {
    i0 = std::clamp<Eigen::Index>(i0, 0, cells_ - 1);
    i1 = std::clamp<Eigen::Index>(i1, 0, cells_ - 1);
  }
  return (1.0 - w) * values_(k, i0) + w * values_(k, i1);
}

double GodunovSolution::operator()(double lambda, double t) const {
  const double tc = std::clamp(t, 0.0, T_);
  const Eigen::Index m = times_.size() - 1;
  const double pos = tc / T_ * static_cast<double>(m);
  const auto k0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), m - 1);
  const double w = pos - static_cast<double>(k0);
  return (1.0 - w) * at_slice(k0, lambda) + w * at_slice(k0 + 1, lambda);
}

GodunovSolution godunov_1d(const std::function<double(double)>& u0, int cells, double T,
                           double cfl, const GodunovOptions& options) {
  if (cells < 16) throw ConfigError("Godunov grid needs at least 16 cells");
  if (!(cfl > 0.0 && cfl <= 0.9)) throw ConfigError("CFL number must lie in (0, 0.9]");
  if (!(T > 0.0)) throw ConfigError("final time must be positive");
  if (options.slices < 1) throw ConfigError("need at least one stored slice interval");

  const double dx = 2.0 / cells;
  Eigen::VectorXd u(cells);
  for (int i = 0; i < cells; ++i) u(i) = u0(-1.0 + (i + 0.5) * dx);
  if (!u.allFinite()) throw InputError("non-finite initial data");

  const int m = options.slices;
  Eigen::VectorXd times(m + 1);
  Eigen::MatrixXd values(m + 1, cells);
  for (int k = 0; k <= m; ++k) times(k) = T * k / m;
  values.row(0) = u.transpose();

  GodunovDiagnostics diag;
  diag.initial_max_abs = u.cwiseAbs().maxCoeff();
  diag.worst_max_abs = diag.initial_max_abs;
  double tv = total_variation(u, options.boundary);

  double t = 0.0;
  for (int k = 1; k <= m; ++k) {
    while (t < times(k)) {
      const double speed = std::max(u.cwiseAbs().maxCoeff(), 1e-12);
      double dt = cfl * dx / speed;
      // Land exactly on the slice time.
      if (t + dt >= times(k) - 1e-14 * T) dt = times(k) - t;
      if (speed * dt / dx > cfl * (1.0 + 1e-12)) throw NumericalError("CFL condition violated");
      u = godunov_step(u, dt / dx, options.boundary);
      t = (dt == times(k) - t) ? times(k) : t + dt;
      ++diag.steps;
      if (!u.allFinite()) throw NumericalError("Godunov state became non-finite");
      if (options.record_diagnostics) {
        const double mx = u.cwiseAbs().maxCoeff();
        diag.worst_max_abs = std::max(diag.worst_max_abs, mx);
        if (mx > diag.initial_max_abs + kRoundoff) diag.maximum_principle = false;
        const double tv_next = total_variation(u, options.boundary);
        diag.worst_tv_increase = std::max(diag.worst_tv_increase, tv_next - tv);
        if (tv_next > tv + kRoundoff) diag.tv_nonincreasing = false;
        tv = tv_next;
      }
    }
    values.row(k) = u.transpose();
  }

  GodunovSolution sol(cells, T, cfl, options.boundary, std::move(times), std::move(values));
  sol.diagnostics = diag;
  return sol;
}

// ---------------------------------------------------------------------------
// Cache: one text header line, then (slices x cells) little-endian doubles.

void write_cache(const std::string& path, const GodunovSolution& sol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write reference cache '" + path + "'");
  char header[256];
  std::snprintf(header, sizeof header,
                "wpinn-reference 1 cells=%d T=%.17g cfl=%.17g flux=burgers boundary=%s slices=%d\n",
                sol.cells(), sol.T(), sol.cfl(),
                sol.boundary() == GridBoundary::Periodic ? "periodic" : "outflow",
                static_cast<int>(sol.times().size()));
  out << header;
  // Row-major: one slice after another.
  for (Eigen::Index k = 0; k < sol.values().rows(); ++k) {
    for (Eigen::Index i = 0; i < sol.values().cols(); ++i) {
      const double v = sol.values()(k, i);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) throw InputError("failed writing reference cache '" + path + "'");
}

GodunovSolution read_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open reference cache '" + path + "'");
  std::string line;
  std::getline(in, line);
  int cells = 0, slices = 0;
  double T = 0.0, cfl = 0.0;
  char boundary[32] = {0};
  if (std::sscanf(line.c_str(),
                  "wpinn-reference 1 cells=%d T=%lf cfl=%lf flux=burgers boundary=%31s slices=%d",
                  &cells, &T, &cfl, boundary, &slices) != 5) {
    throw InputError("malformed reference cache header");
  }
  Eigen::MatrixXd values(slices, cells);
  for (int k = 0; k < slices; ++k) {
    for (int i = 0; i < cells; ++i) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      values(k, i) = v;
    }
  }
  if (!in) throw InputError("truncated reference cache");
  Eigen::VectorXd times(slices);
  for (int k = 0; k < slices; ++k) times(k) = T * k / (slices - 1);
  const GridBoundary b =
      std::string(boundary) == "periodic" ? GridBoundary::Periodic : GridBoundary::Outflow;
  return GodunovSolution(cells, T, cfl, b, std::move(times), std::move(values));
}

// ---------------------------------------------------------------------------

ReferenceSolution ReferenceSolution::closed_form(Experiment name) {
  if (name == Experiment::Sine) throw ConfigError("the sine wave has no closed form");
  ReferenceSolution r;
  r.kind_ = Kind::ClosedForm;
  r.name_ = name;
  return r;
}

ReferenceSolution ReferenceSolution::from_grid(std::shared_ptr<const GodunovSolution> grid) {
  if (!grid) throw ConfigError("null reference grid");
  ReferenceSolution r;
  r.kind_ = Kind::GodunovGrid;
  r.grid_ = std::move(grid);
  return r;
}

double ReferenceSolution::operator()(double lambda, double t) const {
  if (kind_ == Kind::ClosedForm) return exact_1d(name_, lambda, t);
  return (*grid_)(lambda, t);
}

ReferenceSolution make_reference(const ExperimentSpec& spec, const std::string& cache_path,
                                 int cells) {
  if (spec.name != Experiment::Sine) return ReferenceSolution::closed_form(spec.name);

  constexpr double kCfl = 0.9;
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    auto cached = std::make_shared<GodunovSolution>(read_cache(cache_path));
    if (cached->cells() == cells && cached->T() == spec.T && cached->cfl() == kCfl) {
      return ReferenceSolution::from_grid(std::move(cached));
    }
  }
  auto sol = std::make_shared<GodunovSolution>(godunov_1d(spec.u0_1d, cells, spec.T, kCfl));
  if (!cache_path.empty()) write_cache(cache_path, *sol);
  return ReferenceSolution::from_grid(std::move(sol));
}

double lift_to_sphere(const ReferenceSolution& ref, const std::function<double(double)>& u_hat,
                      const ChartPoint<double>& p) {
  return ref(p.lambda, p.t) * (u_hat ? u_hat(p.phi) : 1.0);
}

double lift_to_sphere(const ReferenceSolution& ref, const ChartPoint<double>& p) {
  return ref(p.lambda, p.t);
}

Predictor lifted_predictor(const ReferenceSolution& ref) {
  return [ref](const Eigen::Matrix3Xd& pts) {
    Eigen::RowVectorXd out(pts.cols());
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      out(j) = lift_to_sphere(ref, ChartPoint<double>{pts(0, j), pts(1, j), pts(2, j)});
    }
    return out;
  };
}

double test_error(const Predictor& prediction, const Predictor& reference, const Domain& domain,
                  const QuadratureSpec& grid) {
  const sampler::CollocationSet q =
      sampler::tensor_grid(domain, grid.n_lambda, grid.n_phi, grid.n_t);
  const Eigen::RowVectorXd u = prediction(q.points);
  const Eigen::RowVectorXd r = reference(q.points);
  const double num = (u - r).cwiseAbs().dot(q.weights.transpose());
  const double den = r.cwiseAbs().dot(q.weights.transpose());
  if (!(den > 0.0)) throw NumericalError("reference vanishes on the quadrature grid");
  return num / den;
}

ContractionReport l1_contraction_check(const std::function<double(double)>& u0,
                                       const std::function<double(double)>& v0, int cells,
                                       double T, double cfl) {
  if (cells < 16) throw ConfigError("Godunov grid needs at least 16 cells");
  if (!(cfl > 0.0 && cfl <= 0.9)) throw ConfigError("CFL number must lie in (0, 0.9]");
  const double dx = 2.0 / cells;
  Eigen::VectorXd u(cells), v(cells);
  for (int i = 0; i < cells; ++i) {
    const double x = -1.0 + (i + 0.5) * dx;
    u(i) = u0(x);
    v(i) = v0(x);
  }
  constexpr auto kB = GridBoundary::Periodic;
  ContractionReport rep;
  rep.initial_tv_u = total_variation(u, kB);
  rep.initial_tv_v = total_variation(v, kB);
  rep.times.push_back(0.0);
  rep.distance.push_back((u - v).cwiseAbs().sum() * dx);
  rep.tv_u.push_back(rep.initial_tv_u);
  rep.tv_v.push_back(rep.initial_tv_v);

  double t = 0.0;
  while (t < T) {
    const double speed = std::max({u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff(), 1e-12});
    double dt = cfl * dx / speed;
    if (t + dt > T) dt = T - t;
    u = godunov_step(u, dt / dx, kB);
    v = godunov_step(v, dt / dx, kB);
    t = (t + dt > T - 1e-15) ? T : t + dt;
    const double d = (u - v).cwiseAbs().sum() * dx;
    const double tu = total_variation(u, kB);
    const double tv = total_variation(v, kB);
    if (d > rep.distance.back() + kRoundoff) rep.distance_nonincreasing = false;
    if (tu > rep.tv_u.back() + kRoundoff || tv > rep.tv_v.back() + kRoundoff) {
      rep.tv_nonincreasing = false;
    }
    rep.times.push_back(t);
    rep.distance.push_back(d);
    rep.tv_u.push_back(tu);
    rep.tv_v.push_back(tv);
  }
  return rep;
}

}  // namespace wpinn::reference
