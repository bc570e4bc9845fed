#include "wpinn/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <malloc.h>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "wpinn/errors.hpp"

namespace wpinn::trainer {

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

LayerSpec parse_layers(std::string_view text) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) throw ConfigError("layer spec must look like 20x4");
  LayerSpec spec;
  try {
    std::size_t used = 0;
    const std::string w(text.substr(0, x));
    const std::string d(text.substr(x + 1));
    spec.width = std::stoi(w, &used);
    if (used != w.size()) throw ConfigError("");
    spec.depth = std::stoi(d, &used);
    if (used != d.size()) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("malformed layer spec '" + std::string(text) + "'");
  }
  if (spec.width < 1 || spec.depth < 1) throw ConfigError("layer spec needs positive sizes");
  return spec;
}

std::string to_string(const LayerSpec& spec) {
  return std::to_string(spec.width) + "x" + std::to_string(spec.depth);
}

void TrainConfig::validate() const {
  if (N_int < 1 || N_tb < 1 || N_ini < 1) throw ConfigError("sample counts must be at least 1");
  if (N_min < 1 || N_max < 1 || N_c < 1 || N_ep < 1) {
    throw ConfigError("N_min, N_max, N_c and N_ep must be at least 1");
  }
  if (!(tau_min > 0.0) || !(tau_max > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(rho >= 0.0)) throw ConfigError("rho must be nonnegative");
  if (r < 1) throw ConfigError("reset period r must be at least 1");
  if (ensemble_size < 1) throw ConfigError("ensemble_size must be at least 1");
  if (T && !(*T > 0.0)) throw ConfigError("T must be positive");
}

void step_optimizer(Eigen::VectorXd& params, const Eigen::VectorXd& grad, OptimizerState& state,
                    Optimizer tag, double lr, Direction dir) {
  if (params.size() != grad.size()) throw ContractError("gradient size mismatch");
  if (!grad.allFinite()) throw NumericalError("non-finite gradient");
  const double sign = dir == Direction::Ascend ? 1.0 : -1.0;
  if (tag == Optimizer::Sgd) {
    params += sign * lr * grad;
    return;
  }
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const Eigen::ArrayXd m_hat = state.m.array() / c1;
  const Eigen::ArrayXd v_hat = state.v.array() / c2;
  params.array() += sign * lr * m_hat / (v_hat.sqrt() + eps);
}

void write_loss_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,L_int,L_tb,L_sb,L_max,argmax_c\n" << std::setprecision(17);
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << e.L_int << ',' << e.L_tb << ',' << e.L_sb << ',' << e.L_max << ','
        << e.argmax_c << '\n';
  }
}

namespace {

// Independent sub-streams of one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kInterior = 1, kInitial, kBoundary, kLevels, kTheta, kEta };

}  // namespace

residual::Problem build_problem(const TrainConfig& cfg, const reference::ExperimentSpec& spec,
                                std::uint64_t seed) {
  const geometry::Domain domain = spec.domain();
  residual::Problem pb;
  pb.interior = sampler::sample_interior(domain, cfg.N_int, cfg.generator,
                                         derive_seed(seed, kInterior));
  pb.initial = sampler::sample_initial(domain, cfg.N_ini, derive_seed(seed, kInitial));
  // With periodic longitude only the phi edges remain, and no closed-form
  // trace is available there, so the boundary term is dropped.
  if (spec.boundary == reference::Boundary::Dirichlet) {
    pb.boundary = sampler::sample_boundary(domain, cfg.N_tb, derive_seed(seed, kBoundary));
  } else {
    pb.boundary.kind = sampler::Region::Boundary;
    pb.boundary.points.resize(3, 0);
    pb.boundary.weights.resize(0);
  }

  pb.u0.resize(pb.initial.size());
  for (Eigen::Index j = 0; j < pb.initial.size(); ++j) pb.u0(j) = spec.u0_1d(pb.initial.points(0, j));
  pb.g.resize(pb.boundary.size());
  for (Eigen::Index j = 0; j < pb.boundary.size(); ++j) {
    pb.g(j) = reference::exact_1d(spec.name, pb.boundary.points(0, j), pb.boundary.points(2, j));
  }

  pb.cutoff.domain = domain;
  pb.cutoff.form = cfg.cutoff;
  pb.cutoff.vanish_in_time = cfg.cutoff_time;
  pb.pair = residual::EntropyPair{cfg.entropy};
  pb.levels = residual::levels_for_range(spec.u0_min(), spec.u0_max(), cfg.N_c,
                                         derive_seed(seed, kLevels));
  pb.rho = cfg.rho;
  pb.finalize();
  return pb;
}

namespace {

// Tapes allocate and free many large blocks per step; keeping them on the
// heap instead of fresh mappings avoids page-fault churn.
void tune_allocator() {
#ifdef __GLIBC__
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

}  // namespace

RunResult train(const TrainConfig& cfg, const reference::ExperimentSpec& spec,
                const reference::ReferenceSolution* ref, std::uint64_t seed,
                const TrainHooks& hooks) {
  cfg.validate();
  tune_allocator();
  const auto start = std::chrono::steady_clock::now();
  const residual::Problem pb = build_problem(cfg, spec, seed);
  const bool periodic = spec.boundary == reference::Boundary::Periodic;

  network::MlpParams theta = network::init_params(
      network::make_arch(cfg.arch_theta.width, cfg.arch_theta.depth, periodic),
      cfg.activation_theta, periodic, derive_seed(seed, kTheta));
  std::mt19937_64 reset_rng(derive_seed(seed, kEta));
  const std::vector<int> eta_sizes =
      network::make_arch(cfg.arch_eta.width, cfg.arch_eta.depth, periodic);
  const auto fresh_eta = [&] {
    return network::init_params(eta_sizes, cfg.activation_eta, periodic, reset_rng());
  };
  network::MlpParams eta = fresh_eta();

  Eigen::VectorXd theta_flat = theta.flatten();
  Eigen::VectorXd eta_flat = eta.flatten();
  OptimizerState theta_state;
  OptimizerState eta_state;

  RunResult res;
  res.seed = seed;
  res.best_loss = std::numeric_limits<double>::infinity();
  res.best_params = theta;
  res.best_eta = eta;
  res.loss_history.reserve(static_cast<std::size_t>(cfg.N_ep));
  res.log.reserve(static_cast<std::size_t>(cfg.N_ep));

  const auto fail = [](long epoch, const char* phase, int step, const std::exception& e) {
    throw NumericalError("epoch " + std::to_string(epoch) + ", " + phase + " step " +
                         std::to_string(step) + ": " + e.what());
  };

  for (long i = 1; i <= cfg.N_ep; ++i) {
    if (i % cfg.r == 0) {
      eta = fresh_eta();
      eta_flat = eta.flatten();
      eta_state = OptimizerState{};
      if (hooks.on_reset) hooks.on_reset(i, eta);
    }

    // theta is fixed while the adversary moves, and eta while theta moves.
    const Eigen::RowVectorXd u_all = theta.evaluate(pb.all_points);
    for (int k = 0; k < cfg.N_max; ++k) {
      try {
        const residual::LossGradient g = residual::adversary_grad(u_all, eta, pb);
        step_optimizer(eta_flat, g.grad, eta_state, cfg.optimizer, cfg.tau_max, Direction::Ascend);
        eta.assign(eta_flat);
      } catch (const NumericalError& e) {
        fail(i, "ascent", k, e);
      }
    }

    residual::LossBreakdown loss;
    network::MlpParams evaluated;
    const residual::FieldValues fields =
        residual::test_field_values(eta, pb.cutoff, pb.interior.points);
    for (int k = 0; k < cfg.N_min; ++k) {
      try {
        const residual::LossGradient g = residual::solution_grad(theta, fields, pb);
        loss = g.loss;
        evaluated = theta;
        step_optimizer(theta_flat, g.grad, theta_state, cfg.optimizer, cfg.tau_min,
                       Direction::Descend);
        theta.assign(theta_flat);
      } catch (const NumericalError& e) {
        fail(i, "descent", k, e);
      }
    }

    const EpochLog entry{i,         loss.L_int, loss.L_tb, loss.L_sb, loss.L_max,
                         pb.levels.values[static_cast<std::size_t>(loss.argmax)]};
    res.loss_history.push_back(loss.L_max);
    res.log.push_back(entry);
    // The recorded loss belongs to the parameters before the last update.
    if (loss.L_max < res.best_loss) {
      res.best_loss = loss.L_max;
      res.best_epoch = i;
      res.best_params = std::move(evaluated);
      res.best_eta = eta;
    }
    if (hooks.on_epoch && !hooks.on_epoch(entry)) break;
  }

  res.E_T = std::numeric_limits<double>::quiet_NaN();
  if (ref) {
    const network::MlpParams best = res.best_params;
    res.E_T = reference::test_error([best](const Eigen::Matrix3Xd& x) { return best.evaluate(x); },
                                    reference::lifted_predictor(*ref), spec.domain());
  }
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

Eigen::RowVectorXd EnsembleResult::predict(const Eigen::Matrix3Xd& points) const {
  if (members.empty()) throw ContractError("empty ensemble");
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
  for (const RunResult& m : members) sum += m.best_params.evaluate(points);
  return sum / static_cast<double>(members.size());
}

reference::Predictor EnsembleResult::predictor() const {
  std::vector<network::MlpParams> nets;
  for (const RunResult& m : members) nets.push_back(m.best_params);
  return [nets](const Eigen::Matrix3Xd& x) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
    for (const auto& n : nets) sum += n.evaluate(x);
    return Eigen::RowVectorXd(sum / static_cast<double>(nets.size()));
  };
}

EnsembleResult ensemble_train(const TrainConfig& cfg, const reference::ExperimentSpec& spec,
                              const reference::ReferenceSolution& ref, int n, int threads) {
  if (n < 1) throw ConfigError("ensemble size must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::optional<RunResult>> slots(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};

  const auto worker = [&] {
    for (int k = next++; k < n; k = next++) {
      const auto uk = static_cast<std::size_t>(k);
      try {
        slots[uk] = train(cfg, spec, &ref, cfg.seed + static_cast<std::uint64_t>(k));
      } catch (const NumericalError& e) {
        errors[uk] = e.what();
      }
    }
  };
  const int pool = std::max(1, std::min(threads, n));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }

  EnsembleResult out;
  for (int k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (slots[uk]) {
      out.members.push_back(std::move(*slots[uk]));
    } else {
      out.failures.push_back({cfg.seed + static_cast<std::uint64_t>(k), errors[uk]});
    }
  }
  if (out.members.empty()) {
    throw NumericalError("every ensemble member failed; first error: " + errors.front());
  }
  out.E_T = reference::test_error(out.predictor(), reference::lifted_predictor(ref), spec.domain());
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

int threads_from_env() {
  const char* v = std::getenv("WPINN_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("WPINN_THREADS must be a positive integer");
  return static_cast<int>(n);
}

}  // namespace wpinn::trainer
