#pragma once

// The min-max training loop: gradient ascent on the adversary, descent on the
// solution network, periodic adversary resets, best-model tracking and
// ensemble averaging.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wpinn/network.hpp"
#include "wpinn/reference.hpp"
#include "wpinn/residual.hpp"
#include "wpinn/sampler.hpp"

namespace wpinn::trainer {

enum class Optimizer { Sgd, Adam };

Optimizer parse_optimizer(std::string_view name);
std::string_view to_string(Optimizer o);

// "20x4": 4 hidden layers of 20 neurons.
struct LayerSpec {
  int width = 20;
  int depth = 4;
};

LayerSpec parse_layers(std::string_view text);
std::string to_string(const LayerSpec& spec);

struct TrainConfig {
  reference::Experiment experiment = reference::Experiment::Standing;
  std::optional<double> T;  // experiment default when unset

  long N_int = 4096;
  long N_tb = 2048;
  long N_ini = 2048;
  int N_min = 1;
  int N_max = 6;
  int N_c = 16;
  long N_ep = 500;
  double tau_min = 0.01;
  double tau_max = 0.015;
  double rho = 10.0;
  long r = 100;

  LayerSpec arch_theta{20, 4};
  LayerSpec arch_eta{10, 2};
  network::Activation activation_theta = network::Activation::Relu;
  network::Activation activation_eta = network::Activation::Tanh;
  residual::EntropyKind entropy = residual::EntropyKind::Kruzkov;
  Optimizer optimizer = Optimizer::Adam;
  int ensemble_size = 1;
  std::uint64_t seed = 0;

  sampler::Generator generator = sampler::Generator::MonteCarlo;
  network::CutoffSpec::Form cutoff = network::CutoffSpec::Form::PolynomialBump;
  bool cutoff_time = true;

  void validate() const;
};

// Adam moments for one player; reset together with the parameters.
struct OptimizerState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

enum class Direction { Descend, Ascend };

// sgd: p -/+ lr g. adam: beta = (0.9, 0.999), eps = 1e-8.
void step_optimizer(Eigen::VectorXd& params, const Eigen::VectorXd& grad, OptimizerState& state,
                    Optimizer tag, double lr, Direction dir);

struct EpochLog {
  long epoch = 0;
  double L_int = 0.0;
  double L_tb = 0.0;
  double L_sb = 0.0;
  double L_max = 0.0;
  double argmax_c = 0.0;
};

void write_loss_log(std::ostream& out, const std::vector<EpochLog>& log);

struct RunResult {
  std::uint64_t seed = 0;
  double best_loss = 0.0;
  long best_epoch = 0;
  network::MlpParams best_params;  // solution network at the best epoch
  network::MlpParams best_eta;     // adversary that produced best_loss
  std::vector<double> loss_history;
  std::vector<EpochLog> log;
  double E_T = 0.0;  // NaN when no reference was supplied
  double wall_time = 0.0;
};

// Samples, data and levels for one run, deterministic in the seed.
residual::Problem build_problem(const TrainConfig& cfg, const reference::ExperimentSpec& spec,
                                std::uint64_t seed);

struct TrainHooks {
  // Called after every epoch; a false return stops training early.
  std::function<bool(const EpochLog&)> on_epoch;
  // Called after every adversary reset with the epoch number.
  std::function<void(long, const network::MlpParams&)> on_reset;
};

RunResult train(const TrainConfig& cfg, const reference::ExperimentSpec& spec,
                const reference::ReferenceSolution* ref, std::uint64_t seed,
                const TrainHooks& hooks = {});

struct MemberFailure {
  std::uint64_t seed = 0;
  std::string message;
};

struct EnsembleResult {
  std::vector<RunResult> members;
  std::vector<MemberFailure> failures;
  double E_T = 0.0;
  double wall_time = 0.0;

  // Pointwise mean of the members' best networks.
  Eigen::RowVectorXd predict(const Eigen::Matrix3Xd& points) const;
  reference::Predictor predictor() const;
};

// Members use seeds cfg.seed + 0 .. cfg.seed + n - 1 and run on up to
// `threads` threads. Throws NumericalError when every member fails.
EnsembleResult ensemble_train(const TrainConfig& cfg, const reference::ExperimentSpec& spec,
                              const reference::ReferenceSolution& ref, int n, int threads = 1);

// Thread count from WPINN_THREADS, defaulting to 1.
int threads_from_env();

}  // namespace wpinn::trainer
