#pragma once

// Multilayer perceptrons u_theta (solution) and xi_eta (adversary), and the
// boundary cutoff that turns the adversary into a compactly supported test
// function xi = omega * xi_tilde.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wpinn/autodiff.hpp"
#include "wpinn/geometry.hpp"

namespace wpinn::network {

using geometry::ChartPoint;
using geometry::Domain;

enum class Activation { Relu, Tanh, Sin };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// Number of network input features: (lambda, phi, t), or
// (cos pi lambda, sin pi lambda, phi, t) when lambda is periodic.
inline int feature_dim(bool periodic_lambda) { return periodic_lambda ? 4 : 3; }

struct MlpParams {
  std::vector<int> sizes;  // p_0 (features), hidden widths..., 1
  Activation activation = Activation::Relu;
  bool periodic_lambda = false;
  std::vector<Eigen::MatrixXd> weights;  // W_k is sizes[k+1] x sizes[k]
  std::vector<Eigen::VectorXd> biases;   // v_k has sizes[k+1] entries

  std::size_t layers() const { return weights.size(); }
  Eigen::Index parameter_count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  void validate() const;

  // Plain inference; `points` is 3 x N (lambda, phi, t).
  Eigen::RowVectorXd evaluate(const Eigen::Matrix3Xd& points) const;
  double evaluate(const ChartPoint<double>& p) const;
};

// Layer sizes for `depth` hidden layers of `width` neurons.
std::vector<int> make_arch(int width, int depth, bool periodic_lambda);

// He-normal weights for relu, Glorot-normal for tanh/sin; zero biases.
MlpParams init_params(std::vector<int> sizes, Activation activation, bool periodic_lambda,
                      std::uint64_t seed);

double eval_solution(const MlpParams& params, const ChartPoint<double>& p);

// Tape handles for one network's weights.
struct NetNodes {
  std::vector<ad::NodeId> weights;
  std::vector<ad::NodeId> biases;
  std::vector<ad::NodeId> all() const;
};

// Declares the weights as trainable parameters or as constants.
NetNodes declare(ad::Tape& tape, const MlpParams& params, bool trainable);

// Feature rows from a 3 x N coordinate node.
ad::NodeId features(ad::Tape& tape, ad::NodeId coords, bool periodic_lambda);

// 1 x N network output for a 3 x N coordinate node.
ad::NodeId build_forward(ad::Tape& tape, const MlpParams& params, const NetNodes& nodes,
                         ad::NodeId coords);

// Gradients in the same flat layout as MlpParams::flatten.
Eigen::VectorXd flat_grad(const ad::Tape& tape, ad::NodeId output, const NetNodes& nodes);

struct CutoffSpec {
  enum class Form { PolynomialBump, SineBump };
  Domain domain;
  Form form = Form::PolynomialBump;
  // Multiply by a time bump t (T - t) so the test function also vanishes at
  // t = 0 and t = T.
  bool vanish_in_time = false;
};

CutoffSpec::Form parse_cutoff_form(std::string_view name);
std::string_view to_string(CutoffSpec::Form form);

// Rows: omega, d_t omega, d_lambda omega, d_phi omega. One column per point.
Eigen::Matrix<double, 4, Eigen::Dynamic> cutoff_jet(const CutoffSpec& spec,
                                                    const Eigen::Matrix3Xd& points);

// Test function value and input derivatives, all 1 x N tape nodes.
struct TestFields {
  ad::NodeId xi = -1;
  ad::NodeId xi_t = -1;
  ad::NodeId xi_lambda = -1;
  ad::NodeId xi_phi = -1;
};

// `coords` must be a tape input node holding the 3 x N points.
TestFields eval_test_fn(ad::Tape& tape, const MlpParams& params, const NetNodes& nodes,
                        const CutoffSpec& cutoff, ad::NodeId coords);

// Single-point convenience wrapper returning (xi, d_t, d_lambda, d_phi).
Eigen::Vector4d eval_test_fn(const MlpParams& params, const CutoffSpec& cutoff,
                             const ChartPoint<double>& p);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  long epoch = 0;
  double best_loss = 0.0;
};

void write_checkpoint(std::ostream& out, const MlpParams& params, const CheckpointMeta& meta);
void write_checkpoint(const std::string& path, const MlpParams& params, const CheckpointMeta& meta);
MlpParams read_checkpoint(std::istream& in, CheckpointMeta* meta = nullptr);
MlpParams read_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace wpinn::network
