#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every node holds a matrix value. Per-sample quantities are stored with one
// sample per column, so a batch of N scalar outputs is a 1 x N row. Binary
// elementwise operations broadcast operands whose rows or columns equal one.
//
// Nodes are evaluated eagerly on creation, and `forward` replays the whole
// tape from new leaf values. `input_grad_node` extends the tape with a
// subgraph for a directional input derivative, so the result can itself be
// differentiated with respect to parameters.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace wpinn::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using NodeId = int;

enum class Op : std::uint8_t {
  Constant,
  Input,
  Parameter,
  Add,
  Sub,
  Mul,
  Div,
  Scale,
  MatMul,
  Relu,
  Tanh,
  Sin,
  Cos,
  Abs,
  Sign,
  Step,    // 1 where x > 0, else 0; zero derivative
  GeMask,  // 1 where a >= b, else 0; zero derivative
  Max,
  Square,
  Sum,
  PosClip,
  Rows,
  Cols,
  VStack,
};

std::string_view op_name(Op op);

struct Node {
  Op op = Op::Constant;
  std::array<NodeId, 2> parents{-1, -1};
  Matrix value;
  double factor = 0.0;  // Scale
  Index begin = 0;      // Rows / Cols
  Index count = 0;
  bool requires_grad = false;
};

class Tape {
 public:
  Tape() = default;

  // Leaves.
  NodeId constant(Matrix value);
  NodeId constant(double value);
  NodeId input(Matrix value);
  NodeId parameter(Matrix value);

  // Elementwise with broadcasting.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId max(NodeId a, NodeId b);
  NodeId ge_mask(NodeId a, NodeId b);

  NodeId scale(NodeId a, double factor);
  NodeId add_scalar(NodeId a, double value);
  NodeId matmul(NodeId a, NodeId b);

  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sin(NodeId a);
  NodeId cos(NodeId a);
  NodeId abs(NodeId a);
  NodeId sign(NodeId a);
  NodeId step(NodeId a);
  NodeId square(NodeId a);
  NodeId posclip(NodeId a);
  NodeId sum(NodeId a);

  NodeId rows(NodeId a, Index begin, Index count);
  NodeId cols(NodeId a, Index begin, Index count);
  NodeId vstack(NodeId a, NodeId b);

  const Node& node(NodeId id) const;
  const Matrix& value(NodeId id) const { return node(id).value; }
  double scalar(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  std::span<const NodeId> inputs() const { return input_ids_; }
  std::span<const NodeId> params() const { return param_ids_; }

  // Total number of scalars across input / parameter leaves.
  Index input_arity() const;
  Index param_arity() const;

  // Replaces leaf values from flat column-major concatenations (declaration
  // order), re-evaluates every node and returns the last node's scalar value.
  double forward(const Eigen::VectorXd& inputs, const Eigen::VectorXd& params);

  // Reverse sweep from a 1x1 output. Returns one adjoint per requested node,
  // zero-filled when the node does not influence `output`.
  std::vector<Matrix> grad(NodeId output, std::span<const NodeId> wrt) const;
  Eigen::VectorXd grad_flat(NodeId output, std::span<const NodeId> wrt) const;

  // Appends nodes computing d output / d input[component, :], column by column.
  // `output` must have one row; column j may only depend on column j of the
  // input. Activation masks of piecewise-linear ops are frozen at their
  // current values.
  NodeId input_grad_node(NodeId output, NodeId input, Index component);

 private:
  NodeId push(Node n);
  NodeId unary(Op op, NodeId a);
  NodeId binary(Op op, NodeId a, NodeId b);
  void check(NodeId id) const;
  Matrix evaluate(const Node& n) const;
  NodeId jvp_add(NodeId ta, NodeId tb);

  std::vector<Node> nodes_;
  std::vector<NodeId> input_ids_;
  std::vector<NodeId> param_ids_;
};

// Elementwise broadcasting helpers, shared with tests.
Matrix broadcast_to(const Matrix& m, Index rows, Index cols);
Matrix reduce_to(const Matrix& g, Index rows, Index cols);

}  // namespace wpinn::ad
