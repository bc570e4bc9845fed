#include "wpinn/autodiff.hpp"

#include <cmath>
#include <string>

#include "wpinn/errors.hpp"

namespace wpinn::ad {

namespace {

Index broadcast_dim(Index a, Index b) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw ContractError("incompatible broadcast dimensions " + std::to_string(a) +
                      " and " + std::to_string(b));
}

double sign_of(double x) { return (x > 0.0) - (x < 0.0); }

bool is_leaf(Op op) {
  return op == Op::Constant || op == Op::Input || op == Op::Parameter;
}

bool has_zero_derivative(Op op) {
  return op == Op::Sign || op == Op::Step || op == Op::GeMask;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Input: return "input";
    case Op::Parameter: return "parameter";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Scale: return "scale";
    case Op::MatMul: return "matvec";
    case Op::Relu: return "relu";
    case Op::Tanh: return "tanh";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Abs: return "abs";
    case Op::Sign: return "sign";
    case Op::Step: return "step";
    case Op::GeMask: return "ge_mask";
    case Op::Max: return "max";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::PosClip: return "posclip";
    case Op::Rows: return "rows";
    case Op::Cols: return "cols";
    case Op::VStack: return "vstack";
  }
  return "unknown";
}

Matrix broadcast_to(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) return Matrix::Constant(rows, cols, m(0, 0));
  if (m.rows() == rows && m.cols() == 1) return m.replicate(1, cols);
  if (m.rows() == 1 && m.cols() == cols) return m.replicate(rows, 1);
  throw ContractError("cannot broadcast operand");
}

Matrix reduce_to(const Matrix& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (g.rows() == rows && cols == 1) return g.rowwise().sum();
  if (rows == 1 && g.cols() == cols) return g.colwise().sum();
  throw ContractError("cannot reduce adjoint");
}

void Tape::check(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ContractError("node id " + std::to_string(id) + " not on tape");
  }
}

const Node& Tape::node(NodeId id) const {
  check(id);
  return nodes_[static_cast<std::size_t>(id)];
}

double Tape::scalar(NodeId id) const {
  const Matrix& v = value(id);
  if (v.size() != 1) throw ContractError("node is not scalar-valued");
  return v(0, 0);
}

NodeId Tape::push(Node n) {
  if (!is_leaf(n.op)) {
    n.requires_grad = false;
    if (!has_zero_derivative(n.op)) {
      for (NodeId p : n.parents) {
        if (p >= 0 && nodes_[static_cast<std::size_t>(p)].requires_grad) n.requires_grad = true;
      }
    }
    n.value = evaluate(n);
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

NodeId Tape::input(Matrix value) {
  if (!value.allFinite()) throw InputError("non-finite input value");
  Node n;
  n.op = Op::Input;
  n.value = std::move(value);
  n.requires_grad = true;
  NodeId id = push(std::move(n));
  input_ids_.push_back(id);
  return id;
}

NodeId Tape::parameter(Matrix value) {
  Node n;
  n.op = Op::Parameter;
  n.value = std::move(value);
  n.requires_grad = true;
  NodeId id = push(std::move(n));
  param_ids_.push_back(id);
  return id;
}

NodeId Tape::unary(Op op, NodeId a) {
  check(a);
  Node n;
  n.op = op;
  n.parents = {a, -1};
  return push(std::move(n));
}

NodeId Tape::binary(Op op, NodeId a, NodeId b) {
  check(a);
  check(b);
  Node n;
  n.op = op;
  n.parents = {a, b};
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
NodeId Tape::sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
NodeId Tape::mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
NodeId Tape::div(NodeId a, NodeId b) { return binary(Op::Div, a, b); }
NodeId Tape::max(NodeId a, NodeId b) { return binary(Op::Max, a, b); }
NodeId Tape::ge_mask(NodeId a, NodeId b) { return binary(Op::GeMask, a, b); }
NodeId Tape::matmul(NodeId a, NodeId b) { return binary(Op::MatMul, a, b); }

NodeId Tape::scale(NodeId a, double factor) {
  check(a);
  Node n;
  n.op = Op::Scale;
  n.parents = {a, -1};
  n.factor = factor;
  return push(std::move(n));
}

NodeId Tape::add_scalar(NodeId a, double value) { return add(a, constant(value)); }

NodeId Tape::relu(NodeId a) { return unary(Op::Relu, a); }
NodeId Tape::tanh(NodeId a) { return unary(Op::Tanh, a); }
NodeId Tape::sin(NodeId a) { return unary(Op::Sin, a); }
NodeId Tape::cos(NodeId a) { return unary(Op::Cos, a); }
NodeId Tape::abs(NodeId a) { return unary(Op::Abs, a); }
NodeId Tape::sign(NodeId a) { return unary(Op::Sign, a); }
NodeId Tape::step(NodeId a) { return unary(Op::Step, a); }
NodeId Tape::square(NodeId a) { return unary(Op::Square, a); }
NodeId Tape::posclip(NodeId a) { return unary(Op::PosClip, a); }
NodeId Tape::sum(NodeId a) { return unary(Op::Sum, a); }

NodeId Tape::rows(NodeId a, Index begin, Index count) {
  check(a);
  if (begin < 0 || count < 0 || begin + count > value(a).rows()) {
    throw ContractError("row slice out of range");
  }
  Node n;
  n.op = Op::Rows;
  n.parents = {a, -1};
  n.begin = begin;
  n.count = count;
  return push(std::move(n));
}

NodeId Tape::cols(NodeId a, Index begin, Index count) {
  check(a);
  if (begin < 0 || count < 0 || begin + count > value(a).cols()) {
    throw ContractError("column slice out of range");
  }
  Node n;
  n.op = Op::Cols;
  n.parents = {a, -1};
  n.begin = begin;
  n.count = count;
  return push(std::move(n));
}

NodeId Tape::vstack(NodeId a, NodeId b) {
  if (value(a).cols() != value(b).cols()) throw ContractError("vstack column mismatch");
  return binary(Op::VStack, a, b);
}

Matrix Tape::evaluate(const Node& n) const {
  const auto val = [&](int k) -> const Matrix& {
    return nodes_[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(k)])].value;
  };
  switch (n.op) {
    case Op::Constant:
    case Op::Input:
    case Op::Parameter:
      return n.value;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Max:
    case Op::GeMask: {
      const Matrix& a = val(0);
      const Matrix& b = val(1);
      const Index r = broadcast_dim(a.rows(), b.rows());
      const Index c = broadcast_dim(a.cols(), b.cols());
      // Skip the copy when shapes already agree.
      if (a.rows() == r && a.cols() == c && b.rows() == r && b.cols() == c) {
        switch (n.op) {
          case Op::Add: return a + b;
          case Op::Sub: return a - b;
          case Op::Mul: return a.cwiseProduct(b);
          case Op::Div: return a.cwiseQuotient(b);
          case Op::Max: return a.cwiseMax(b);
          default: return (a.array() >= b.array()).cast<double>().matrix();
        }
      }
      const Matrix A = broadcast_to(a, r, c);
      const Matrix B = broadcast_to(b, r, c);
      switch (n.op) {
        case Op::Add: return A + B;
        case Op::Sub: return A - B;
        case Op::Mul: return A.cwiseProduct(B);
        case Op::Div: return A.cwiseQuotient(B);
        case Op::Max: return A.cwiseMax(B);
        default: return (A.array() >= B.array()).cast<double>().matrix();
      }
    }
    case Op::Scale:
      return n.factor * val(0);
    case Op::MatMul: {
      const Matrix& a = val(0);
      const Matrix& b = val(1);
      if (a.cols() != b.rows()) throw ContractError("matvec inner dimension mismatch");
      return a * b;
    }
    case Op::Relu:
    case Op::PosClip:
      return val(0).cwiseMax(0.0);
    case Op::Tanh:
      return val(0).array().tanh().matrix();
    case Op::Sin:
      return val(0).array().sin().matrix();
    case Op::Cos:
      return val(0).array().cos().matrix();
    case Op::Abs:
      return val(0).cwiseAbs();
    case Op::Sign:
      return val(0).unaryExpr([](double x) { return sign_of(x); });
    case Op::Step:
      return (val(0).array() > 0.0).cast<double>().matrix();
    case Op::Square:
      return val(0).array().square().matrix();
    case Op::Sum:
      return Matrix::Constant(1, 1, val(0).sum());
    case Op::Rows:
      return val(0).middleRows(n.begin, n.count);
    case Op::Cols:
      return val(0).middleCols(n.begin, n.count);
    case Op::VStack: {
      Matrix out(val(0).rows() + val(1).rows(), val(0).cols());
      out << val(0), val(1);
      return out;
    }
  }
  throw ContractError("unhandled op");
}

Index Tape::input_arity() const {
  Index n = 0;
  for (NodeId id : input_ids_) n += value(id).size();
  return n;
}

Index Tape::param_arity() const {
  Index n = 0;
  for (NodeId id : param_ids_) n += value(id).size();
  return n;
}

double Tape::forward(const Eigen::VectorXd& inputs, const Eigen::VectorXd& params) {
  if (inputs.size() != input_arity()) {
    throw ConfigError("input arity mismatch: expected " + std::to_string(input_arity()) +
                      ", got " + std::to_string(inputs.size()));
  }
  if (params.size() != param_arity()) {
    throw ConfigError("parameter arity mismatch: expected " + std::to_string(param_arity()) +
                      ", got " + std::to_string(params.size()));
  }
  if (!inputs.allFinite()) throw InputError("non-finite input value");
  if (nodes_.empty()) throw ContractError("empty tape");

  const auto scatter = [&](const std::vector<NodeId>& ids, const Eigen::VectorXd& flat) {
    Index offset = 0;
    for (NodeId id : ids) {
      Matrix& v = nodes_[static_cast<std::size_t>(id)].value;
      v = Eigen::Map<const Matrix>(flat.data() + offset, v.rows(), v.cols());
      offset += v.size();
    }
  };
  scatter(input_ids_, inputs);
  scatter(param_ids_, params);

  for (Node& n : nodes_) {
    if (!is_leaf(n.op)) n.value = evaluate(n);
  }
  return scalar(static_cast<NodeId>(nodes_.size() - 1));
}

std::vector<Matrix> Tape::grad(NodeId output, std::span<const NodeId> wrt) const {
  check(output);
  if (value(output).size() != 1) throw ContractError("grad requires a scalar output");

  const auto out = static_cast<std::size_t>(output);
  std::vector<Matrix> adj(out + 1);
  std::vector<char> live(out + 1, 0);
  adj[out] = Matrix::Ones(1, 1);
  live[out] = 1;
  std::vector<char> keep(out + 1, 0);
  for (NodeId id : wrt) {
    check(id);
    if (static_cast<std::size_t>(id) <= out) keep[static_cast<std::size_t>(id)] = 1;
  }

  const auto accumulate = [&](NodeId p, Matrix g) {
    const auto k = static_cast<std::size_t>(p);
    if (!nodes_[k].requires_grad) return;
    const Matrix& pv = nodes_[k].value;
    if (g.rows() != pv.rows() || g.cols() != pv.cols()) g = reduce_to(g, pv.rows(), pv.cols());
    if (!live[k]) {
      adj[k] = std::move(g);
      live[k] = 1;
    } else {
      adj[k] += g;
    }
  };
  // Elementwise product with a parent value, broadcasting only when needed.
  const auto times = [&](const Matrix& g, NodeId p) -> Matrix {
    const Matrix& v = nodes_[static_cast<std::size_t>(p)].value;
    if (v.rows() == g.rows() && v.cols() == g.cols()) return g.cwiseProduct(v);
    return g.cwiseProduct(broadcast_to(v, g.rows(), g.cols()));
  };

  for (std::size_t i = out + 1; i-- > 0;) {
    if (!live[i]) continue;
    const Node& n = nodes_[i];
    if (is_leaf(n.op) || has_zero_derivative(n.op) || !n.requires_grad) continue;
    // Adjoints of requested nodes are kept; others are consumed here.
    Matrix g = keep[i] ? adj[i] : std::move(adj[i]);
    const NodeId pa = n.parents[0];
    const NodeId pb = n.parents[1];
    const auto pval = [&](NodeId p) -> const Matrix& { return nodes_[static_cast<std::size_t>(p)].value; };

    switch (n.op) {
      case Op::Add:
        accumulate(pa, g);
        accumulate(pb, std::move(g));
        break;
      case Op::Sub:
        accumulate(pa, g);
        accumulate(pb, -g);
        break;
      case Op::Mul: {
        if (nodes_[static_cast<std::size_t>(pa)].requires_grad) accumulate(pa, times(g, pb));
        if (nodes_[static_cast<std::size_t>(pb)].requires_grad) accumulate(pb, times(g, pa));
        break;
      }
      case Op::Div: {
        const Index r = n.value.rows(), c = n.value.cols();
        const Matrix B = broadcast_to(pval(pb), r, c);
        accumulate(pa, g.cwiseQuotient(B));
        accumulate(pb, -g.cwiseProduct(n.value).cwiseQuotient(B));
        break;
      }
      case Op::Max: {
        const Index r = n.value.rows(), c = n.value.cols();
        const Matrix mask =
            (broadcast_to(pval(pa), r, c).array() >= broadcast_to(pval(pb), r, c).array())
                .cast<double>()
                .matrix();
        accumulate(pa, g.cwiseProduct(mask));
        accumulate(pb, g - g.cwiseProduct(mask));
        break;
      }
      case Op::Scale:
        accumulate(pa, n.factor * g);
        break;
      case Op::MatMul:
        accumulate(pa, g * pval(pb).transpose());
        accumulate(pb, pval(pa).transpose() * g);
        break;
      case Op::Relu:
      case Op::PosClip:
        accumulate(pa, g.cwiseProduct((pval(pa).array() > 0.0).cast<double>().matrix()));
        break;
      case Op::Tanh:
        accumulate(pa, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Op::Sin:
        accumulate(pa, g.cwiseProduct(pval(pa).array().cos().matrix()));
        break;
      case Op::Cos:
        accumulate(pa, -g.cwiseProduct(pval(pa).array().sin().matrix()));
        break;
      case Op::Abs:
        accumulate(pa, g.cwiseProduct(pval(pa).unaryExpr([](double x) { return sign_of(x); })));
        break;
      case Op::Square:
        accumulate(pa, 2.0 * g.cwiseProduct(pval(pa)));
        break;
      case Op::Sum: {
        const Matrix& a = pval(pa);
        accumulate(pa, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      }
      case Op::Rows: {
        const Matrix& a = pval(pa);
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleRows(n.begin, n.count) = g;
        accumulate(pa, full);
        break;
      }
      case Op::Cols: {
        const Matrix& a = pval(pa);
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleCols(n.begin, n.count) = g;
        accumulate(pa, full);
        break;
      }
      case Op::VStack: {
        const Index ra = pval(pa).rows();
        accumulate(pa, g.topRows(ra));
        accumulate(pb, g.bottomRows(g.rows() - ra));
        break;
      }
      default:
        break;
    }
  }

  std::vector<Matrix> result;
  result.reserve(wrt.size());
  for (NodeId id : wrt) {
    check(id);
    const auto k = static_cast<std::size_t>(id);
    if (k <= out && live[k]) {
      result.push_back(adj[k]);
    } else {
      result.push_back(Matrix::Zero(nodes_[k].value.rows(), nodes_[k].value.cols()));
    }
  }
  return result;
}

Eigen::VectorXd Tape::grad_flat(NodeId output, std::span<const NodeId> wrt) const {
  const std::vector<Matrix> parts = grad(output, wrt);
  Index total = 0;
  for (const Matrix& m : parts) total += m.size();
  Eigen::VectorXd flat(total);
  Index offset = 0;
  for (const Matrix& m : parts) {
    flat.segment(offset, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    offset += m.size();
  }
  return flat;
}

// -1 encodes a structurally zero tangent.
NodeId Tape::jvp_add(NodeId ta, NodeId tb) {
  if (ta < 0) return tb;
  if (tb < 0) return ta;
  return add(ta, tb);
}

NodeId Tape::input_grad_node(NodeId output, NodeId input, Index component) {
  check(output);
  check(input);
  if (node(input).op != Op::Input) throw ContractError("input_grad_node: node is not an input");
  if (value(output).rows() != 1) throw ContractError("input_grad_node: output must have one row");
  const Matrix& x = value(input);
  if (component < 0 || component >= x.rows()) throw ContractError("input component out of range");

  std::vector<NodeId> tangent(static_cast<std::size_t>(output) + 1, -1);
  Matrix seed = Matrix::Zero(x.rows(), x.cols());
  seed.row(component).setOnes();
  tangent[static_cast<std::size_t>(input)] = constant(std::move(seed));

  for (NodeId i = input + 1; i <= output; ++i) {
    // Copy: pushing new nodes may reallocate nodes_.
    const Op op = nodes_[static_cast<std::size_t>(i)].op;
    const NodeId a = nodes_[static_cast<std::size_t>(i)].parents[0];
    const NodeId b = nodes_[static_cast<std::size_t>(i)].parents[1];
    const double factor = nodes_[static_cast<std::size_t>(i)].factor;
    const Index begin = nodes_[static_cast<std::size_t>(i)].begin;
    const Index count = nodes_[static_cast<std::size_t>(i)].count;
    const NodeId ta = a >= 0 ? tangent[static_cast<std::size_t>(a)] : -1;
    const NodeId tb = b >= 0 ? tangent[static_cast<std::size_t>(b)] : -1;
    if (ta < 0 && tb < 0) continue;

    NodeId t = -1;
    switch (op) {
      case Op::Add:
        t = jvp_add(ta, tb);
        break;
      case Op::Sub:
        t = tb < 0 ? ta : (ta < 0 ? scale(tb, -1.0) : sub(ta, tb));
        break;
      case Op::Mul:
        t = jvp_add(ta < 0 ? -1 : mul(ta, b), tb < 0 ? -1 : mul(a, tb));
        break;
      case Op::Div: {
        const NodeId da = ta < 0 ? -1 : div(ta, b);
        const NodeId db = tb < 0 ? -1 : scale(div(mul(i, tb), b), -1.0);
        t = jvp_add(da, db);
        break;
      }
      case Op::Max: {
        const NodeId m = ge_mask(a, b);
        const NodeId da = ta < 0 ? -1 : mul(m, ta);
        const NodeId db = tb < 0 ? -1 : sub(tb, mul(m, tb));
        t = jvp_add(da, db);
        break;
      }
      case Op::Scale:
        t = scale(ta, factor);
        break;
      case Op::MatMul:
        t = jvp_add(ta < 0 ? -1 : matmul(ta, b), tb < 0 ? -1 : matmul(a, tb));
        break;
      case Op::Relu:
      case Op::PosClip:
        t = mul(step(a), ta);
        break;
      case Op::Tanh:
        t = mul(sub(constant(1.0), square(i)), ta);
        break;
      case Op::Sin:
        t = mul(cos(a), ta);
        break;
      case Op::Cos:
        t = scale(mul(sin(a), ta), -1.0);
        break;
      case Op::Abs:
        t = mul(sign(a), ta);
        break;
      case Op::Square:
        t = scale(mul(a, ta), 2.0);
        break;
      case Op::Sum:
        t = sum(ta);
        break;
      case Op::Rows:
        t = rows(ta, begin, count);
        break;
      case Op::Cols:
        t = cols(ta, begin, count);
        break;
      case Op::VStack: {
        const NodeId za = ta >= 0 ? ta : constant(Matrix::Zero(value(a).rows(), value(a).cols()));
        const NodeId zb = tb >= 0 ? tb : constant(Matrix::Zero(value(b).rows(), value(b).cols()));
        t = vstack(za, zb);
        break;
      }
      default:
        // Sign, Step, GeMask and leaves carry no tangent.
        break;
    }
    tangent[static_cast<std::size_t>(i)] = t;
  }

  const NodeId result = tangent[static_cast<std::size_t>(output)];
  const Matrix& out = value(output);
  if (result < 0) return constant(Matrix::Zero(out.rows(), out.cols()));
  if (value(result).rows() != out.rows() || value(result).cols() != out.cols()) {
    return add(result, constant(Matrix::Zero(out.rows(), out.cols())));
  }
  return result;
}

}  // namespace wpinn::ad
