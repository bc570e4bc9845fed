#include "wpinn/network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "wpinn/errors.hpp"

namespace wpinn::network {

using geometry::kPi;

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sin") return Activation::Sin;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sin: return "sin";
  }
  return "relu";
}

Eigen::Index MlpParams::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
  return n;
}

void MlpParams::validate() const {
  if (sizes.size() < 2) throw ConfigError("network needs at least input and output layers");
  for (int s : sizes) {
    if (s <= 0) throw ConfigError("zero-width layer");
  }
  if (sizes.front() != feature_dim(periodic_lambda)) {
    throw ConfigError("input width " + std::to_string(sizes.front()) + " does not match " +
                      std::to_string(feature_dim(periodic_lambda)) + " features");
  }
  if (sizes.back() != 1) throw ConfigError("network output must be scalar");
  if (weights.size() != sizes.size() - 1 || biases.size() != weights.size()) {
    throw ConfigError("layer count does not match sizes");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != sizes[k + 1] || weights[k].cols() != sizes[k] ||
        biases[k].size() != sizes[k + 1]) {
      throw ConfigError("layer " + std::to_string(k) + " shape mismatch");
    }
  }
}

// Row-major weights then bias, layer by layer.
Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    for (Eigen::Index i = 0; i < weights[k].rows(); ++i) {
      flat.segment(offset, weights[k].cols()) = weights[k].row(i).transpose();
      offset += weights[k].cols();
    }
    flat.segment(offset, biases[k].size()) = biases[k];
    offset += biases[k].size();
  }
  return flat;
}

void MlpParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw ConfigError("flat parameter size mismatch");
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    for (Eigen::Index i = 0; i < weights[k].rows(); ++i) {
      weights[k].row(i) = flat.segment(offset, weights[k].cols()).transpose();
      offset += weights[k].cols();
    }
    biases[k] = flat.segment(offset, biases[k].size());
    offset += biases[k].size();
  }
}

namespace {

Eigen::MatrixXd feature_matrix(const Eigen::Matrix3Xd& points, bool periodic) {
  if (!periodic) return points;
  Eigen::MatrixXd f(4, points.cols());
  f.row(0) = (kPi * points.row(0)).array().cos().matrix();
  f.row(1) = (kPi * points.row(0)).array().sin().matrix();
  f.bottomRows(2) = points.bottomRows(2);
  return f;
}

void activate(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Sin: z = z.array().sin().matrix(); break;
  }
}

ad::NodeId activate(ad::Tape& tape, ad::NodeId z, Activation a) {
  switch (a) {
    case Activation::Relu: return tape.relu(z);
    case Activation::Tanh: return tape.tanh(z);
    case Activation::Sin: return tape.sin(z);
  }
  return z;
}

}  // namespace

Eigen::RowVectorXd MlpParams::evaluate(const Eigen::Matrix3Xd& points) const {
  Eigen::MatrixXd h = feature_matrix(points, periodic_lambda);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Eigen::MatrixXd z = weights[k] * h;
    z.colwise() += biases[k];
    if (k + 1 < weights.size()) activate(z, activation);
    h = std::move(z);
  }
  return h.row(0);
}

double MlpParams::evaluate(const ChartPoint<double>& p) const {
  Eigen::Matrix3Xd x(3, 1);
  x << p.lambda, p.phi, p.t;
  return evaluate(x)(0);
}

std::vector<int> make_arch(int width, int depth, bool periodic_lambda) {
  if (width <= 0 || depth < 0) throw ConfigError("invalid width/depth");
  std::vector<int> sizes{feature_dim(periodic_lambda)};
  for (int i = 0; i < depth; ++i) sizes.push_back(width);
  sizes.push_back(1);
  return sizes;
}

MlpParams init_params(std::vector<int> sizes, Activation activation, bool periodic_lambda,
                      std::uint64_t seed) {
  MlpParams p;
  p.sizes = std::move(sizes);
  p.activation = activation;
  p.periodic_lambda = periodic_lambda;
  for (int s : p.sizes) {
    if (s <= 0) throw ConfigError("zero-width layer");
  }
  if (p.sizes.size() < 2) throw ConfigError("network needs at least input and output layers");

  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k + 1 < p.sizes.size(); ++k) {
    const int fan_in = p.sizes[k];
    const int fan_out = p.sizes[k + 1];
    const double stddev = activation == Activation::Relu
                              ? std::sqrt(2.0 / fan_in)
                              : std::sqrt(2.0 / (fan_in + fan_out));
    std::normal_distribution<double> normal(0.0, stddev);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  p.validate();
  return p;
}

double eval_solution(const MlpParams& params, const ChartPoint<double>& p) {
  return params.evaluate(p);
}

std::vector<ad::NodeId> NetNodes::all() const {
  std::vector<ad::NodeId> ids;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    ids.push_back(weights[k]);
    ids.push_back(biases[k]);
  }
  return ids;
}

NetNodes declare(ad::Tape& tape, const MlpParams& params, bool trainable) {
  NetNodes nodes;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    const ad::Matrix w = params.weights[k];
    const ad::Matrix b = params.biases[k];
    nodes.weights.push_back(trainable ? tape.parameter(w) : tape.constant(w));
    nodes.biases.push_back(trainable ? tape.parameter(b) : tape.constant(b));
  }
  return nodes;
}

ad::NodeId features(ad::Tape& tape, ad::NodeId coords, bool periodic_lambda) {
  if (!periodic_lambda) return coords;
  const ad::NodeId angle = tape.scale(tape.rows(coords, 0, 1), kPi);
  const ad::NodeId trig = tape.vstack(tape.cos(angle), tape.sin(angle));
  return tape.vstack(trig, tape.rows(coords, 1, 2));
}

ad::NodeId build_forward(ad::Tape& tape, const MlpParams& params, const NetNodes& nodes,
                         ad::NodeId coords) {
  ad::NodeId h = features(tape, coords, params.periodic_lambda);
  for (std::size_t k = 0; k < nodes.weights.size(); ++k) {
    ad::NodeId z = tape.add(tape.matmul(nodes.weights[k], h), nodes.biases[k]);
    h = k + 1 < nodes.weights.size() ? activate(tape, z, params.activation) : z;
  }
  return h;
}

Eigen::VectorXd flat_grad(const ad::Tape& tape, ad::NodeId output, const NetNodes& nodes) {
  const std::vector<ad::NodeId> ids = nodes.all();
  const std::vector<ad::Matrix> g = tape.grad(output, ids);
  Eigen::Index total = 0;
  for (const auto& m : g) total += m.size();
  Eigen::VectorXd flat(total);
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < g.size(); k += 2) {
    const ad::Matrix& w = g[k];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      flat.segment(offset, w.cols()) = w.row(i).transpose();
      offset += w.cols();
    }
    const ad::Matrix& b = g[k + 1];
    flat.segment(offset, b.size()) = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    offset += b.size();
  }
  return flat;
}

CutoffSpec::Form parse_cutoff_form(std::string_view name) {
  if (name == "polynomial-bump" || name == "polynomial") return CutoffSpec::Form::PolynomialBump;
  if (name == "sine-bump" || name == "sine") return CutoffSpec::Form::SineBump;
  throw ConfigError("unknown cutoff form '" + std::string(name) + "'");
}

std::string_view to_string(CutoffSpec::Form form) {
  return form == CutoffSpec::Form::SineBump ? "sine-bump" : "polynomial-bump";
}

namespace {

// Bump on [lo, hi] and its derivative.
std::pair<double, double> bump(CutoffSpec::Form form, double x, double lo, double hi) {
  if (form == CutoffSpec::Form::SineBump) {
    const double k = kPi / (hi - lo);
    return {std::sin(k * (x - lo)), k * std::cos(k * (x - lo))};
  }
  return {(x - lo) * (hi - x), (hi - x) - (x - lo)};
}

}  // namespace

Eigen::Matrix<double, 4, Eigen::Dynamic> cutoff_jet(const CutoffSpec& spec,
                                                    const Eigen::Matrix3Xd& points) {
  const Domain& d = spec.domain;
  Eigen::Matrix<double, 4, Eigen::Dynamic> jet(4, points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const auto [bl, dbl] = d.periodic_lambda
                               ? std::pair<double, double>{1.0, 0.0}
                               : bump(spec.form, points(0, j), d.lambda.lo, d.lambda.hi);
    const auto [bp, dbp] = bump(spec.form, points(1, j), d.phi.lo, d.phi.hi);
    double bt = 1.0;
    double dbt = 0.0;
    if (spec.vanish_in_time) {
      const double t = points(2, j);
      const double norm = 4.0 / (d.T * d.T);
      bt = norm * t * (d.T - t);
      dbt = norm * (d.T - 2.0 * t);
    }
    jet(0, j) = bl * bp * bt;
    jet(1, j) = bl * bp * dbt;
    jet(2, j) = dbl * bp * bt;
    jet(3, j) = bl * dbp * bt;
  }
  return jet;
}

TestFields eval_test_fn(ad::Tape& tape, const MlpParams& params, const NetNodes& nodes,
                        const CutoffSpec& cutoff, ad::NodeId coords) {
  if (tape.node(coords).op != ad::Op::Input) {
    throw ContractError("test function coordinates must be a tape input");
  }
  const Eigen::Matrix3Xd points = tape.value(coords);
  const Eigen::Matrix<double, 4, Eigen::Dynamic> jet = cutoff_jet(cutoff, points);

  const ad::NodeId raw = build_forward(tape, params, nodes, coords);
  const ad::NodeId raw_lambda = tape.input_grad_node(raw, coords, 0);
  const ad::NodeId raw_phi = tape.input_grad_node(raw, coords, 1);
  const ad::NodeId raw_t = tape.input_grad_node(raw, coords, 2);

  const ad::NodeId omega = tape.constant(ad::Matrix(jet.row(0)));
  const auto product = [&](int row, ad::NodeId raw_derivative) {
    const ad::NodeId main = tape.mul(omega, raw_derivative);
    if (jet.row(row).isZero(0.0)) return main;
    return tape.add(tape.mul(tape.constant(ad::Matrix(jet.row(row))), raw), main);
  };

  TestFields f;
  f.xi = tape.mul(omega, raw);
  f.xi_t = product(1, raw_t);
  f.xi_lambda = product(2, raw_lambda);
  f.xi_phi = product(3, raw_phi);
  return f;
}

Eigen::Vector4d eval_test_fn(const MlpParams& params, const CutoffSpec& cutoff,
                             const ChartPoint<double>& p) {
  ad::Tape tape;
  Eigen::Matrix3Xd x(3, 1);
  x << p.lambda, p.phi, p.t;
  const ad::NodeId coords = tape.input(x);
  const NetNodes nodes = declare(tape, params, false);
  const TestFields f = eval_test_fn(tape, params, nodes, cutoff, coords);
  return {tape.scalar(f.xi), tape.scalar(f.xi_t), tape.scalar(f.xi_lambda), tape.scalar(f.xi_phi)};
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_checkpoint(std::ostream& out, const MlpParams& params, const CheckpointMeta& meta) {
  params.validate();
  out << "wpinn-checkpoint 1\n";
  out << "sizes";
  for (int s : params.sizes) out << ' ' << s;
  out << "\nactivation " << to_string(params.activation) << '\n';
  out << "periodic_lambda " << (params.periodic_lambda ? 1 : 0) << '\n';
  out << "seed " << meta.seed << '\n';
  out << "epoch " << meta.epoch << '\n';
  out << std::scientific << std::setprecision(16);
  out << "best_loss " << meta.best_loss << '\n';
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    const Eigen::MatrixXd& w = params.weights[k];
    out << "W " << k << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << w(i, j);
      out << '\n';
    }
    out << "b " << k << ' ' << params.biases[k].size() << '\n';
    for (Eigen::Index i = 0; i < params.biases[k].size(); ++i) {
      out << (i ? " " : "") << params.biases[k](i);
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

void write_checkpoint(const std::string& path, const MlpParams& params, const CheckpointMeta& meta) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, params, meta);
}

namespace {

template <typename T>
T expect(std::istream& in, const std::string& key) {
  std::string word;
  if (!(in >> word) || word != key) throw InputError("checkpoint: expected '" + key + "'");
  T value{};
  if (!(in >> value)) throw InputError("checkpoint: bad value for '" + key + "'");
  return value;
}

}  // namespace

MlpParams read_checkpoint(std::istream& in, CheckpointMeta* meta) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "wpinn-checkpoint" || version != 1) {
    throw InputError("not a wpinn checkpoint");
  }
  std::string line;
  std::string word;
  in >> word;
  if (word != "sizes") throw InputError("checkpoint: expected 'sizes'");
  std::getline(in, line);
  MlpParams p;
  {
    std::istringstream ls(line);
    int s = 0;
    while (ls >> s) p.sizes.push_back(s);
  }
  p.activation = parse_activation(expect<std::string>(in, "activation"));
  p.periodic_lambda = expect<int>(in, "periodic_lambda") != 0;
  CheckpointMeta m;
  m.seed = expect<std::uint64_t>(in, "seed");
  m.epoch = expect<long>(in, "epoch");
  // operator>> does not parse "inf"; accept it explicitly.
  {
    std::string key, text;
    if (!(in >> key >> text) || key != "best_loss") throw InputError("checkpoint: expected 'best_loss'");
    m.best_loss = std::strtod(text.c_str(), nullptr);
  }
  for (std::size_t k = 0; k + 1 < p.sizes.size(); ++k) {
    std::size_t idx = 0;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> word >> idx >> rows >> cols) || word != "W" || idx != k) {
      throw InputError("checkpoint: bad weight header for layer " + std::to_string(k));
    }
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> w(i, j))) throw InputError("checkpoint: truncated weights");
      }
    }
    Eigen::Index n = 0;
    if (!(in >> word >> idx >> n) || word != "b" || idx != k) {
      throw InputError("checkpoint: bad bias header for layer " + std::to_string(k));
    }
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(in >> b(i))) throw InputError("checkpoint: truncated biases");
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  p.validate();
  if (meta) *meta = m;
  return p;
}

MlpParams read_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in, meta);
}

}  // namespace wpinn::network
