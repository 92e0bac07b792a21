#include "neurec/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "neurec/text.hpp"

namespace neurec::nn {

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw NnError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "?";
}

namespace {

double sigmoid(double x) {
  // Split by sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kIdentity:
      return x;
  }
  return x;
}

Eigen::MatrixXd activate(Activation kind, const Eigen::MatrixXd& x) {
  switch (kind) {
    case Activation::kSigmoid:
      return x.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::kTanh:
      return x.array().tanh().matrix();
    case Activation::kRelu:
      return x.cwiseMax(0.0);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

Eigen::MatrixXd activation_derivative(Activation kind, const Eigen::MatrixXd& z, const Eigen::MatrixXd& h) {
  switch (kind) {
    case Activation::kSigmoid:
      return (h.array() * (1.0 - h.array())).matrix();
    case Activation::kTanh:
      return (1.0 - h.array().square()).matrix();
    case Activation::kRelu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::kIdentity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

std::size_t MlpParams::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t j = 1; j < layer_dims.size(); ++j) {
    const auto out = static_cast<std::size_t>(layer_dims[j]);
    const auto in = static_cast<std::size_t>(layer_dims[j - 1]);
    total += out * in + out;
  }
  return total;
}

void MlpParams::validate() const {
  if (layer_dims.size() < 2) throw NnError("an MLP needs at least an input and an output dimension");
  for (int d : layer_dims) {
    if (d < 1) throw NnError("layer dimensions must be >= 1");
  }
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw NnError("layer count does not match layer_dims");
  }
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const auto& w = weights[j];
    if (w.rows() != layer_dims[j + 1] || w.cols() != layer_dims[j] || biases[j].size() != layer_dims[j + 1]) {
      throw NnError("layer " + std::to_string(j + 1) + " shape does not match layer_dims");
    }
    if (!w.allFinite() || !biases[j].allFinite()) {
      throw NnError("layer " + std::to_string(j + 1) + " holds non-finite values");
    }
  }
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (a.layer_dims != b.layer_dims || a.activation != b.activation) return false;
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t j = 0; j < a.weights.size(); ++j) {
    if (a.weights[j] != b.weights[j] || a.biases[j] != b.biases[j]) return false;
  }
  return true;
}

void init_uniform_fan(Eigen::MatrixXd& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  // Row-major fill so the draw order is independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
  }
}

MlpParams init_params(std::span<const int> layer_dims, Activation activation, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw NnError("an MLP needs at least an input and an output dimension");
  for (int d : layer_dims) {
    if (d < 1) throw NnError("layer dimensions must be >= 1");
  }
  MlpParams p;
  p.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  p.activation = activation;
  Rng rng = make_rng(seed, RngStream::kInit);
  for (std::size_t j = 1; j < layer_dims.size(); ++j) {
    Eigen::MatrixXd w(layer_dims[j], layer_dims[j - 1]);
    init_uniform_fan(w, rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(layer_dims[j]));
  }
  return p;
}

Eigen::MatrixXd apply_input_dropout(const Eigen::MatrixXd& x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw NnError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      out(r, c) = rng.uniform() < rate ? 0.0 : x(r, c) * keep_scale;
    }
  }
  return out;
}

SparseInput apply_input_dropout(const SparseInput& x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw NnError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  SparseInput out = x;
  for (Eigen::Index c = 0; c < out.outerSize(); ++c) {
    for (SparseInput::InnerIterator it(out, c); it; ++it) it.valueRef() = rng.uniform() < rate ? 0.0 : it.value() * keep_scale;
  }
  out.prune(0.0, 0.0);
  return out;
}

namespace {

void check_input_rows(const MlpParams& params, Eigen::Index rows) {
  if (rows != params.input_dim()) {
    throw NnError("input has " + std::to_string(rows) + " rows, network expects " +
                  std::to_string(params.input_dim()));
  }
}

// Layers 2..L, given the first pre-activation.
void forward_rest(const MlpParams& params, Eigen::MatrixXd z1, ForwardTrace& trace) {
  trace.pre.reserve(params.num_layers());
  trace.post.reserve(params.num_layers());
  z1.colwise() += params.biases[0];
  trace.post.push_back(activate(params.activation, z1));
  trace.pre.push_back(std::move(z1));
  for (std::size_t j = 1; j < params.num_layers(); ++j) {
    Eigen::MatrixXd z = params.weights[j] * trace.post.back();
    z.colwise() += params.biases[j];
    trace.post.push_back(activate(params.activation, z));
    trace.pre.push_back(std::move(z));
  }
}

}  // namespace

ForwardTrace forward(const MlpParams& params, const Eigen::MatrixXd& x) {
  check_input_rows(params, x.rows());
  ForwardTrace trace;
  trace.input = x;
  forward_rest(params, params.weights[0] * x, trace);
  return trace;
}

ForwardTrace forward(const MlpParams& params, const SparseInput& x) {
  check_input_rows(params, x.rows());
  ForwardTrace trace;
  trace.sparse_input = x;
  trace.sparse = true;
  forward_rest(params, params.weights[0] * x, trace);
  return trace;
}

MlpGradients MlpGradients::zeros_like(const MlpParams& params) {
  MlpGradients g;
  for (std::size_t j = 0; j < params.num_layers(); ++j) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[j].rows(), params.weights[j].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[j].size()));
  }
  return g;
}

MlpGradients backward(const MlpParams& params, const ForwardTrace& trace, const Eigen::MatrixXd& grad_output,
                      bool with_input) {
  const std::size_t layers = params.num_layers();
  if (trace.post.size() != layers || trace.pre.size() != layers) {
    throw NnError("trace does not belong to this network");
  }
  if (grad_output.rows() != params.output_dim() || grad_output.cols() != trace.output().cols()) {
    throw NnError("grad_output shape does not match the network output");
  }
  MlpGradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd upstream = grad_output;
  for (std::size_t jj = layers; jj-- > 0;) {
    const Eigen::MatrixXd delta =
        upstream.cwiseProduct(activation_derivative(params.activation, trace.pre[jj], trace.post[jj]));
    if (jj == 0 && trace.sparse) {
      g.weights[jj] = delta * trace.sparse_input.transpose();
    } else {
      const Eigen::MatrixXd& below = jj == 0 ? trace.input : trace.post[jj - 1];
      g.weights[jj].noalias() = delta * below.transpose();
    }
    g.biases[jj] = delta.rowwise().sum();
    if (jj > 0 || with_input) {
      upstream.noalias() = params.weights[jj].transpose() * delta;
    }
  }
  if (with_input) g.input = std::move(upstream);
  return g;
}

ParamBlock block(std::string name, Eigen::MatrixXd& values, const Eigen::MatrixXd& grads) {
  if (values.rows() != grads.rows() || values.cols() != grads.cols()) {
    throw NnError("gradient shape mismatch for block " + name);
  }
  return ParamBlock{std::move(name), std::span<double>(values.data(), static_cast<std::size_t>(values.size())),
                    std::span<const double>(grads.data(), static_cast<std::size_t>(grads.size()))};
}

ParamBlock block(std::string name, Eigen::VectorXd& values, const Eigen::VectorXd& grads) {
  if (values.size() != grads.size()) throw NnError("gradient shape mismatch for block " + name);
  return ParamBlock{std::move(name), std::span<double>(values.data(), static_cast<std::size_t>(values.size())),
                    std::span<const double>(grads.data(), static_cast<std::size_t>(grads.size()))};
}

std::vector<ParamBlock> mlp_blocks(MlpParams& params, const MlpGradients& grads) {
  if (grads.weights.size() != params.num_layers() || grads.biases.size() != params.num_layers()) {
    throw NnError("gradient layer count does not match the network");
  }
  std::vector<ParamBlock> blocks;
  for (std::size_t j = 0; j < params.num_layers(); ++j) {
    blocks.push_back(block("W" + std::to_string(j + 1), params.weights[j], grads.weights[j]));
    blocks.push_back(block("b" + std::to_string(j + 1), params.biases[j], grads.biases[j]));
  }
  return blocks;
}

void AdamState::step(std::span<const ParamBlock> blocks) {
  if (m_.empty() && step_count_ == 0) {
    for (const auto& b : blocks) {
      m_.push_back(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(b.values.size())));
      v_.push_back(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(b.values.size())));
    }
  }
  if (blocks.size() != m_.size()) throw NnError("Adam state tracks a different number of parameter blocks");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    if (b.values.size() != b.grads.size() || static_cast<Eigen::Index>(b.values.size()) != m_[k].size()) {
      throw NnError("Adam state shape mismatch for block " + b.name);
    }
    Eigen::Map<const Eigen::ArrayXd> g(b.grads.data(), static_cast<Eigen::Index>(b.grads.size()));
    if (!g.allFinite()) throw NnError("non-finite gradient in parameter block " + b.name);
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(hyper_.beta1, t);
  const double c2 = 1.0 - std::pow(hyper_.beta2, t);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    const auto n = static_cast<Eigen::Index>(b.values.size());
    Eigen::Map<const Eigen::ArrayXd> g(b.grads.data(), n);
    Eigen::Map<Eigen::ArrayXd> p(b.values.data(), n);
    m_[k] = hyper_.beta1 * m_[k] + (1.0 - hyper_.beta1) * g;
    v_[k] = hyper_.beta2 * v_[k] + (1.0 - hyper_.beta2) * g.square();
    p -= hyper_.learning_rate * (m_[k] / c1) / ((v_[k] / c2).sqrt() + hyper_.epsilon);
  }
}

void adam_step(AdamState& state, MlpParams& params, const MlpGradients& grads) {
  const auto blocks = mlp_blocks(params, grads);
  state.step(blocks);
}

void write_matrix(std::ostream& out, std::string_view name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << text::format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, std::string_view expected_name) {
  std::string name;
  Eigen::Index rows = -1;
  Eigen::Index cols = -1;
  if (!(in >> name >> rows >> cols)) {
    throw NnError("truncated checkpoint: expected block " + std::string(expected_name));
  }
  if (name != expected_name) {
    throw NnError("checkpoint block '" + name + "' found where '" + std::string(expected_name) + "' expected");
  }
  if (rows < 0 || cols < 0) throw NnError("negative shape in block " + name);
  Eigen::MatrixXd m(rows, cols);
  std::string tok;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(in >> tok)) throw NnError("truncated values in block " + name);
      const auto v = text::parse_double(tok);
      if (!v) throw NnError("bad number '" + tok + "' in block " + name);
      m(r, c) = *v;
    }
  }
  return m;
}

void save_params(const MlpParams& params, std::ostream& out) {
  out << "neurec-mlp 1\n";
  out << "activation " << to_string(params.activation) << '\n';
  out << "layers " << params.layer_dims.size();
  for (int d : params.layer_dims) out << ' ' << d;
  out << '\n';
  for (std::size_t j = 0; j < params.num_layers(); ++j) {
    write_matrix(out, "W" + std::to_string(j + 1), params.weights[j]);
    write_matrix(out, "b" + std::to_string(j + 1), params.biases[j]);
  }
}

MlpParams load_params(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "neurec-mlp" || version != 1) {
    throw NnError("not a neurec-mlp v1 checkpoint");
  }
  std::string key;
  std::string act;
  if (!(in >> key >> act) || key != "activation") throw NnError("checkpoint missing activation");
  MlpParams p;
  p.activation = parse_activation(act);
  std::size_t count = 0;
  if (!(in >> key >> count) || key != "layers" || count < 2 || count > 1024) {
    throw NnError("checkpoint missing layer dims");
  }
  p.layer_dims.resize(count);
  for (auto& d : p.layer_dims) {
    if (!(in >> d) || d < 1) throw NnError("bad layer dimension in checkpoint");
  }
  for (std::size_t j = 1; j < count; ++j) {
    p.weights.push_back(read_matrix(in, "W" + std::to_string(j)));
    p.biases.push_back(read_matrix(in, "b" + std::to_string(j)));
  }
  p.validate();
  return p;
}

}  // namespace neurec::nn
