#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "neurec/rng.hpp"

namespace neurec::nn {

class NnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { kSigmoid, kTanh, kRelu, kIdentity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation kind);

double activate(Activation kind, double x);
Eigen::MatrixXd activate(Activation kind, const Eigen::MatrixXd& x);

// f'(z), written in terms of the pre-activation z and the activation h = f(z).
// relu'(0) is 0.
Eigen::MatrixXd activation_derivative(Activation kind, const Eigen::MatrixXd& z, const Eigen::MatrixXd& h);

// Dense feed-forward stack h_j = f(W_j h_{j-1} + b_j), j = 1..L, with f applied
// at every layer including the last.
struct MlpParams {
  std::vector<int> layer_dims;          // d_0 .. d_L
  std::vector<Eigen::MatrixXd> weights;  // W_j is d_j x d_{j-1}
  std::vector<Eigen::VectorXd> biases;   // b_j has length d_j
  Activation activation = Activation::kSigmoid;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return weights.size(); }

  // Sum over layers of d_j * d_{j-1} + d_j.
  std::size_t parameter_count() const;

  // Throws NnError on an inconsistent dimension chain or non-finite values.
  void validate() const;

  friend bool operator==(const MlpParams&, const MlpParams&);
};

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
MlpParams init_params(std::span<const int> layer_dims, Activation activation, std::uint64_t seed);

// Fills `m` uniformly in +-sqrt(6 / (rows + cols)).
void init_uniform_fan(Eigen::MatrixXd& m, Rng& rng);

// Inverted dropout: each coordinate is zeroed with probability `rate` and
// survivors are scaled by 1 / (1 - rate).
Eigen::MatrixXd apply_input_dropout(const Eigen::MatrixXd& x, double rate, Rng& rng);

using SparseInput = Eigen::SparseMatrix<double>;  // column-major, one sample per column

// Same rule over the stored entries only; zeros stay zero either way.
SparseInput apply_input_dropout(const SparseInput& x, double rate, Rng& rng);

// Samples are columns. `pre[j]` and `post[j]` hold z_{j+1} and h_{j+1}.
struct ForwardTrace {
  Eigen::MatrixXd input;  // empty when the sparse overload was used
  SparseInput sparse_input;
  bool sparse = false;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;

  const Eigen::MatrixXd& output() const { return post.back(); }
};

ForwardTrace forward(const MlpParams& params, const Eigen::MatrixXd& x);
// Binary interaction vectors are mostly zeros; the first layer skips them.
ForwardTrace forward(const MlpParams& params, const SparseInput& x);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd input;  // empty unless requested

  static MlpGradients zeros_like(const MlpParams& params);
};

// Gradients of sum(grad_output .* h_L) with respect to every W_j, b_j and,
// when `with_input` is set, the input.
MlpGradients backward(const MlpParams& params, const ForwardTrace& trace, const Eigen::MatrixXd& grad_output,
                      bool with_input = true);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// A named, contiguous parameter array and its gradient.
struct ParamBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> grads;
};

ParamBlock block(std::string name, Eigen::MatrixXd& values, const Eigen::MatrixXd& grads);
ParamBlock block(std::string name, Eigen::VectorXd& values, const Eigen::VectorXd& grads);

// Blocks named W1.., b1.. for every layer of `params`.
std::vector<ParamBlock> mlp_blocks(MlpParams& params, const MlpGradients& grads);

class AdamState {
 public:
  explicit AdamState(AdamHyper hyper = {}) : hyper_(hyper) {}

  const AdamHyper& hyper() const { return hyper_; }
  std::int64_t step_count() const { return step_count_; }
  const std::vector<Eigen::ArrayXd>& first_moment() const { return m_; }
  const std::vector<Eigen::ArrayXd>& second_moment() const { return v_; }

  // One bias-corrected Adam update over all blocks. Moments are sized on the
  // first call; later calls must present the same block shapes. A non-finite
  // gradient aborts before any parameter changes.
  void step(std::span<const ParamBlock> blocks);

 private:
  AdamHyper hyper_;
  std::int64_t step_count_ = 0;
  std::vector<Eigen::ArrayXd> m_;
  std::vector<Eigen::ArrayXd> v_;
};

void adam_step(AdamState& state, MlpParams& params, const MlpGradients& grads);

// Checkpoint container. Text, one block per weight/bias, values in row-major
// order with round-trip exact formatting.
void save_params(const MlpParams& params, std::ostream& out);
MlpParams load_params(std::istream& in);

// Shared with model files: a "name rows cols" header followed by rows of values.
void write_matrix(std::ostream& out, std::string_view name, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in, std::string_view expected_name);

}  // namespace neurec::nn
