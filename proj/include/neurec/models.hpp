#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "neurec/data.hpp"
#include "neurec/nn.hpp"
#include "neurec/rng.hpp"

namespace neurec::models {

using data::InteractionMatrix;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a loss turns non-finite mid-training.
class TrainingError : public ModelError {
 public:
  TrainingError(int epoch, int batch, const std::string& what);
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

enum class Variant { kUserBased, kItemBased };
enum class LossKind { kPointwise, kPairwise };

Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v);
LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind l);

struct TrainConfig {
  Variant variant = Variant::kUserBased;
  int hidden_layers = 5;
  int width = 150;
  int k = 40;
  nn::Activation activation = nn::Activation::kSigmoid;
  double dropout_rate = 0.0;
  double learning_rate = 1e-4;
  double l2_rate = 0.1;
  int batch_size = 64;
  int epochs = 200;  // 0 means "return the initialized model"
  std::uint64_t seed = 1;
  LossKind loss = LossKind::kPointwise;
  int negative_pool_t = 5;

  void validate() const;

  // [input_dim, width x hidden_layers, k]
  std::vector<int> layer_dims(int input_dim) const;
};

// Scores are h_L(X_u*) . Q_i (user-based, factors = Q, N x k) or
// P_u . h_L(X_*i) (item-based, factors = P, M x k).
struct NeuRecModel {
  Variant variant = Variant::kUserBased;
  nn::MlpParams net;
  Eigen::MatrixXd factors;

  int k() const { return static_cast<int>(factors.cols()); }
  void validate() const;

  friend bool operator==(const NeuRecModel& a, const NeuRecModel& b) {
    return a.variant == b.variant && a.net == b.net && a.factors == b.factors;
  }
};

struct MfModel {
  Eigen::MatrixXd user_factors;  // M x k
  Eigen::MatrixXd item_factors;  // N x k

  friend bool operator==(const MfModel& a, const MfModel& b) {
    return a.user_factors == b.user_factors && a.item_factors == b.item_factors;
  }
};

struct SlimModel {
  Eigen::MatrixXd coefficients;  // N x N, non-negative, zero diagonal
  double l2_rate = 0.0;
  double l1_rate = 0.0;
  std::vector<double> objective_history;  // one value per full sweep, starting with S = 0
};

struct PopularityModel {
  Eigen::VectorXd scores;  // training interaction count per item
};

using TrainedModel = std::variant<NeuRecModel, MfModel, SlimModel, PopularityModel>;

// Per-epoch training loss, summed over batches.
struct TrainingLog {
  std::vector<double> epoch_loss;
};

// ---- NeuRec ----

NeuRecModel init_neurec(const TrainConfig& config, const InteractionMatrix& train);

Eigen::VectorXd score_all_user_based(const NeuRecModel& model, const InteractionMatrix& train, int u);
Eigen::VectorXd score_all_item_based(const NeuRecModel& model, const InteractionMatrix& train, int u);

// h_L(X_*i) for every item, as a k x N matrix.
Eigen::MatrixXd item_representations(const NeuRecModel& model, const InteractionMatrix& train);

// Squared error over every cell of the batch rows (user-based) or columns
// (item-based), plus l2_rate * (sum ||W_j||_F^2 + ||factors||_F^2).
double pointwise_loss(const NeuRecModel& model, const InteractionMatrix& train, std::span<const int> batch,
                      double l2_rate);

struct NeuRecGradients {
  double loss = 0.0;
  nn::MlpGradients net;
  Eigen::MatrixXd factors;
};

// Loss (as pointwise_loss) and its gradient for one batch, without dropout.
NeuRecGradients pointwise_gradients(const NeuRecModel& model, const InteractionMatrix& train,
                                    std::span<const int> batch, double l2_rate);

NeuRecModel train_pointwise(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log = nullptr);

// Draws min(t, #unobserved) distinct unobserved items uniformly, scores them
// with `model` and returns the best-scored one (ties to the lower index).
int sample_negative(const NeuRecModel& model, const InteractionMatrix& train, int u, int t, Rng& rng);

// -ln sigmoid(score(u, i_pos) - score(u, i_neg)) + l2_rate * (sum ||W_j||^2 + ||factors||^2).
double pairwise_loss(const NeuRecModel& model, const InteractionMatrix& train, int u, int i_pos, int i_neg,
                     double l2_rate);

// -ln sigmoid(margin), stable for large |margin|.
double log_loss_of_margin(double margin);

struct Triple {
  int user = 0;
  int positive = 0;
  int negative = 0;
};

// Summed pairwise loss over the triples plus one regularizer term, and its
// gradient. Triples are not checked against the observed set.
NeuRecGradients pairwise_gradients(const NeuRecModel& model, const InteractionMatrix& train,
                                   std::span<const Triple> triples, double l2_rate);

NeuRecModel train_pairwise(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log = nullptr);

// Dispatches on config.loss.
NeuRecModel train_neurec(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log = nullptr);

// ---- baselines ----

PopularityModel train_mostpop(const InteractionMatrix& train);

MfModel train_bpr_mf(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log = nullptr);

struct SlimOptions {
  double l2_rate = 0.1;
  double l1_rate = 0.1;
  int iterations = 50;
  double tolerance = 1e-6;  // stop when no coordinate moves more than this in a sweep
};

SlimModel train_slim(const InteractionMatrix& train, const SlimOptions& options);

// ||X - XS||_F^2 + l2 ||S||_F^2 + l1 ||S||_1, computed directly.
double slim_objective(const InteractionMatrix& train, const Eigen::MatrixXd& coefficients, double l2_rate,
                      double l1_rate);

// ---- scoring and bookkeeping ----

// Returns a per-user scorer holding its own copy of the model; `train` must
// outlive it. Item-based NeuRec item representations are computed once here.
std::function<Eigen::VectorXd(int)> make_scorer(const TrainedModel& model, const InteractionMatrix& train);

std::size_t count_parameters(const NeuRecModel& model);
std::size_t count_parameters(const MfModel& model);
std::size_t count_parameters(const SlimModel& model);
std::size_t count_parameters(const PopularityModel& model);
std::size_t count_parameters(const TrainedModel& model);

// Text containers; the NeuRec container embeds the nn checkpoint.
void save_model(const TrainedModel& model, std::ostream& out);
TrainedModel load_model(std::istream& in);
void save_model_file(const TrainedModel& model, const std::string& path);
TrainedModel load_model_file(const std::string& path);

}  // namespace neurec::models
