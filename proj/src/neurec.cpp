// NeuRec: an MLP over a user's row (or an item's column) of X, scored by
// inner product against the opposite side's latent factors.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neurec/models.hpp"
#include "negatives.hpp"

namespace neurec::models {

TrainingError::TrainingError(int epoch, int batch, const std::string& what)
    : ModelError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " + what),
      epoch_(epoch),
      batch_(batch) {}

Variant parse_variant(std::string_view name) {
  if (name == "user_based" || name == "user") return Variant::kUserBased;
  if (name == "item_based" || name == "item") return Variant::kItemBased;
  throw ModelError("unknown NeuRec variant '" + std::string(name) + "'");
}

std::string_view to_string(Variant v) { return v == Variant::kUserBased ? "user_based" : "item_based"; }

LossKind parse_loss(std::string_view name) {
  if (name == "pointwise") return LossKind::kPointwise;
  if (name == "pairwise") return LossKind::kPairwise;
  throw ModelError("unknown loss '" + std::string(name) + "' (expected pointwise|pairwise)");
}

std::string_view to_string(LossKind l) { return l == LossKind::kPointwise ? "pointwise" : "pairwise"; }

void TrainConfig::validate() const {
  if (hidden_layers < 0) throw ModelError("hidden_layers must be >= 0");
  if (width < 1 || k < 1) throw ModelError("width and k must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ModelError("dropout must lie in [0, 1)");
  if (!(learning_rate >= 0.0) || !(l2_rate >= 0.0)) throw ModelError("rates must be >= 0");
  if (batch_size < 1) throw ModelError("batch_size must be >= 1");
  if (epochs < 0) throw ModelError("epochs must be >= 0");
  if (negative_pool_t < 1) throw ModelError("negative pool size t must be >= 1");
}

std::vector<int> TrainConfig::layer_dims(int input_dim) const {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), static_cast<std::size_t>(hidden_layers), width);
  dims.push_back(k);
  return dims;
}

void NeuRecModel::validate() const {
  net.validate();
  if (net.output_dim() != factors.cols()) throw ModelError("network output dim differs from factor dim k");
  if (!factors.allFinite()) throw ModelError("latent factors hold non-finite values");
}

namespace {

int example_count(Variant v, const InteractionMatrix& x) {
  return v == Variant::kUserBased ? x.num_users() : x.num_items();
}

int example_dim(Variant v, const InteractionMatrix& x) {
  return v == Variant::kUserBased ? x.num_items() : x.num_users();
}

// Network inputs for a set of examples: user rows or item columns, one per column.
nn::SparseInput example_inputs(Variant v, const InteractionMatrix& x, const std::vector<int>& idx) {
  return v == Variant::kUserBased ? x.rows_as_sparse_columns(idx) : x.columns_as_sparse_columns(idx);
}

void check_shapes(const NeuRecModel& model, const InteractionMatrix& train) {
  const int d = example_dim(model.variant, train);
  if (model.net.input_dim() != d || model.factors.rows() != d) {
    throw ModelError("model shape does not match the interaction matrix");
  }
}

double regularizer(const NeuRecModel& model) {
  double total = model.factors.squaredNorm();
  for (const auto& w : model.net.weights) total += w.squaredNorm();
  return total;
}

// Representations for every example (users or items), k x count, in chunks.
Eigen::MatrixXd all_representations(const NeuRecModel& model, const InteractionMatrix& train) {
  const int count = example_count(model.variant, train);
  Eigen::MatrixXd out(model.k(), count);
  constexpr int kChunk = 256;
  for (int start = 0; start < count; start += kChunk) {
    const int end = std::min(count, start + kChunk);
    std::vector<int> idx(static_cast<std::size_t>(end - start));
    std::iota(idx.begin(), idx.end(), start);
    out.middleCols(start, end - start) = nn::forward(model.net, example_inputs(model.variant, train, idx)).output();
  }
  return out;
}

// Adds 2 * l2 * W to every weight gradient (biases are not regularized).
void add_weight_decay(const nn::MlpParams& net, nn::MlpGradients& grads, double l2_rate) {
  if (l2_rate == 0.0) return;
  for (std::size_t j = 0; j < net.num_layers(); ++j) grads.weights[j] += 2.0 * l2_rate * net.weights[j];
}

void apply_update(nn::AdamState& adam, NeuRecModel& model, const nn::MlpGradients& grads,
                  const Eigen::MatrixXd& factor_grad) {
  auto blocks = nn::mlp_blocks(model.net, grads);
  blocks.push_back(nn::block("factors", model.factors, factor_grad));
  adam.step(blocks);
}

// Loss and gradients for one pointwise batch; `net_input` is `target` after dropout.
NeuRecGradients pointwise_step(const NeuRecModel& model, const nn::SparseInput& target,
                               const nn::SparseInput& net_input, double l2) {
  const auto trace = nn::forward(model.net, net_input);
  const Eigen::MatrixXd& hidden = trace.output();
  Eigen::MatrixXd residual = model.factors * hidden;
  residual -= target;

  NeuRecGradients out;
  out.loss = residual.squaredNorm() + l2 * regularizer(model);
  const Eigen::MatrixXd grad_scores = 2.0 * residual;
  out.factors = grad_scores * hidden.transpose() + 2.0 * l2 * model.factors;
  out.net = nn::backward(model.net, trace, model.factors.transpose() * grad_scores, /*with_input=*/false);
  add_weight_decay(model.net, out.net, l2);
  return out;
}

// Item-based pairwise input: positive item columns, then negative ones.
nn::SparseInput pair_item_inputs(const InteractionMatrix& train, const std::vector<int>& positives,
                                 const std::vector<int>& negatives) {
  std::vector<int> items = positives;
  items.insert(items.end(), negatives.begin(), negatives.end());
  return train.columns_as_sparse_columns(items);
}

NeuRecGradients pairwise_step(const NeuRecModel& model, const std::vector<int>& users,
                              const std::vector<int>& positives, const std::vector<int>& negatives,
                              const nn::SparseInput& net_input, double l2) {
  const auto batch = static_cast<Eigen::Index>(users.size());
  NeuRecGradients out;
  out.factors = 2.0 * l2 * model.factors;
  out.loss = l2 * regularizer(model);
  const auto trace = nn::forward(model.net, net_input);
  const Eigen::MatrixXd& h = trace.output();

  if (model.variant == Variant::kUserBased) {
    Eigen::MatrixXd grad_hidden(model.k(), batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      const double margin =
          model.factors.row(positives[bi]).dot(h.col(b)) - model.factors.row(negatives[bi]).dot(h.col(b));
      out.loss += log_loss_of_margin(margin);
      // d/dmargin of -ln sigmoid(margin) = -sigmoid(-margin)
      const double g = -nn::activate(nn::Activation::kSigmoid, -margin);
      out.factors.row(positives[bi]) += g * h.col(b).transpose();
      out.factors.row(negatives[bi]) -= g * h.col(b).transpose();
      grad_hidden.col(b) = g * (model.factors.row(positives[bi]) - model.factors.row(negatives[bi])).transpose();
    }
    out.net = nn::backward(model.net, trace, grad_hidden, /*with_input=*/false);
  } else {
    Eigen::MatrixXd grad_hidden(model.k(), 2 * batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int u = users[static_cast<std::size_t>(b)];
      const Eigen::VectorXd diff = h.col(b) - h.col(batch + b);
      const double margin = model.factors.row(u).dot(diff);
      out.loss += log_loss_of_margin(margin);
      const double g = -nn::activate(nn::Activation::kSigmoid, -margin);
      out.factors.row(u) += g * diff.transpose();
      grad_hidden.col(b) = g * model.factors.row(u).transpose();
      grad_hidden.col(batch + b) = -g * model.factors.row(u).transpose();
    }
    out.net = nn::backward(model.net, trace, grad_hidden, /*with_input=*/false);
  }
  add_weight_decay(model.net, out.net, l2);
  return out;
}

}  // namespace

NeuRecGradients pointwise_gradients(const NeuRecModel& model, const InteractionMatrix& train,
                                    std::span<const int> batch, double l2_rate) {
  check_shapes(model, train);
  const int count = example_count(model.variant, train);
  for (int e : batch) {
    if (e < 0 || e >= count) throw ModelError("batch index " + std::to_string(e) + " out of range");
  }
  const nn::SparseInput target = example_inputs(model.variant, train, std::vector<int>(batch.begin(), batch.end()));
  return pointwise_step(model, target, target, l2_rate);
}

NeuRecGradients pairwise_gradients(const NeuRecModel& model, const InteractionMatrix& train,
                                   std::span<const Triple> triples, double l2_rate) {
  check_shapes(model, train);
  std::vector<int> users, positives, negatives;
  for (const auto& t : triples) {
    if (t.user < 0 || t.user >= train.num_users() || t.positive < 0 || t.positive >= train.num_items() ||
        t.negative < 0 || t.negative >= train.num_items()) {
      throw ModelError("triple index out of range");
    }
    users.push_back(t.user);
    positives.push_back(t.positive);
    negatives.push_back(t.negative);
  }
  const nn::SparseInput input = model.variant == Variant::kUserBased ? train.rows_as_sparse_columns(users)
                                                                     : pair_item_inputs(train, positives, negatives);
  return pairwise_step(model, users, positives, negatives, input, l2_rate);
}

NeuRecModel init_neurec(const TrainConfig& config, const InteractionMatrix& train) {
  config.validate();
  const int d = config.variant == Variant::kUserBased ? train.num_items() : train.num_users();
  if (d < 1) throw ModelError("interaction matrix has no columns to learn from");
  NeuRecModel model;
  model.variant = config.variant;
  model.net = nn::init_params(config.layer_dims(d), config.activation, config.seed);
  model.factors.resize(d, config.k);
  Rng rng = make_rng(config.seed, RngStream::kFactors);
  nn::init_uniform_fan(model.factors, rng);
  return model;
}

Eigen::VectorXd score_all_user_based(const NeuRecModel& model, const InteractionMatrix& train, int u) {
  if (model.variant != Variant::kUserBased) throw ModelError("score_all_user_based needs a user-based model");
  check_shapes(model, train);
  if (u < 0 || u >= train.num_users()) throw ModelError("user index " + std::to_string(u) + " out of range");
  const auto trace = nn::forward(model.net, train.rows_as_sparse_columns({u}));
  return model.factors * trace.output();
}

Eigen::MatrixXd item_representations(const NeuRecModel& model, const InteractionMatrix& train) {
  if (model.variant != Variant::kItemBased) throw ModelError("item representations need an item-based model");
  check_shapes(model, train);
  return all_representations(model, train);
}

Eigen::VectorXd score_all_item_based(const NeuRecModel& model, const InteractionMatrix& train, int u) {
  if (model.variant != Variant::kItemBased) throw ModelError("score_all_item_based needs an item-based model");
  check_shapes(model, train);
  if (u < 0 || u >= train.num_users()) throw ModelError("user index " + std::to_string(u) + " out of range");
  return (model.factors.row(u) * item_representations(model, train)).transpose();
}

double pointwise_loss(const NeuRecModel& model, const InteractionMatrix& train, std::span<const int> batch,
                      double l2_rate) {
  check_shapes(model, train);
  if (batch.empty()) throw ModelError("pointwise loss over an empty batch");
  const int count = example_count(model.variant, train);
  for (int e : batch) {
    if (e < 0 || e >= count) throw ModelError("batch index " + std::to_string(e) + " out of range");
  }
  const std::vector<int> idx(batch.begin(), batch.end());
  const nn::SparseInput target = example_inputs(model.variant, train, idx);
  Eigen::MatrixXd residual = model.factors * nn::forward(model.net, target).output();
  residual -= target;
  return residual.squaredNorm() + l2_rate * regularizer(model);
}

NeuRecModel train_pointwise(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log) {
  if (config.loss != LossKind::kPointwise) throw ModelError("train_pointwise called with a pairwise config");
  NeuRecModel model = init_neurec(config, train);
  if (config.epochs == 0) return model;

  const int count = example_count(config.variant, train);
  const double l2 = config.l2_rate;
  nn::AdamState adam({.learning_rate = config.learning_rate});
  Rng shuffle_rng = make_rng(config.seed, RngStream::kShuffle);
  Rng dropout_rng = make_rng(config.seed, RngStream::kDropout);

  std::vector<int> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<int>(order));
    double epoch_loss = 0.0;
    int batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));

      const nn::SparseInput target = example_inputs(config.variant, train, idx);
      auto step = pointwise_step(model, target, nn::apply_input_dropout(target, config.dropout_rate, dropout_rng), l2);
      if (!std::isfinite(step.loss)) throw TrainingError(epoch, batch_no, "pointwise loss is not finite");
      epoch_loss += step.loss;
      apply_update(adam, model, step.net, step.factors);
    }
    if (log) log->epoch_loss.push_back(epoch_loss);
  }
  return model;
}

int sample_negative(const NeuRecModel& model, const InteractionMatrix& train, int u, int t, Rng& rng) {
  check_shapes(model, train);
  if (u < 0 || u >= train.num_users()) throw ModelError("user index " + std::to_string(u) + " out of range");
  if (t < 1) throw ModelError("negative pool size t must be >= 1");
  const auto candidates = detail::draw_unobserved(train, u, t, rng);
  Eigen::VectorXd scores(static_cast<Eigen::Index>(candidates.size()));
  if (model.variant == Variant::kUserBased) {
    const Eigen::VectorXd h = nn::forward(model.net, train.rows_as_sparse_columns({u})).output();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      scores[static_cast<Eigen::Index>(c)] = model.factors.row(candidates[c]).dot(h);
    }
  } else {
    const Eigen::MatrixXd h = nn::forward(model.net, train.columns_as_sparse_columns(candidates)).output();
    scores = (model.factors.row(u) * h).transpose();
  }
  return detail::best_scored(candidates, [&](std::size_t c) { return scores[static_cast<Eigen::Index>(c)]; });
}

double log_loss_of_margin(double margin) {
  // -ln sigmoid(m) = softplus(-m) = max(-m, 0) + log1p(exp(-|m|))
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

double pairwise_loss(const NeuRecModel& model, const InteractionMatrix& train, int u, int i_pos, int i_neg,
                     double l2_rate) {
  check_shapes(model, train);
  if (u < 0 || u >= train.num_users()) throw ModelError("user index out of range");
  if (i_pos < 0 || i_pos >= train.num_items() || i_neg < 0 || i_neg >= train.num_items()) {
    throw ModelError("item index out of range");
  }
  if (!train.contains(u, i_pos)) throw ModelError("positive item is not observed for this user");
  if (train.contains(u, i_neg)) throw ModelError("negative item is observed for this user");
  double pos = 0.0;
  double neg = 0.0;
  if (model.variant == Variant::kUserBased) {
    const Eigen::VectorXd h = nn::forward(model.net, train.rows_as_sparse_columns({u})).output();
    pos = model.factors.row(i_pos).dot(h);
    neg = model.factors.row(i_neg).dot(h);
  } else {
    const Eigen::MatrixXd h = nn::forward(model.net, train.columns_as_sparse_columns({i_pos, i_neg})).output();
    pos = model.factors.row(u).dot(h.col(0));
    neg = model.factors.row(u).dot(h.col(1));
  }
  return log_loss_of_margin(pos - neg) + l2_rate * regularizer(model);
}

NeuRecModel train_pairwise(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log) {
  if (config.loss != LossKind::kPairwise) throw ModelError("train_pairwise called with a pointwise config");
  NeuRecModel model = init_neurec(config, train);
  if (config.epochs == 0) return model;
  if (train.empty()) throw ModelError("pairwise training needs at least one observed pair");

  const double l2 = config.l2_rate;
  const bool user_based = config.variant == Variant::kUserBased;
  nn::AdamState adam({.learning_rate = config.learning_rate});
  Rng shuffle_rng = make_rng(config.seed, RngStream::kShuffle);
  Rng dropout_rng = make_rng(config.seed, RngStream::kDropout);
  Rng negative_rng = make_rng(config.seed, RngStream::kNegatives);

  const auto& pairs = train.entries();
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    // Negatives for this epoch are ranked by the model as it stands at the
    // start of the epoch.
    const Eigen::MatrixXd reps = all_representations(model, train);
    const Eigen::MatrixXd ranking_factors = model.factors;

    double epoch_loss = 0.0;
    int batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));

      std::vector<int> users;
      std::vector<int> positives;
      std::vector<int> negatives;
      for (std::size_t p = start; p < end; ++p) {
        const auto [u, i_pos] = pairs[order[p]];
        const auto candidates = detail::draw_unobserved(train, u, config.negative_pool_t, negative_rng);
        const int i_neg = detail::best_scored(candidates, [&](std::size_t c) {
          return user_based ? ranking_factors.row(candidates[c]).dot(reps.col(u))
                            : ranking_factors.row(u).dot(reps.col(candidates[c]));
        });
        users.push_back(u);
        positives.push_back(i_pos);
        negatives.push_back(i_neg);
      }

      const nn::SparseInput input =
          user_based ? train.rows_as_sparse_columns(users) : pair_item_inputs(train, positives, negatives);
      auto step = pairwise_step(model, users, positives, negatives,
                                nn::apply_input_dropout(input, config.dropout_rate, dropout_rng), l2);
      if (!std::isfinite(step.loss)) throw TrainingError(epoch, batch_no, "pairwise loss is not finite");
      epoch_loss += step.loss;
      apply_update(adam, model, step.net, step.factors);
    }
    if (log) log->epoch_loss.push_back(epoch_loss);
  }
  return model;
}

NeuRecModel train_neurec(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log) {
  return config.loss == LossKind::kPointwise ? train_pointwise(config, train, log)
                                             : train_pairwise(config, train, log);
}

}  // namespace neurec::models
