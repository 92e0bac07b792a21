#include <algorithm>
#include <cmath>
#include <numeric>

#include "neurec/models.hpp"
#include "negatives.hpp"

namespace neurec::models {

PopularityModel train_mostpop(const InteractionMatrix& train) {
  PopularityModel model;
  model.scores = Eigen::VectorXd::Zero(train.num_items());
  for (int i = 0; i < train.num_items(); ++i) model.scores[i] = static_cast<double>(train.column(i).size());
  return model;
}

MfModel train_bpr_mf(const TrainConfig& config, const InteractionMatrix& train, TrainingLog* log) {
  config.validate();
  MfModel model;
  model.user_factors.resize(train.num_users(), config.k);
  model.item_factors.resize(train.num_items(), config.k);
  Rng init_rng = make_rng(config.seed, RngStream::kFactors);
  nn::init_uniform_fan(model.user_factors, init_rng);
  nn::init_uniform_fan(model.item_factors, init_rng);
  if (config.epochs == 0) return model;
  if (train.empty()) throw ModelError("BPR training needs at least one observed pair");

  const double l2 = config.l2_rate;
  nn::AdamState adam({.learning_rate = config.learning_rate});
  Rng shuffle_rng = make_rng(config.seed, RngStream::kShuffle);
  Rng negative_rng = make_rng(config.seed, RngStream::kNegatives);

  const auto& pairs = train.entries();
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Eigen::MatrixXd user_grad(model.user_factors.rows(), model.user_factors.cols());
  Eigen::MatrixXd item_grad(model.item_factors.rows(), model.item_factors.cols());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    int batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      user_grad.setZero();
      item_grad.setZero();
      double loss = 0.0;
      for (std::size_t p = start; p < end; ++p) {
        const auto [u, i_pos] = pairs[order[p]];
        const int i_neg = detail::draw_unobserved(train, u, 1, negative_rng).front();
        const auto pu = model.user_factors.row(u);
        const auto qi = model.item_factors.row(i_pos);
        const auto qj = model.item_factors.row(i_neg);
        const double margin = pu.dot(qi - qj);
        // L2 on the rows touched by this triple.
        loss += log_loss_of_margin(margin) + l2 * (pu.squaredNorm() + qi.squaredNorm() + qj.squaredNorm());
        const double g = -nn::activate(nn::Activation::kSigmoid, -margin);
        user_grad.row(u) += g * (qi - qj) + 2.0 * l2 * pu;
        item_grad.row(i_pos) += g * pu + 2.0 * l2 * qi;
        item_grad.row(i_neg) += -g * pu + 2.0 * l2 * qj;
      }
      if (!std::isfinite(loss)) throw TrainingError(epoch, batch_no, "BPR loss is not finite");
      epoch_loss += loss;
      const std::vector<nn::ParamBlock> blocks{nn::block("U", model.user_factors, user_grad),
                                               nn::block("V", model.item_factors, item_grad)};
      adam.step(blocks);
    }
    if (log) log->epoch_loss.push_back(epoch_loss);
  }
  return model;
}

namespace {

// Gram matrix X^T X from the sparse rows.
Eigen::MatrixXd gram(const InteractionMatrix& x) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(x.num_items(), x.num_items());
  for (int u = 0; u < x.num_users(); ++u) {
    const auto& row = x.row(u);
    for (int a : row) {
      for (int b : row) g(a, b) += 1.0;
    }
  }
  return g;
}

// Objective from the Gram form: sum_j (G_jj - 2 s_j.G_j + s_j.(G s_j)) + l2 ||S||^2 + l1 sum S.
double gram_objective(const Eigen::MatrixXd& g, const Eigen::MatrixXd& s, const Eigen::MatrixXd& gs, double l2,
                      double l1) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    total += g(j, j) - 2.0 * s.col(j).dot(g.col(j)) + s.col(j).dot(gs.col(j));
  }
  return total + l2 * s.squaredNorm() + l1 * s.sum();
}

}  // namespace

double slim_objective(const InteractionMatrix& train, const Eigen::MatrixXd& coefficients, double l2_rate,
                      double l1_rate) {
  const Eigen::MatrixXd x = train.to_dense();
  if (coefficients.rows() != x.cols() || coefficients.cols() != x.cols()) {
    throw ModelError("SLIM coefficient matrix must be N x N");
  }
  return (x - x * coefficients).squaredNorm() + l2_rate * coefficients.squaredNorm() +
         l1_rate * coefficients.cwiseAbs().sum();
}

SlimModel train_slim(const InteractionMatrix& train, const SlimOptions& options) {
  if (!(options.l2_rate >= 0.0) || !(options.l1_rate >= 0.0)) throw ModelError("SLIM rates must be >= 0");
  if (options.iterations < 0) throw ModelError("SLIM iterations must be >= 0");
  const Eigen::Index n = train.num_items();
  const Eigen::MatrixXd g = gram(train);

  SlimModel model;
  model.l2_rate = options.l2_rate;
  model.l1_rate = options.l1_rate;
  model.coefficients = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd& s = model.coefficients;
  Eigen::MatrixXd gs = Eigen::MatrixXd::Zero(n, n);  // G * S, kept in sync
  model.objective_history.push_back(gram_objective(g, s, gs, options.l2_rate, options.l1_rate));

  const double half_l1 = 0.5 * options.l1_rate;
  for (int sweep = 0; sweep < options.iterations; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r == j) continue;
        const double denom = g(r, r) + options.l2_rate;
        const double old = s(r, j);
        double updated = 0.0;
        if (denom > 0.0) {
          // Exact minimizer over s_rj >= 0 with the other coordinates fixed.
          const double rho = g(r, j) - (gs(r, j) - g(r, r) * old);
          updated = std::max(0.0, (rho - half_l1) / denom);
        }
        if (updated != old) {
          gs.col(j) += (updated - old) * g.col(r);
          s(r, j) = updated;
          max_change = std::max(max_change, std::abs(updated - old));
        }
      }
    }
    model.objective_history.push_back(gram_objective(g, s, gs, options.l2_rate, options.l1_rate));
    if (max_change < options.tolerance) break;
  }
  return model;
}

}  // namespace neurec::models
