#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "neurec/data.hpp"

namespace neurec::eval {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RankedList {
  int user = 0;
  std::vector<int> items;  // best first
  std::size_t candidate_count = 0;
};

// All items except `train_positives` (sorted ascending), by descending score
// with ties broken by ascending item index.
RankedList rank_candidates(const Eigen::VectorXd& scores, std::span<const int> train_positives, int user);

// `relevant` must be sorted ascending.
double precision_at_k(const RankedList& ranked, std::span<const int> relevant, int k);
double recall_at_k(const RankedList& ranked, std::span<const int> relevant, int k);
double average_precision(const RankedList& ranked, std::span<const int> relevant);
double reciprocal_rank(const RankedList& ranked, std::span<const int> relevant);
double ndcg(const RankedList& ranked, std::span<const int> relevant);

struct Metrics {
  std::vector<double> precision;  // one per cutoff
  std::vector<double> recall;
  double map = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
};

struct UserMetrics {
  int user = 0;
  Metrics metrics;
};

struct RankingReport {
  std::vector<int> cutoffs;
  std::vector<UserMetrics> per_user;
  Metrics aggregate;
  int evaluated_user_count = 0;
  int skipped_user_count = 0;
  // Evaluated users whose training row is empty; scored like everyone else.
  int cold_start_user_count = 0;

  // P@5, P@10, R@5, R@10, MAP, MRR, NDCG for the default cutoffs.
  std::vector<double> table_row() const;
};

inline const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols{"P@5", "P@10", "R@5", "R@10", "MAP", "MRR", "NDCG"};
  return cols;
}

using Scorer = std::function<Eigen::VectorXd(int)>;

// Ranks every user with at least one test positive; the rest are skipped.
RankingReport evaluate_model(const Scorer& score, const data::SplitPair& split, std::vector<int> cutoffs = {5, 10});

// Compensated sum of the values in ascending order, so the result does not
// depend on the order they were produced in.
double stable_mean(std::vector<double> values);

nlohmann::json to_json(const RankingReport& report, bool include_per_user);
RankingReport report_from_json(const nlohmann::json& j);

}  // namespace neurec::eval
