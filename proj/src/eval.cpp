#include "neurec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace neurec::eval {

RankedList rank_candidates(const Eigen::VectorXd& scores, std::span<const int> train_positives, int user) {
  if (!scores.allFinite()) throw EvalError("scores for user " + std::to_string(user) + " are not finite");
  RankedList out;
  out.user = user;
  const auto n = static_cast<int>(scores.size());
  out.items.reserve(static_cast<std::size_t>(n));
  std::size_t p = 0;
  for (int i = 0; i < n; ++i) {
    while (p < train_positives.size() && train_positives[p] < i) ++p;
    if (p < train_positives.size() && train_positives[p] == i) continue;
    out.items.push_back(i);
  }
  std::sort(out.items.begin(), out.items.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  out.candidate_count = out.items.size();
  return out;
}

namespace {

bool is_relevant(std::span<const int> relevant, int item) {
  return std::binary_search(relevant.begin(), relevant.end(), item);
}

void require_relevant(std::span<const int> relevant) {
  if (relevant.empty()) throw EvalError("metric needs a nonempty relevant set");
}

std::size_t hits_in_top(const RankedList& ranked, std::span<const int> relevant, int k) {
  const auto depth = std::min(ranked.items.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += is_relevant(relevant, ranked.items[r]) ? 1 : 0;
  return hits;
}

}  // namespace

double precision_at_k(const RankedList& ranked, std::span<const int> relevant, int k) {
  if (k < 1) throw EvalError("cutoff k must be >= 1");
  return static_cast<double>(hits_in_top(ranked, relevant, k)) / static_cast<double>(k);
}

double recall_at_k(const RankedList& ranked, std::span<const int> relevant, int k) {
  if (k < 1) throw EvalError("cutoff k must be >= 1");
  require_relevant(relevant);
  return static_cast<double>(hits_in_top(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

double average_precision(const RankedList& ranked, std::span<const int> relevant) {
  require_relevant(relevant);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked.items.size(); ++r) {
    if (is_relevant(relevant, ranked.items[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

double reciprocal_rank(const RankedList& ranked, std::span<const int> relevant) {
  require_relevant(relevant);
  for (std::size_t r = 0; r < ranked.items.size(); ++r) {
    if (is_relevant(relevant, ranked.items[r])) return 1.0 / static_cast<double>(r + 1);
  }
  return 0.0;
}

double ndcg(const RankedList& ranked, std::span<const int> relevant) {
  require_relevant(relevant);
  double dcg = 0.0;
  for (std::size_t r = 0; r < ranked.items.size(); ++r) {
    if (is_relevant(relevant, ranked.items[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t p = 0; p < relevant.size(); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

double stable_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + carry) / static_cast<double>(values.size());
}

std::vector<double> RankingReport::table_row() const {
  auto at = [&](int k) {
    const auto it = std::find(cutoffs.begin(), cutoffs.end(), k);
    if (it == cutoffs.end()) throw EvalError("report has no cutoff " + std::to_string(k));
    return static_cast<std::size_t>(it - cutoffs.begin());
  };
  const auto c5 = at(5);
  const auto c10 = at(10);
  return {aggregate.precision[c5], aggregate.precision[c10], aggregate.recall[c5], aggregate.recall[c10],
          aggregate.map,           aggregate.mrr,            aggregate.ndcg};
}

RankingReport evaluate_model(const Scorer& score, const data::SplitPair& split, std::vector<int> cutoffs) {
  for (int k : cutoffs) {
    if (k < 1) throw EvalError("cutoff k must be >= 1");
  }
  const auto& train = split.train;
  const auto test = split.test_by_user();

  RankingReport report;
  report.cutoffs = cutoffs;
  for (int u = 0; u < train.num_users(); ++u) {
    const auto& relevant = test[static_cast<std::size_t>(u)];
    if (relevant.empty()) {
      ++report.skipped_user_count;
      continue;
    }
    const Eigen::VectorXd scores = score(u);
    if (scores.size() != train.num_items()) {
      throw EvalError("scorer returned " + std::to_string(scores.size()) + " scores for user " + std::to_string(u) +
                      ", expected " + std::to_string(train.num_items()));
    }
    const auto ranked = rank_candidates(scores, train.row(u), u);
    UserMetrics um;
    um.user = u;
    for (int k : cutoffs) {
      um.metrics.precision.push_back(precision_at_k(ranked, relevant, k));
      um.metrics.recall.push_back(recall_at_k(ranked, relevant, k));
    }
    um.metrics.map = average_precision(ranked, relevant);
    um.metrics.mrr = reciprocal_rank(ranked, relevant);
    um.metrics.ndcg = ndcg(ranked, relevant);
    report.per_user.push_back(std::move(um));
    ++report.evaluated_user_count;
    if (train.row(u).empty()) ++report.cold_start_user_count;
  }

  auto mean_of = [&](auto&& get) {
    std::vector<double> values;
    values.reserve(report.per_user.size());
    for (const auto& um : report.per_user) values.push_back(get(um.metrics));
    return stable_mean(std::move(values));
  };
  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    report.aggregate.precision.push_back(mean_of([c](const Metrics& m) { return m.precision[c]; }));
    report.aggregate.recall.push_back(mean_of([c](const Metrics& m) { return m.recall[c]; }));
  }
  report.aggregate.map = mean_of([](const Metrics& m) { return m.map; });
  report.aggregate.mrr = mean_of([](const Metrics& m) { return m.mrr; });
  report.aggregate.ndcg = mean_of([](const Metrics& m) { return m.ndcg; });
  return report;
}

namespace {

nlohmann::json metrics_json(const Metrics& m, const std::vector<int>& cutoffs) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    j["P@" + std::to_string(cutoffs[c])] = m.precision[c];
    j["R@" + std::to_string(cutoffs[c])] = m.recall[c];
  }
  j["MAP"] = m.map;
  j["MRR"] = m.mrr;
  j["NDCG"] = m.ndcg;
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j, const std::vector<int>& cutoffs) {
  Metrics m;
  for (int k : cutoffs) {
    m.precision.push_back(j.at("P@" + std::to_string(k)).get<double>());
    m.recall.push_back(j.at("R@" + std::to_string(k)).get<double>());
  }
  m.map = j.at("MAP").get<double>();
  m.mrr = j.at("MRR").get<double>();
  m.ndcg = j.at("NDCG").get<double>();
  return m;
}

}  // namespace

nlohmann::json to_json(const RankingReport& report, bool include_per_user) {
  nlohmann::json j;
  j["cutoffs"] = report.cutoffs;
  j["aggregate"] = metrics_json(report.aggregate, report.cutoffs);
  j["evaluated_users"] = report.evaluated_user_count;
  j["skipped_users"] = report.skipped_user_count;
  j["cold_start_users"] = report.cold_start_user_count;
  if (include_per_user) {
    nlohmann::json users = nlohmann::json::array();
    for (const auto& um : report.per_user) {
      auto row = metrics_json(um.metrics, report.cutoffs);
      row["user"] = um.user;
      users.push_back(std::move(row));
    }
    j["per_user"] = std::move(users);
  }
  return j;
}

RankingReport report_from_json(const nlohmann::json& j) {
  RankingReport r;
  r.cutoffs = j.at("cutoffs").get<std::vector<int>>();
  r.aggregate = metrics_from_json(j.at("aggregate"), r.cutoffs);
  r.evaluated_user_count = j.at("evaluated_users").get<int>();
  r.skipped_user_count = j.at("skipped_users").get<int>();
  r.cold_start_user_count = j.value("cold_start_users", 0);
  if (j.contains("per_user")) {
    for (const auto& row : j.at("per_user")) {
      r.per_user.push_back(UserMetrics{row.at("user").get<int>(), metrics_from_json(row, r.cutoffs)});
    }
  }
  return r;
}

}  // namespace neurec::eval
