// Acceptance checks. One line per criterion:
//   PASS|FAIL|SKIP <n> <name>: <detail>
// Groups: "property" (always runnable) and "dataset" (needs the rating files
// named by NEUREC_FILMTRUST and NEUREC_ML1M). Exit status is 1 if anything
// failed, 77 if something was skipped, 0 otherwise.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "neurec/eval.hpp"
#include "neurec/harness.hpp"
#include "neurec/models.hpp"
#include "neurec/nn.hpp"
#include "oracles.hpp"

using namespace neurec;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Line {
  Verdict verdict;
  std::string detail;
};

int failures = 0;
int skips = 0;

void report(int id, const std::string& name, const Line& line) {
  const char* tag = line.verdict == Verdict::kPass ? "PASS" : line.verdict == Verdict::kFail ? "FAIL" : "SKIP";
  if (line.verdict == Verdict::kFail) ++failures;
  if (line.verdict == Verdict::kSkip) ++skips;
  std::cout << tag << ' ' << id << ' ' << name << ": " << line.detail << std::endl;
}

void criterion(int id, const std::string& name, const std::function<Line()>& body) {
  try {
    report(id, name, body());
  } catch (const std::exception& e) {
    report(id, name, {Verdict::kFail, std::string("threw: ") + e.what()});
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::uint64_t env_int(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::strtoull(v, nullptr, 10) : fallback;
}

// ---- 6: gradients ----

Line gradient_suite() {
  std::mt19937_64 gen(606);
  const nn::Activation acts[] = {nn::Activation::kSigmoid, nn::Activation::kTanh, nn::Activation::kRelu,
                                 nn::Activation::kIdentity};
  const double h = 1e-6;
  int nets = 0;
  std::size_t coords = 0;
  double worst = 0.0;
  while (nets < 120) {
    const auto act = acts[nets % 4];
    std::vector<int> dims{2 + static_cast<int>(gen() % 5)};
    const int depth = 1 + static_cast<int>(gen() % 3);
    for (int d = 0; d < depth; ++d) dims.push_back(1 + static_cast<int>(gen() % 5));
    auto p = nn::init_params(dims, act, gen());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& b : p.biases) {
      for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = 0.3 * u(gen);
    }
    Eigen::VectorXd x(dims.front());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(gen);
    Eigen::VectorXd g(dims.back());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = u(gen);
    const auto trace = nn::forward(p, x);
    if (act == nn::Activation::kRelu) {
      // Central differences are meaningless across a kink.
      bool near_kink = false;
      for (const auto& z : trace.pre) near_kink = near_kink || (z.cwiseAbs().minCoeff() < 1e-3);
      if (near_kink) continue;
    }
    const auto grads = nn::backward(p, trace, g);
    const auto xv = oracle::to_vec(x), gv = oracle::to_vec(g);
    auto check = [&](double analytic, double fd) {
      // Both below 1e-9 (dead relu paths): there is no relative error to speak of.
      const double err = std::max({std::abs(analytic), std::abs(fd)}) < 1e-9 ? 0.0 : oracle::relative_error(analytic, fd);
      worst = std::max(worst, err);
      ++coords;
    };
    for (std::size_t j = 0; j < p.num_layers(); ++j) {
      for (Eigen::Index i = 0; i < p.weights[j].size(); ++i) {
        auto a = p, b = p;
        a.weights[j].data()[i] += h;
        b.weights[j].data()[i] -= h;
        check(grads.weights[j].data()[i], (oracle::probe(a, xv, gv) - oracle::probe(b, xv, gv)) / (2 * h));
      }
      for (Eigen::Index i = 0; i < p.biases[j].size(); ++i) {
        auto a = p, b = p;
        a.biases[j][i] += h;
        b.biases[j][i] -= h;
        check(grads.biases[j][i], (oracle::probe(a, xv, gv) - oracle::probe(b, xv, gv)) / (2 * h));
      }
    }
    for (std::size_t i = 0; i < xv.size(); ++i) {
      auto a = xv, b = xv;
      a[i] += h;
      b[i] -= h;
      check(grads.input(static_cast<Eigen::Index>(i), 0), (oracle::probe(p, a, gv) - oracle::probe(p, b, gv)) / (2 * h));
    }
    ++nets;
  }
  const bool ok = worst < 1e-4;
  return {ok ? Verdict::kPass : Verdict::kFail, std::to_string(nets) + " nets, " + std::to_string(coords) +
                                                    " coordinates, worst relative error " + fmt(worst)};
}

// ---- 7: metrics ----

Line metric_suite() {
  std::mt19937_64 gen(707);
  int instances = 0;
  double worst = 0.0;
  int order_mismatch = 0;
  for (int t = 0; t < 2000; ++t) {
    const int n = 1 + static_cast<int>(gen() % 12);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (auto& s : scores) s = static_cast<double>(gen() % 5);  // ties on purpose
    std::vector<int> train, rel;
    for (int i = 0; i < n; ++i) {
      const auto r = gen() % 4;
      if (r == 0) train.push_back(i);
      if (r == 1) rel.push_back(i);
    }
    if (rel.empty()) continue;
    const Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(scores.data(), n);
    const auto ranked = eval::rank_candidates(sv, train, 0);
    const auto want_order = oracle::selection_rank(scores, train);
    if (ranked.items != want_order) ++order_mismatch;
    for (int k = 1; k <= 12; ++k) {
      worst = std::max(worst, std::abs(eval::precision_at_k(ranked, rel, k) - oracle::precision(want_order, rel, k)));
      worst = std::max(worst, std::abs(eval::recall_at_k(ranked, rel, k) - oracle::recall(want_order, rel, k)));
    }
    worst = std::max(worst, std::abs(eval::average_precision(ranked, rel) - oracle::ap(want_order, rel)));
    worst = std::max(worst, std::abs(eval::reciprocal_rank(ranked, rel) - oracle::rr(want_order, rel)));
    worst = std::max(worst, std::abs(eval::ndcg(ranked, rel) - oracle::ndcg(want_order, rel)));
    ++instances;
  }
  const bool ok = instances >= 1000 && worst < 1e-12 && order_mismatch == 0;
  return {ok ? Verdict::kPass : Verdict::kFail, std::to_string(instances) + " instances (N <= 12), max deviation " +
                                                    fmt(worst) + ", ranking mismatches " + std::to_string(order_mismatch)};
}

// ---- 8: degeneration ----

Line degeneration_suite() {
  std::mt19937_64 gen(808);
  int fixtures = 0;
  long mismatches = 0;
  long compared = 0;
  for (int t = 0; t < 25; ++t) {
    const int m = 2 + static_cast<int>(gen() % 10);
    const int n = 2 + static_cast<int>(gen() % 30);
    const int depth = 1 + static_cast<int>(gen() % 4);
    const auto x = fixture::random_matrix(m, n, 0.3, gen());
    models::NeuRecModel model;
    model.variant = models::Variant::kUserBased;
    model.net = nn::init_params(std::vector<int>(static_cast<std::size_t>(depth + 1), n), nn::Activation::kIdentity, 1);
    for (auto& w : model.net.weights) w.setIdentity();
    model.factors.resize(n, n);
    // Dyadic values: every partial sum is exact, whatever the summation order.
    std::uniform_int_distribution<int> q(-8192, 8192);
    for (Eigen::Index i = 0; i < model.factors.size(); ++i) model.factors.data()[i] = q(gen) / 1024.0;
    for (int u = 0; u < m; ++u) {
      const auto got = models::score_all_user_based(model, x, u);
      for (int i = 0; i < n; ++i) {
        double want = 0.0;  // X_u* . Q_i
        for (int j = 0; j < n; ++j) want += (x.contains(u, j) ? 1.0 : 0.0) * model.factors(i, j);
        mismatches += got[i] != want;
        ++compared;
      }
    }
    ++fixtures;
  }
  return {mismatches == 0 ? Verdict::kPass : Verdict::kFail,
          std::to_string(fixtures) + " fixtures, " + std::to_string(compared) + " scores, " +
              std::to_string(mismatches) + " not bit-identical"};
}

// ---- 9: pairwise loss ----

Line pairwise_loss_suite() {
  const double at_zero = models::log_loss_of_margin(0.0);
  // Same value through a model whose two scores are equal.
  const data::InteractionMatrix x(1, 3, {{0, 0}});
  models::NeuRecModel m;
  m.variant = models::Variant::kUserBased;
  m.net = nn::init_params(std::vector<int>{3, 3}, nn::Activation::kIdentity, 1);
  m.net.weights[0].setIdentity();
  m.factors = Eigen::MatrixXd::Zero(3, 3);
  const double model_zero = models::pairwise_loss(m, x, 0, 0, 1, 0.0);
  bool monotone = true;
  double prev = 0.0;
  for (int g = 0; g <= 100; ++g) {
    const double margin = -10.0 + 0.2 * g;
    m.factors(0, 0) = margin;  // score(item 0) = margin, score(item 1) = 0
    const double loss = models::pairwise_loss(m, x, 0, 0, 1, 0.0);
    if (std::abs(loss - models::log_loss_of_margin(margin)) > 1e-12) monotone = false;
    if (g > 0 && !(loss < prev)) monotone = false;
    prev = loss;
  }
  const double err = std::max(std::abs(at_zero - std::log(2.0)), std::abs(model_zero - std::log(2.0)));
  const bool ok = err <= 1e-12 && monotone;
  return {ok ? Verdict::kPass : Verdict::kFail,
          "|loss(0) - ln 2| = " + fmt(err) + ", 101-point grid " + (monotone ? "strictly decreasing" : "NOT decreasing")};
}

// ---- 10: SLIM ----

Line slim_suite() {
  std::mt19937_64 gen(1010);
  bool history_ok = true;
  bool constraints_ok = true;
  double worst = 0.0;
  int toys = 0;
  for (int t = 0; t < 20; ++t) {
    const auto x = fixture::random_matrix(4, 4, 0.5, gen());
    const double l2 = 0.25 + 0.25 * static_cast<double>(t % 4);
    // Constraints after every sweep: stop after s sweeps for s = 1..12.
    for (int s = 1; s <= 12; ++s) {
      const auto partial = models::train_slim(x, {l2, 0.0, s, 0.0});
      constraints_ok = constraints_ok && partial.coefficients.minCoeff() >= 0.0 &&
                       (partial.coefficients.diagonal().array() == 0.0).all();
      for (std::size_t k = 1; k < partial.objective_history.size(); ++k) {
        history_ok = history_ok && partial.objective_history[k] <= partial.objective_history[k - 1] * (1 + 1e-12);
      }
    }
    const auto full = models::train_slim(x, {l2, 0.0, 5000, 1e-14});
    const Eigen::MatrixXd dense = x.to_dense();
    for (int j = 0; j < 4; ++j) {
      const auto want = oracle::slim_column_optimum(dense, j, l2, 0.0);
      for (int r = 0; r < 4; ++r) worst = std::max(worst, std::abs(full.coefficients(r, j) - want.s[static_cast<std::size_t>(r)]));
    }
    ++toys;
  }
  // A larger problem with an l1 term for the monotone objective.
  const auto big = fixture::clustered(60, 30, 3, 0.3, 0.05, 10);
  const auto m = models::train_slim(big, {0.1, 0.5, 40, 0.0});
  for (std::size_t k = 1; k < m.objective_history.size(); ++k) {
    history_ok = history_ok && m.objective_history[k] <= m.objective_history[k - 1] * (1 + 1e-12);
  }
  constraints_ok = constraints_ok && m.coefficients.minCoeff() >= 0.0 && (m.coefficients.diagonal().array() == 0.0).all();
  const bool ok = history_ok && constraints_ok && worst < 1e-3;
  return {ok ? Verdict::kPass : Verdict::kFail,
          std::string("objective ") + (history_ok ? "non-increasing" : "INCREASED") + ", constraints " +
              (constraints_ok ? "exact" : "VIOLATED") + ", " + std::to_string(toys) +
              " 4x4 toys max |S - oracle| = " + fmt(worst)};
}

// ---- 11: determinism of `run` ----

Line determinism_suite(const std::string& cli) {
  fixture::TempDir tmp("accept");
  fixture::write_dataset(fixture::clustered(40, 30, 3, 0.3, 0.04, 11), tmp.file("data.txt"));
  const std::vector<std::string> setups{
      "--model mostpop",
      "--model u_neurec --loss pointwise --dropout 0.1",
      "--model u_neurec --loss pairwise --negatives 3",
      "--model i_neurec --loss pointwise --dropout 0.1",
      "--model i_neurec --loss pairwise",
      "--model bpr_mf --k 8",
      "--model slim --slim_iterations 10",
  };
  int identical = 0;
  std::string mismatch;
  for (std::size_t s = 0; s < setups.size(); ++s) {
    std::string csv[2];
    for (int rep = 0; rep < 2; ++rep) {
      const std::string out = tmp.file("run" + std::to_string(s) + "-" + std::to_string(rep));
      const std::string cmd = cli + " run --dataset " + tmp.file("data.txt") + " " + setups[s] +
                              " --hidden_layers 2 --width 12 --k 6 --epochs 4 --learning_rate 0.005"
                              " --seeds 1,2,3 --output_dir " + out + " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) throw std::runtime_error("command failed: " + cmd);
      csv[rep] = fixture::slurp(out + "/summary.csv");
    }
    if (!csv[0].empty() && csv[0] == csv[1]) {
      ++identical;
    } else {
      mismatch += " [" + setups[s] + "]";
    }
  }
  const bool ok = identical == static_cast<int>(setups.size());
  return {ok ? Verdict::kPass : Verdict::kFail, std::to_string(identical) + "/" + std::to_string(setups.size()) +
                                                    " configurations byte-identical across two runs" + mismatch};
}

// ---- dataset criteria ----

struct DatasetRuns {
  std::optional<harness::ExperimentResult> mostpop;
  std::optional<harness::ExperimentResult> pointwise;
};

harness::ExperimentConfig filmtrust_config(const std::string& path, harness::ModelKind kind) {
  harness::ExperimentConfig c;
  harness::apply_preset(c, "filmtrust");
  c.dataset = path;
  c.model = kind;
  return c;
}

std::string split_column(const harness::ExperimentResult& r, int col) {
  std::string out;
  for (const auto& s : r.splits) out += (out.empty() ? "" : " ") + fmt(s.report.table_row()[static_cast<std::size_t>(col)]);
  return "[" + out + "]";
}

void dataset_group() {
  const char* film = std::getenv("NEUREC_FILMTRUST");
  const char* ml1m = std::getenv("NEUREC_ML1M");
  const bool have_film = film && *film && std::filesystem::exists(film);
  const bool have_ml1m = ml1m && *ml1m && std::filesystem::exists(ml1m);
  const Line no_film{Verdict::kSkip, "FilmTrust ratings not found (set NEUREC_FILMTRUST=<ratings.txt>)"};
  const auto pointwise_epochs = static_cast<int>(env_int("NEUREC_ACCEPT_POINTWISE_EPOCHS", 1000));
  const auto pairwise_epochs = static_cast<int>(env_int("NEUREC_ACCEPT_PAIRWISE_EPOCHS", 100));
  constexpr int kP5 = 0, kMap = 4, kMrr = 5, kNdcg = 6;

  DatasetRuns runs;
  if (!have_film) {
    report(1, "mostpop-filmtrust", no_film);
  } else {
    criterion(1, "mostpop-filmtrust", [&]() -> Line {
      runs.mostpop = harness::run_experiment(filmtrust_config(film, harness::ModelKind::kMostPop));
      const double p5 = runs.mostpop->mean[kP5], mrr = runs.mostpop->mean[kMrr];
      const bool ok = std::abs(p5 - 0.418) <= 0.015 && std::abs(mrr - 0.618) <= 0.02;
      return {ok ? Verdict::kPass : Verdict::kFail,
              "P@5 " + fmt(p5) + " (0.418 +- 0.015), MRR " + fmt(mrr) + " (0.618 +- 0.02)"};
    });
  }

  if (!have_film) {
    report(2, "u-neurec-pointwise-filmtrust", no_film);
  } else {
    criterion(2, "u-neurec-pointwise-filmtrust", [&]() -> Line {
      auto c = filmtrust_config(film, harness::ModelKind::kUNeuRec);
      c.train.epochs = std::min(pointwise_epochs, 1000);
      runs.pointwise = harness::run_experiment(c);
      const double p5 = runs.pointwise->mean[kP5], nd = runs.pointwise->mean[kNdcg];
      const bool ok = p5 >= 0.42 && nd >= 0.64;
      return {ok ? Verdict::kPass : Verdict::kFail, std::to_string(c.train.epochs) + " epochs: P@5 " + fmt(p5) +
                                                        " (>= 0.42), NDCG " + fmt(nd) + " (>= 0.64)"};
    });
  }

  if (!have_film) {
    report(3, "neurec-pairwise-filmtrust", no_film);
  } else {
    criterion(3, "neurec-pairwise-filmtrust", [&]() -> Line {
      auto u = filmtrust_config(film, harness::ModelKind::kUNeuRec);
      u.train.loss = models::LossKind::kPairwise;
      u.train.epochs = pairwise_epochs;
      auto i = u;
      i.model = harness::ModelKind::kINeuRec;
      const double un = harness::run_experiment(u).mean[kNdcg];
      const double in = harness::run_experiment(i).mean[kNdcg];
      const bool ok = std::abs(un - 0.656) <= 0.03 && std::abs(in - 0.644) <= 0.03;
      return {ok ? Verdict::kPass : Verdict::kFail, std::to_string(pairwise_epochs) + " epochs: U-NeuRec NDCG " +
                                                        fmt(un) + " (0.656 +- 0.03), I-NeuRec NDCG " + fmt(in) +
                                                        " (0.644 +- 0.03)"};
    });
  }

  if (!runs.mostpop || !runs.pointwise) {
    report(4, "u-neurec-beats-mostpop",
           have_film ? Line{Verdict::kFail, "criteria 1 and 2 did not both produce results"} : no_film);
  } else {
    criterion(4, "u-neurec-beats-mostpop", [&]() -> Line {
      bool ok = runs.mostpop->splits.size() == runs.pointwise->splits.size();
      for (std::size_t s = 0; ok && s < runs.mostpop->splits.size(); ++s) {
        const auto a = runs.pointwise->splits[s].report.table_row();
        const auto b = runs.mostpop->splits[s].report.table_row();
        ok = a[kMap] > b[kMap] && a[kMrr] > b[kMrr];
      }
      return {ok ? Verdict::kPass : Verdict::kFail,
              "MAP " + split_column(*runs.pointwise, kMap) + " vs " + split_column(*runs.mostpop, kMap) + ", MRR " +
                  split_column(*runs.pointwise, kMrr) + " vs " + split_column(*runs.mostpop, kMrr)};
    });
  }

  if (!have_ml1m) {
    report(5, "parameter-count-ml-1m", {Verdict::kSkip, "ML-1M ratings not found (set NEUREC_ML1M=<ratings.dat>)"});
  } else {
    criterion(5, "parameter-count-ml-1m", [&]() -> Line {
      harness::ExperimentConfig c;
      harness::apply_preset(c, "ml-1m");
      const auto built = data::build_matrix(data::load_interactions_file(ml1m, c.format));
      c.train.variant = models::Variant::kUserBased;
      const auto model = models::init_neurec(c.train, built.matrix);
      models::SlimModel slim;
      slim.coefficients = Eigen::MatrixXd::Zero(built.matrix.num_items(), built.matrix.num_items());
      const auto nn_count = models::count_parameters(model);
      const auto slim_count = models::count_parameters(slim);
      const auto n = static_cast<std::size_t>(built.matrix.num_items());
      const bool ok = slim_count == n * n && nn_count < slim_count;
      return {ok ? Verdict::kPass : Verdict::kFail, "N = " + std::to_string(n) + ": U-NeuRec " +
                                                        std::to_string(nn_count) + " < SLIM " + std::to_string(slim_count)};
    });
  }
}

void property_group(const std::string& cli) {
  criterion(6, "gradient-finite-differences", gradient_suite);
  criterion(7, "metric-oracles", metric_suite);
  criterion(8, "identity-degeneration", degeneration_suite);
  criterion(9, "pairwise-loss-shape", pairwise_loss_suite);
  criterion(10, "slim-solver", slim_suite);
  criterion(11, "run-determinism", [&] { return determinism_suite(cli); });
}

}  // namespace

int main(int argc, char** argv) {
  std::string group = "all";
  std::string cli = NEUREC_CLI_PATH;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--group" && a + 1 < argc) {
      group = argv[++a];
    } else if (arg == "--cli" && a + 1 < argc) {
      cli = argv[++a];
    } else {
      std::cerr << "usage: neurec_acceptance [--group property|dataset|all] [--cli path]\n";
      return 2;
    }
  }
  if (group != "property" && group != "dataset" && group != "all") {
    std::cerr << "unknown group '" << group << "'\n";
    return 2;
  }
  if (group == "dataset" || group == "all") dataset_group();
  if (group == "property" || group == "all") property_group(cli);
  if (failures > 0) return 1;
  return skips > 0 ? 77 : 0;
}
