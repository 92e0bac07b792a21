#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "neurec/data.hpp"
#include "neurec/eval.hpp"
#include "neurec/models.hpp"

namespace neurec::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A failure inside run_experiment, tagged with the split seed and stage.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::string stage, std::uint64_t seed, const std::string& what);
  const std::string& stage() const { return stage_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::string stage_;
  std::uint64_t seed_;
};

enum class ModelKind { kUNeuRec, kINeuRec, kMostPop, kBprMf, kSlim };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

struct ExperimentConfig {
  std::string dataset;
  data::Format format{data::Delimiter::kWhitespace, {data::Column::kUser, data::Column::kItem, data::Column::kRating}, 0};
  ModelKind model = ModelKind::kUNeuRec;
  models::TrainConfig train;
  models::SlimOptions slim;
  double split_ratio = 0.8;
  data::SplitMode split_mode = data::SplitMode::kGlobal;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir;  // empty: nothing is written
  bool per_user_report = false;

  void validate() const;
};

// Every key accepted in a config file or as a --key flag.
const std::vector<std::string>& config_keys();

// Named hyperparameter presets: "filmtrust", "ml-1m", "ml-hetrec", "frappe".
void apply_preset(ExperimentConfig& config, std::string_view name);

// Sets one key; "preset" applies a preset in place. Unknown keys throw.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// "key = value" lines; '#' starts a comment. Settings apply in file order.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

// Canonical key = value text that parse_config reads back to the same config.
std::string config_to_text(const ExperimentConfig& config);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Resolves the output directory against NEUREC_OUTPUT_ROOT when it is relative.
std::string resolve_output_dir(const std::string& dir);

// Training seed used for the split with the given seed.
std::uint64_t training_seed(const ExperimentConfig& config, std::uint64_t split_seed);

models::TrainedModel train_model(const ExperimentConfig& config, const data::InteractionMatrix& train,
                                 std::uint64_t seed, models::TrainingLog* log = nullptr);

struct SplitOutcome {
  std::uint64_t seed = 0;
  eval::RankingReport report;
  std::size_t parameter_count = 0;
  double split_seconds = 0.0;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

struct ExperimentResult {
  std::string model;
  std::vector<SplitOutcome> splits;
  std::vector<double> mean;                   // table_columns() order
  std::optional<std::vector<double>> stddev;  // sample std, needs >= 2 splits
  nlohmann::json config;
};

// Mean and sample standard deviation of the per-split table rows.
void summarize(ExperimentResult& result);

ExperimentResult run_experiment(const ExperimentConfig& config);
// Same protocol over an already built matrix (dataset path is ignored).
ExperimentResult run_experiment(const ExperimentConfig& config, const data::BuiltMatrix& data);

enum class SweepParam { kK, kNeuronWidth, kActivation, kDepth, kNegativePool };

SweepParam parse_sweep_param(std::string_view name);
std::string_view to_string(SweepParam p);

// Copy of `config` with the swept parameter set to `value`.
ExperimentConfig with_sweep_value(const ExperimentConfig& config, SweepParam param, const std::string& value);

struct SweepRow {
  std::string value;
  std::vector<double> mean;
};

struct SweepTable {
  SweepParam param = SweepParam::kK;
  std::vector<SweepRow> rows;
};

SweepTable run_sweep(const ExperimentConfig& config, SweepParam param, const std::vector<std::string>& values);
SweepTable run_sweep(const ExperimentConfig& config, const data::BuiltMatrix& data, SweepParam param,
                     const std::vector<std::string>& values);

// "param,value,P@5,P@10,R@5,R@10,MAP,MRR,NDCG"
std::string sweep_csv(const SweepTable& table);

// Top n of the ranked candidates for one user, as external item ids.
std::vector<std::string> recommend_top_n(const models::TrainedModel& model, const data::SplitPair& split,
                                         const data::IdMap& ids, const std::string& user, int n);
std::vector<std::string> recommend_top_n(const std::string& model_file, const std::string& split_file,
                                         const std::string& ids_file, const std::string& user, int n);

enum class ReportFormat { kJson, kCsv };

ReportFormat parse_report_format(std::string_view name);

// CSV: header "model,P@5,P@10,R@5,R@10,MAP,MRR,NDCG", a row of means named
// after the model, and a "<model>:std" row (empty cells with a single split).
std::string result_csv(const ExperimentResult& result);
nlohmann::json result_to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& j);

void emit_report(const ExperimentResult& result, ReportFormat format, const std::string& path);

}  // namespace neurec::harness
