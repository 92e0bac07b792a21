// neurec: split / train / evaluate / run / sweep / recommend / report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neurec/data.hpp"
#include "neurec/eval.hpp"
#include "neurec/harness.hpp"
#include "neurec/models.hpp"
#include "neurec/text.hpp"

namespace fs = std::filesystem;
using namespace neurec;

namespace {

// Reads an optional config file, then applies "--key value" / "--key=value"
// pairs left over by the subcommand parser. Unknown keys are errors.
harness::ExperimentConfig resolve_config(const std::string& config_path, std::vector<std::string> extras) {
  harness::ExperimentConfig config =
      config_path.empty() ? harness::ExperimentConfig{} : harness::load_config_file(config_path);
  for (std::size_t a = 0; a < extras.size(); ++a) {
    std::string arg = extras[a];
    if (arg.rfind("--", 0) != 0) throw harness::ConfigError("unexpected argument '" + arg + "'");
    arg = arg.substr(2);
    std::string value;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg = arg.substr(0, eq);
    } else {
      if (a + 1 >= extras.size()) throw harness::ConfigError("flag --" + arg + " needs a value");
      value = extras[++a];
    }
    harness::apply_setting(config, arg, value);
  }
  return config;
}

void make_parent(const std::string& path) {
  const auto dir = fs::path(path).parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

void write_file(const std::string& path, const std::string& body) {
  make_parent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << body;
}

void print_row(const std::string& label, const std::vector<double>& row) {
  std::cout << label;
  const auto& cols = eval::table_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) std::cout << "  " << cols[c] << "=" << text::format_double(row[c]);
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NeuRec top-n recommendation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string split_path;
  std::string model_path;
  std::string ids_path;
  std::string out_path;
  std::string csv_path;
  std::string user;
  std::string param;
  std::string values;
  std::string format = "csv";
  std::uint64_t seed = 1;
  int top_n = 10;
  bool per_user = false;

  auto* split_cmd = app.add_subcommand("split", "Binarize a dataset and write one seeded train/test split");
  split_cmd->add_option("--config", config_path, "key = value config file");
  split_cmd->add_option("--seed", seed, "Split seed");
  split_cmd->add_option("--out", out_path, "Split file to write")->required();
  split_cmd->add_option("--ids", ids_path, "Id map file to write (default: ids.tsv next to --out)");
  split_cmd->allow_extras();

  auto* train_cmd = app.add_subcommand("train", "Train the configured model on a split's training pairs");
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->add_option("--split", split_path, "Split file")->required();
  train_cmd->add_option("--out", out_path, "Model file to write")->required();
  train_cmd->allow_extras();

  auto* eval_cmd = app.add_subcommand("evaluate", "Rank held-out items with a trained model");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--split", split_path, "Split file")->required();
  eval_cmd->add_option("--out", out_path, "Report JSON to write");
  eval_cmd->add_option("--csv", csv_path, "One-row CSV to write");
  eval_cmd->add_flag("--per-user", per_user, "Include per-user metrics in the JSON");

  auto* run_cmd = app.add_subcommand("run", "Full protocol: split, train and evaluate for every seed");
  run_cmd->add_option("--config", config_path, "key = value config file");
  run_cmd->allow_extras();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the protocol once per value of one hyperparameter");
  sweep_cmd->add_option("--config", config_path, "key = value config file");
  sweep_cmd->add_option("--param", param, "k | neuron_width | activation | depth | t")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->allow_extras();

  auto* rec_cmd = app.add_subcommand("recommend", "Top-n unobserved items for one user");
  rec_cmd->add_option("--model", model_path, "Model file")->required();
  rec_cmd->add_option("--split", split_path, "Split file the model was trained on")->required();
  rec_cmd->add_option("--ids", ids_path, "Id map (default: ids.tsv beside the split, then one level up)");
  rec_cmd->add_option("--user", user, "External user id")->required();
  rec_cmd->add_option("-n,--n", top_n, "List length");

  auto* report_cmd = app.add_subcommand("report", "Re-emit a saved experiment result");
  report_cmd->add_option("--result", model_path, "result.json from a run")->required();
  report_cmd->add_option("--format", format, "csv | json");
  report_cmd->add_option("--out", out_path, "Destination file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*split_cmd) {
      const auto config = resolve_config(config_path, split_cmd->remaining());
      if (config.dataset.empty()) throw harness::ConfigError("no dataset configured (use --dataset)");
      const auto built = data::build_matrix(data::load_interactions_file(config.dataset, config.format));
      const auto split = data::split_holdout(built.matrix, config.split_ratio, seed, config.split_mode);
      make_parent(out_path);
      data::persist_split_file(split, out_path);
      if (ids_path.empty()) ids_path = (fs::path(out_path).parent_path() / "ids.tsv").string();
      make_parent(ids_path);
      std::ofstream ids(ids_path);
      if (!ids) throw std::runtime_error("cannot write '" + ids_path + "'");
      data::save_id_map(built.ids, ids);
      std::cout << "users=" << built.matrix.num_users() << " items=" << built.matrix.num_items()
                << " train=" << split.train.nnz() << " test=" << split.test.size() << '\n';
    } else if (*train_cmd) {
      const auto config = resolve_config(config_path, train_cmd->remaining());
      config.validate();
      const auto split = data::load_split_file(split_path);
      models::TrainingLog log;
      const auto model =
          harness::train_model(config, split.train, harness::training_seed(config, split.seed), &log);
      make_parent(out_path);
      models::save_model_file(model, out_path);
      std::cout << "parameters=" << models::count_parameters(model);
      if (!log.epoch_loss.empty()) std::cout << " final_epoch_loss=" << text::format_double(log.epoch_loss.back());
      std::cout << '\n';
    } else if (*eval_cmd) {
      const auto model = models::load_model_file(model_path);
      const auto split = data::load_split_file(split_path);
      const auto report = eval::evaluate_model(models::make_scorer(model, split.train), split);
      if (!out_path.empty()) write_file(out_path, eval::to_json(report, per_user).dump(2) + "\n");
      if (!csv_path.empty()) {
        std::string csv = "P@5,P@10,R@5,R@10,MAP,MRR,NDCG\n";
        const auto row = report.table_row();
        for (std::size_t c = 0; c < row.size(); ++c) csv += (c ? "," : "") + text::format_double(row[c]);
        write_file(csv_path, csv + "\n");
      }
      print_row("evaluated=" + std::to_string(report.evaluated_user_count), report.table_row());
    } else if (*run_cmd) {
      const auto config = resolve_config(config_path, run_cmd->remaining());
      const auto result = harness::run_experiment(config);
      std::cout << harness::result_csv(result);
    } else if (*sweep_cmd) {
      const auto config = resolve_config(config_path, sweep_cmd->remaining());
      std::vector<std::string> list;
      for (auto v : text::split(values, ",")) list.emplace_back(text::trim(v));
      const auto table = harness::run_sweep(config, harness::parse_sweep_param(param), list);
      std::cout << harness::sweep_csv(table);
    } else if (*rec_cmd) {
      if (ids_path.empty()) {
        // `split` writes ids.tsv beside the split; `run` writes it one level up.
        const auto dir = fs::path(split_path).parent_path();
        ids_path = fs::exists(dir / "ids.tsv") ? (dir / "ids.tsv").string() : (dir.parent_path() / "ids.tsv").string();
      }
      for (const auto& item : harness::recommend_top_n(model_path, split_path, ids_path, user, top_n)) {
        std::cout << item << '\n';
      }
    } else if (*report_cmd) {
      std::ifstream in(model_path);
      if (!in) throw std::runtime_error("cannot open '" + model_path + "'");
      const auto result = harness::result_from_json(nlohmann::json::parse(in));
      const auto fmt = harness::parse_report_format(format);
      if (out_path.empty()) {
        std::cout << (fmt == harness::ReportFormat::kCsv ? harness::result_csv(result)
                                                         : harness::result_to_json(result).dump(2) + "\n");
      } else {
        make_parent(out_path);
        harness::emit_report(result, fmt, out_path);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "neurec: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
