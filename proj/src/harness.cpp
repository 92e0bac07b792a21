#include "neurec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "neurec/text.hpp"

namespace neurec::harness {

namespace fs = std::filesystem;

ExperimentError::ExperimentError(std::string stage, std::uint64_t seed, const std::string& what)
    : std::runtime_error("seed " + std::to_string(seed) + ", stage " + stage + ": " + what),
      stage_(std::move(stage)),
      seed_(seed) {}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "u_neurec") return ModelKind::kUNeuRec;
  if (name == "i_neurec") return ModelKind::kINeuRec;
  if (name == "mostpop") return ModelKind::kMostPop;
  if (name == "bpr_mf") return ModelKind::kBprMf;
  if (name == "slim") return ModelKind::kSlim;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected u_neurec|i_neurec|mostpop|bpr_mf|slim)");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kUNeuRec:
      return "u_neurec";
    case ModelKind::kINeuRec:
      return "i_neurec";
    case ModelKind::kMostPop:
      return "mostpop";
    case ModelKind::kBprMf:
      return "bpr_mf";
    case ModelKind::kSlim:
      return "slim";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  train.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("ratio must lie in (0, 1)");
  if (seeds.empty()) throw ConfigError("at least one split seed is required");
  auto sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("split seeds must be distinct");
  if (!(slim.l1_rate >= 0.0) || !(slim.l2_rate >= 0.0) || slim.iterations < 0) {
    throw ConfigError("SLIM settings must be non-negative");
  }
}

namespace {

template <typename Int>
Int to_int(std::string_view key, std::string_view value) {
  const auto v = text::parse_int<Int>(text::trim(value));
  if (!v) throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
  return *v;
}

double to_real(std::string_view key, std::string_view value) {
  const auto v = text::parse_double(text::trim(value));
  if (!v || !std::isfinite(*v)) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
  }
  return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects true|false, got '" + std::string(value) + "'");
}

std::string_view delimiter_name(data::Delimiter d) {
  switch (d) {
    case data::Delimiter::kTab:
      return "tab";
    case data::Delimiter::kComma:
      return "comma";
    case data::Delimiter::kColons:
      return "colons";
    case data::Delimiter::kWhitespace:
      return "ws";
  }
  return "?";
}

std::string columns_spec(const std::vector<data::Column>& cols) {
  std::string out;
  for (auto c : cols) {
    if (!out.empty()) out += ',';
    switch (c) {
      case data::Column::kUser:
        out += "user";
        break;
      case data::Column::kItem:
        out += "item";
        break;
      case data::Column::kRating:
        out += "rating";
        break;
      case data::Column::kTimestamp:
        out += "ts";
        break;
      case data::Column::kIgnore:
        out += "skip";
        break;
    }
  }
  return out;
}

std::string seeds_spec(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (auto s : seeds) {
    if (!out.empty()) out += ',';
    out += std::to_string(s);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& key_table() {
  using C = ExperimentConfig;
  using SV = std::string_view;
  static const std::vector<Key> keys{
      {"dataset", [](C& c, SV v) { c.dataset = std::string(v); }, [](const C& c) { return c.dataset; }},
      {"delim", [](C& c, SV v) { c.format.delimiter = data::parse_delimiter(v); },
       [](const C& c) { return std::string(delimiter_name(c.format.delimiter)); }},
      {"cols", [](C& c, SV v) { c.format.columns = data::parse_columns(v); },
       [](const C& c) { return columns_spec(c.format.columns); }},
      {"header_lines", [](C& c, SV v) { c.format.header_lines = to_int<std::size_t>("header_lines", v); },
       [](const C& c) { return std::to_string(c.format.header_lines); }},
      {"model", [](C& c, SV v) { c.model = parse_model_kind(v); },
       [](const C& c) { return std::string(to_string(c.model)); }},
      {"loss", [](C& c, SV v) { c.train.loss = models::parse_loss(v); },
       [](const C& c) { return std::string(models::to_string(c.train.loss)); }},
      {"hidden_layers", [](C& c, SV v) { c.train.hidden_layers = to_int<int>("hidden_layers", v); },
       [](const C& c) { return std::to_string(c.train.hidden_layers); }},
      {"width", [](C& c, SV v) { c.train.width = to_int<int>("width", v); },
       [](const C& c) { return std::to_string(c.train.width); }},
      {"k", [](C& c, SV v) { c.train.k = to_int<int>("k", v); },
       [](const C& c) { return std::to_string(c.train.k); }},
      {"activation", [](C& c, SV v) { c.train.activation = nn::parse_activation(v); },
       [](const C& c) { return std::string(nn::to_string(c.train.activation)); }},
      {"dropout", [](C& c, SV v) { c.train.dropout_rate = to_real("dropout", v); },
       [](const C& c) { return text::format_double(c.train.dropout_rate); }},
      {"learning_rate", [](C& c, SV v) { c.train.learning_rate = to_real("learning_rate", v); },
       [](const C& c) { return text::format_double(c.train.learning_rate); }},
      {"l2", [](C& c, SV v) { c.train.l2_rate = to_real("l2", v); },
       [](const C& c) { return text::format_double(c.train.l2_rate); }},
      {"batch_size", [](C& c, SV v) { c.train.batch_size = to_int<int>("batch_size", v); },
       [](const C& c) { return std::to_string(c.train.batch_size); }},
      {"epochs", [](C& c, SV v) { c.train.epochs = to_int<int>("epochs", v); },
       [](const C& c) { return std::to_string(c.train.epochs); }},
      {"seed", [](C& c, SV v) { c.train.seed = to_int<std::uint64_t>("seed", v); },
       [](const C& c) { return std::to_string(c.train.seed); }},
      {"negatives", [](C& c, SV v) { c.train.negative_pool_t = to_int<int>("negatives", v); },
       [](const C& c) { return std::to_string(c.train.negative_pool_t); }},
      {"slim_l2", [](C& c, SV v) { c.slim.l2_rate = to_real("slim_l2", v); },
       [](const C& c) { return text::format_double(c.slim.l2_rate); }},
      {"slim_l1", [](C& c, SV v) { c.slim.l1_rate = to_real("slim_l1", v); },
       [](const C& c) { return text::format_double(c.slim.l1_rate); }},
      {"slim_iterations", [](C& c, SV v) { c.slim.iterations = to_int<int>("slim_iterations", v); },
       [](const C& c) { return std::to_string(c.slim.iterations); }},
      {"ratio", [](C& c, SV v) { c.split_ratio = to_real("ratio", v); },
       [](const C& c) { return text::format_double(c.split_ratio); }},
      {"split_mode", [](C& c, SV v) { c.split_mode = data::parse_split_mode(v); },
       [](const C& c) { return std::string(data::to_string(c.split_mode)); }},
      {"seeds",
       [](C& c, SV v) {
         c.seeds.clear();
         for (auto part : text::split(v, ",")) c.seeds.push_back(to_int<std::uint64_t>("seeds", text::trim(part)));
       },
       [](const C& c) { return seeds_spec(c.seeds); }},
      {"output_dir", [](C& c, SV v) { c.output_dir = std::string(v); }, [](const C& c) { return c.output_dir; }},
      {"per_user_report", [](C& c, SV v) { c.per_user_report = to_bool("per_user_report", v); },
       [](const C& c) { return std::string(c.per_user_report ? "true" : "false"); }},
  };
  return keys;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"preset"};
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return names;
}

void apply_preset(ExperimentConfig& config, std::string_view name) {
  auto& t = config.train;
  t.hidden_layers = 5;
  t.activation = nn::Activation::kSigmoid;
  t.epochs = 200;
  if (name == "filmtrust") {
    t.width = 150;
    t.k = 40;
    t.dropout_rate = 0.0;
    t.learning_rate = 5e-5;
    t.l2_rate = 0.1;
    config.format = {data::Delimiter::kWhitespace, {data::Column::kUser, data::Column::kItem, data::Column::kRating}, 0};
  } else if (name == "ml-1m") {
    t.width = 300;
    t.k = 50;
    t.dropout_rate = 0.03;
    t.learning_rate = 1e-4;
    t.l2_rate = 0.1;
    config.format = {data::Delimiter::kColons,
                     {data::Column::kUser, data::Column::kItem, data::Column::kRating, data::Column::kTimestamp},
                     0};
  } else if (name == "ml-hetrec") {
    t.width = 300;
    t.k = 50;
    t.dropout_rate = 0.03;
    t.learning_rate = 1e-4;
    t.l2_rate = 0.1;
    config.format = {data::Delimiter::kTab,
                     {data::Column::kUser, data::Column::kItem, data::Column::kRating, data::Column::kTimestamp},
                     1};
  } else if (name == "frappe") {
    t.width = 300;
    t.k = 50;
    t.dropout_rate = 0.03;
    t.learning_rate = 1e-4;
    t.l2_rate = 0.01;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected filmtrust|ml-1m|ml-hetrec|frappe)");
  }
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  value = text::trim(value);
  if (key == "preset") {
    apply_preset(config, value);
    return;
  }
  for (const auto& k : key_table()) {
    if (k.name == key) {
      try {
        k.set(config, value);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError("'" + std::string(key) + "': " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      apply_setting(config, text::trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string config_to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : key_table()) j[k.name] = k.get(config);
  return j;
}

std::string resolve_output_dir(const std::string& dir) {
  if (dir.empty()) return dir;
  const fs::path p(dir);
  if (p.is_absolute()) return dir;
  if (const char* root = std::getenv("NEUREC_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return (fs::path(root) / p).string();
  }
  return dir;
}

std::uint64_t training_seed(const ExperimentConfig& config, std::uint64_t split_seed) {
  return config.train.seed * 1000003ULL + split_seed;
}

models::TrainedModel train_model(const ExperimentConfig& config, const data::InteractionMatrix& train,
                                 std::uint64_t seed, models::TrainingLog* log) {
  models::TrainConfig tc = config.train;
  tc.seed = seed;
  switch (config.model) {
    case ModelKind::kUNeuRec:
      tc.variant = models::Variant::kUserBased;
      return models::train_neurec(tc, train, log);
    case ModelKind::kINeuRec:
      tc.variant = models::Variant::kItemBased;
      return models::train_neurec(tc, train, log);
    case ModelKind::kMostPop:
      return models::train_mostpop(train);
    case ModelKind::kBprMf:
      return models::train_bpr_mf(tc, train, log);
    case ModelKind::kSlim:
      return models::train_slim(train, config.slim);
  }
  throw ConfigError("unhandled model kind");
}

void summarize(ExperimentResult& result) {
  const std::size_t cols = eval::table_columns().size();
  const std::size_t n = result.splits.size();
  result.mean.assign(cols, 0.0);
  result.stddev.reset();
  if (n == 0) return;
  std::vector<std::vector<double>> rows;
  for (const auto& s : result.splits) rows.push_back(s.report.table_row());
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r[c]);
    result.mean[c] = eval::stable_mean(values);
  }
  if (n >= 2) {
    std::vector<double> sd(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<double> sq;
      for (const auto& r : rows) sq.push_back((r[c] - result.mean[c]) * (r[c] - result.mean[c]));
      sd[c] = std::sqrt(eval::stable_mean(sq) * static_cast<double>(n) / static_cast<double>(n - 1));
    }
    result.stddev = std::move(sd);
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename Fn>
auto stage(const char* name, std::uint64_t seed, Fn&& fn) {
  try {
    return fn();
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(name, seed, e.what());
  }
}

data::BuiltMatrix load_dataset(const ExperimentConfig& config) {
  if (config.dataset.empty()) throw ConfigError("no dataset path configured");
  try {
    return data::build_matrix(data::load_interactions_file(config.dataset, config.format));
  } catch (const data::DataError& e) {
    throw ConfigError(config.dataset + ": " + e.what());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) { return run_experiment(config, load_dataset(config)); }

ExperimentResult run_experiment(const ExperimentConfig& config, const data::BuiltMatrix& data) {
  config.validate();
  ExperimentResult result;
  result.model = std::string(to_string(config.model));
  result.config = config_to_json(config);

  const std::string out_dir = resolve_output_dir(config.output_dir);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ostringstream ids;
    data::save_id_map(data.ids, ids);
    write_text(fs::path(out_dir) / "ids.tsv", ids.str());
    write_text(fs::path(out_dir) / "config.txt", config_to_text(config));
  }

  for (const auto seed : config.seeds) {
    SplitOutcome outcome;
    outcome.seed = seed;
    const fs::path split_dir = out_dir.empty() ? fs::path() : fs::path(out_dir) / ("seed-" + std::to_string(seed));

    auto t0 = Clock::now();
    const auto split = stage("split", seed, [&] {
      auto s = data::split_holdout(data.matrix, config.split_ratio, seed, config.split_mode);
      if (!split_dir.empty()) {
        fs::create_directories(split_dir);
        data::persist_split_file(s, (split_dir / "split.tsv").string());
      }
      return s;
    });
    outcome.split_seconds = seconds_since(t0);

    t0 = Clock::now();
    const auto model = stage("train", seed, [&] {
      auto m = train_model(config, split.train, training_seed(config, seed));
      if (!split_dir.empty()) models::save_model_file(m, (split_dir / "model.txt").string());
      return m;
    });
    outcome.train_seconds = seconds_since(t0);
    outcome.parameter_count = models::count_parameters(model);

    t0 = Clock::now();
    outcome.report = stage("evaluate", seed, [&] {
      auto report = eval::evaluate_model(models::make_scorer(model, split.train), split);
      if (!config.per_user_report) report.per_user.clear();
      if (!split_dir.empty()) write_text(split_dir / "report.json", eval::to_json(report, true).dump(2) + "\n");
      return report;
    });
    outcome.eval_seconds = seconds_since(t0);
    result.splits.push_back(std::move(outcome));
  }

  summarize(result);
  if (!out_dir.empty()) {
    write_text(fs::path(out_dir) / "summary.csv", result_csv(result));
    write_text(fs::path(out_dir) / "result.json", result_to_json(result).dump(2) + "\n");
  }
  return result;
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "k") return SweepParam::kK;
  if (name == "neuron_width" || name == "width") return SweepParam::kNeuronWidth;
  if (name == "activation") return SweepParam::kActivation;
  if (name == "depth") return SweepParam::kDepth;
  if (name == "t" || name == "negatives") return SweepParam::kNegativePool;
  throw ConfigError("unknown sweep parameter '" + std::string(name) + "' (expected k|neuron_width|activation|depth|t)");
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kK:
      return "k";
    case SweepParam::kNeuronWidth:
      return "neuron_width";
    case SweepParam::kActivation:
      return "activation";
    case SweepParam::kDepth:
      return "depth";
    case SweepParam::kNegativePool:
      return "t";
  }
  return "?";
}

ExperimentConfig with_sweep_value(const ExperimentConfig& config, SweepParam param, const std::string& value) {
  ExperimentConfig c = config;
  switch (param) {
    case SweepParam::kK:
      apply_setting(c, "k", value);
      break;
    case SweepParam::kNeuronWidth:
      apply_setting(c, "width", value);
      break;
    case SweepParam::kActivation:
      apply_setting(c, "activation", value);
      break;
    case SweepParam::kDepth:
      apply_setting(c, "hidden_layers", value);
      break;
    case SweepParam::kNegativePool:
      apply_setting(c, "negatives", value);
      break;
  }
  return c;
}

SweepTable run_sweep(const ExperimentConfig& config, SweepParam param, const std::vector<std::string>& values) {
  return run_sweep(config, load_dataset(config), param, values);
}

SweepTable run_sweep(const ExperimentConfig& config, const data::BuiltMatrix& data, SweepParam param,
                     const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("a sweep needs at least one value");
  const std::string out_dir = resolve_output_dir(config.output_dir);
  SweepTable table;
  table.param = param;
  for (const auto& value : values) {
    ExperimentConfig c = with_sweep_value(config, param, value);
    if (!out_dir.empty()) {
      c.output_dir = (fs::path(out_dir) / (std::string(to_string(param)) + "=" + value)).string();
    }
    const auto result = run_experiment(c, data);
    table.rows.push_back(SweepRow{value, result.mean});
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / ("sweep-" + std::string(to_string(param)) + ".csv"), sweep_csv(table));
  }
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::string out = "param,value";
  for (const auto& c : eval::table_columns()) out += "," + c;
  out += "\n";
  for (const auto& row : table.rows) {
    out += std::string(to_string(table.param)) + "," + row.value;
    for (double v : row.mean) out += "," + text::format_double(v);
    out += "\n";
  }
  return out;
}

std::vector<std::string> recommend_top_n(const models::TrainedModel& model, const data::SplitPair& split,
                                         const data::IdMap& ids, const std::string& user, int n) {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (ids.num_users() != split.train.num_users() || ids.num_items() != split.train.num_items()) {
    throw ConfigError("id map does not match the split dimensions");
  }
  const auto u = ids.user_index(user);
  if (!u) {
    std::vector<std::string> known = ids.index_to_user;
    std::sort(known.begin(), known.end());
    const auto pos = std::lower_bound(known.begin(), known.end(), user) - known.begin();
    std::string nearest;
    for (auto i = std::max<std::ptrdiff_t>(0, pos - 2); i < std::min<std::ptrdiff_t>(std::ssize(known), pos + 2); ++i) {
      if (!nearest.empty()) nearest += ", ";
      nearest += known[static_cast<std::size_t>(i)];
    }
    throw ConfigError("unknown user id '" + user + "' (" + std::to_string(known.size()) +
                      " known users; nearest ids: " + nearest + ")");
  }
  const auto scorer = models::make_scorer(model, split.train);
  const auto ranked = eval::rank_candidates(scorer(*u), split.train.row(*u), *u);
  std::vector<std::string> out;
  const auto depth = std::min(ranked.items.size(), static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < depth; ++r) out.push_back(ids.index_to_item[static_cast<std::size_t>(ranked.items[r])]);
  return out;
}

std::vector<std::string> recommend_top_n(const std::string& model_file, const std::string& split_file,
                                         const std::string& ids_file, const std::string& user, int n) {
  const auto model = models::load_model_file(model_file);
  const auto split = data::load_split_file(split_file);
  std::ifstream in(ids_file);
  if (!in) throw ConfigError("cannot open id map '" + ids_file + "'");
  const auto ids = data::load_id_map(in);
  return recommend_top_n(model, split, ids, user, n);
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw ConfigError("unknown report format '" + std::string(name) + "' (expected json|csv)");
}

std::string result_csv(const ExperimentResult& result) {
  std::string out = "model";
  for (const auto& c : eval::table_columns()) out += "," + c;
  out += "\n" + result.model;
  for (double v : result.mean) out += "," + text::format_double(v);
  out += "\n" + result.model + ":std";
  for (std::size_t c = 0; c < eval::table_columns().size(); ++c) {
    out += ",";
    if (result.stddev) out += text::format_double((*result.stddev)[c]);
  }
  out += "\n";
  return out;
}

namespace {

nlohmann::json named_row(const std::vector<double>& values) {
  nlohmann::json j = nlohmann::json::object();
  const auto& cols = eval::table_columns();
  for (std::size_t c = 0; c < cols.size() && c < values.size(); ++c) j[cols[c]] = values[c];
  return j;
}

std::vector<double> row_from_json(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& c : eval::table_columns()) out.push_back(j.at(c).get<double>());
  return out;
}

}  // namespace

nlohmann::json result_to_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["model"] = result.model;
  j["config"] = result.config;
  j["mean"] = named_row(result.mean);
  j["std"] = result.stddev ? named_row(*result.stddev) : nlohmann::json(nullptr);
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : result.splits) {
    nlohmann::json sj;
    sj["seed"] = s.seed;
    sj["parameter_count"] = s.parameter_count;
    sj["seconds"] = {{"split", s.split_seconds}, {"train", s.train_seconds}, {"evaluate", s.eval_seconds}};
    sj["report"] = eval::to_json(s.report, !s.report.per_user.empty());
    splits.push_back(std::move(sj));
  }
  j["splits"] = std::move(splits);
  return j;
}

ExperimentResult result_from_json(const nlohmann::json& j) {
  ExperimentResult r;
  r.model = j.at("model").get<std::string>();
  r.config = j.value("config", nlohmann::json::object());
  r.mean = row_from_json(j.at("mean"));
  if (!j.at("std").is_null()) r.stddev = row_from_json(j.at("std"));
  for (const auto& sj : j.at("splits")) {
    SplitOutcome s;
    s.seed = sj.at("seed").get<std::uint64_t>();
    s.parameter_count = sj.value("parameter_count", std::size_t{0});
    if (sj.contains("seconds")) {
      s.split_seconds = sj["seconds"].value("split", 0.0);
      s.train_seconds = sj["seconds"].value("train", 0.0);
      s.eval_seconds = sj["seconds"].value("evaluate", 0.0);
    }
    s.report = eval::report_from_json(sj.at("report"));
    r.splits.push_back(std::move(s));
  }
  return r;
}

void emit_report(const ExperimentResult& result, ReportFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report '" + path + "'");
  if (format == ReportFormat::kCsv) {
    out << result_csv(result);
  } else {
    out << result_to_json(result).dump(2) << '\n';
  }
  if (!out) throw ConfigError("write failed for report '" + path + "'");
}

}  // namespace neurec::harness
