#include "neurec/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "neurec/rng.hpp"
#include "neurec/text.hpp"

namespace neurec::data {

ParseError::ParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

Delimiter parse_delimiter(std::string_view name) {
  if (name == "tab") return Delimiter::kTab;
  if (name == "comma") return Delimiter::kComma;
  if (name == "colons" || name == "::") return Delimiter::kColons;
  if (name == "ws" || name == "whitespace") return Delimiter::kWhitespace;
  throw DataError("unknown delimiter '" + std::string(name) + "' (expected tab|comma|colons|ws)");
}

std::vector<Column> parse_columns(std::string_view spec) {
  std::vector<Column> cols;
  bool has_user = false;
  bool has_item = false;
  for (auto part : text::split(spec, ",")) {
    part = text::trim(part);
    if (part == "user") {
      if (has_user) throw DataError("column 'user' given twice");
      has_user = true;
      cols.push_back(Column::kUser);
    } else if (part == "item") {
      if (has_item) throw DataError("column 'item' given twice");
      has_item = true;
      cols.push_back(Column::kItem);
    } else if (part == "rating") {
      cols.push_back(Column::kRating);
    } else if (part == "ts" || part == "timestamp") {
      cols.push_back(Column::kTimestamp);
    } else if (part == "skip" || part == "_") {
      cols.push_back(Column::kIgnore);
    } else {
      throw DataError("unknown column '" + std::string(part) + "'");
    }
  }
  if (!has_user || !has_item) throw DataError("column order must name both user and item");
  return cols;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, Delimiter delim) {
  switch (delim) {
    case Delimiter::kTab:
      return text::split(line, "\t");
    case Delimiter::kComma:
      return text::split(line, ",");
    case Delimiter::kColons:
      return text::split(line, "::");
    case Delimiter::kWhitespace:
      return text::split_ws(line);
  }
  return {};
}

}  // namespace

RawInteractions load_interactions(std::istream& in, const Format& format) {
  RawInteractions raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= format.header_lines) continue;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (text::trim(view).empty()) continue;

    const auto fields = split_fields(view, format.delimiter);
    if (fields.size() != format.columns.size()) {
      throw ParseError(lineno, "expected " + std::to_string(format.columns.size()) + " fields, found " +
                                   std::to_string(fields.size()));
    }
    Interaction rec;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto field = text::trim(fields[c]);
      switch (format.columns[c]) {
        case Column::kUser:
          if (field.empty()) throw ParseError(lineno, "empty user id");
          rec.user = std::string(field);
          break;
        case Column::kItem:
          if (field.empty()) throw ParseError(lineno, "empty item id");
          rec.item = std::string(field);
          break;
        case Column::kRating: {
          const auto value = text::parse_double(field);
          if (!value || !std::isfinite(*value)) {
            throw ParseError(lineno, "non-numeric rating '" + std::string(field) + "'");
          }
          rec.rating = *value;
          break;
        }
        case Column::kTimestamp: {
          const auto value = text::parse_int<std::int64_t>(field);
          if (!value) throw ParseError(lineno, "non-integer timestamp '" + std::string(field) + "'");
          rec.timestamp = *value;
          break;
        }
        case Column::kIgnore:
          break;
      }
    }
    raw.records.push_back(std::move(rec));
  }
  return raw;
}

RawInteractions load_interactions_file(const std::string& path, const Format& format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return load_interactions(in, format);
}

std::optional<int> IdMap::user_index(const std::string& id) const {
  auto it = user_to_index.find(id);
  if (it == user_to_index.end()) return std::nullopt;
  return it->second;
}

std::optional<int> IdMap::item_index(const std::string& id) const {
  auto it = item_to_index.find(id);
  if (it == item_to_index.end()) return std::nullopt;
  return it->second;
}

int IdMap::intern_user(const std::string& id) {
  auto [it, inserted] = user_to_index.try_emplace(id, num_users());
  if (inserted) index_to_user.push_back(id);
  return it->second;
}

int IdMap::intern_item(const std::string& id) {
  auto [it, inserted] = item_to_index.try_emplace(id, num_items());
  if (inserted) index_to_item.push_back(id);
  return it->second;
}

void save_id_map(const IdMap& ids, std::ostream& out) {
  for (const auto& u : ids.index_to_user) out << "U\t" << u << '\n';
  for (const auto& i : ids.index_to_item) out << "I\t" << i << '\n';
}

IdMap load_id_map(std::istream& in) {
  IdMap ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.size() < 3 || line[1] != '\t' || (line[0] != 'U' && line[0] != 'I')) {
      throw ParseError(lineno, "bad id map line");
    }
    const std::string id = line.substr(2);
    if (line[0] == 'U') {
      if (ids.user_to_index.count(id)) throw ParseError(lineno, "duplicate user id '" + id + "'");
      ids.intern_user(id);
    } else {
      if (ids.item_to_index.count(id)) throw ParseError(lineno, "duplicate item id '" + id + "'");
      ids.intern_item(id);
    }
  }
  return ids;
}

InteractionMatrix::InteractionMatrix(int num_users, int num_items, std::vector<Entry> entries)
    : num_users_(num_users), num_items_(num_items), entries_(std::move(entries)) {
  if (num_users < 0 || num_items < 0) throw DataError("negative matrix dimension");
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  rows_.assign(static_cast<std::size_t>(num_users), {});
  cols_.assign(static_cast<std::size_t>(num_items), {});
  for (const auto& [u, i] : entries_) {
    if (u < 0 || u >= num_users || i < 0 || i >= num_items) {
      throw DataError("entry (" + std::to_string(u) + "," + std::to_string(i) + ") outside " +
                      std::to_string(num_users) + "x" + std::to_string(num_items));
    }
    rows_[static_cast<std::size_t>(u)].push_back(i);
    cols_[static_cast<std::size_t>(i)].push_back(u);
  }
  // entries_ is (u, i)-sorted, so rows are already sorted; columns see users in order too.
}

bool InteractionMatrix::contains(int u, int i) const {
  const auto& r = row(u);
  return std::binary_search(r.begin(), r.end(), i);
}

Eigen::VectorXd InteractionMatrix::row_view(int u) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_items_);
  for (int i : row(u)) v[i] = 1.0;
  return v;
}

Eigen::VectorXd InteractionMatrix::column_view(int i) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_users_);
  for (int u : column(i)) v[u] = 1.0;
  return v;
}

Eigen::MatrixXd InteractionMatrix::to_dense() const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(num_users_, num_items_);
  for (const auto& [u, i] : entries_) x(u, i) = 1.0;
  return x;
}

Eigen::MatrixXd InteractionMatrix::rows_as_columns(const std::vector<int>& users) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_items_, static_cast<Eigen::Index>(users.size()));
  for (std::size_t b = 0; b < users.size(); ++b) {
    for (int i : row(users[b])) out(i, static_cast<Eigen::Index>(b)) = 1.0;
  }
  return out;
}

Eigen::MatrixXd InteractionMatrix::columns_as_columns(const std::vector<int>& items) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_users_, static_cast<Eigen::Index>(items.size()));
  for (std::size_t b = 0; b < items.size(); ++b) {
    for (int u : column(items[b])) out(u, static_cast<Eigen::Index>(b)) = 1.0;
  }
  return out;
}

namespace {

Eigen::SparseMatrix<double> sparse_columns(Eigen::Index rows, const std::vector<int>& picks,
                                           const std::vector<std::vector<int>>& lists) {
  Eigen::SparseMatrix<double> out(rows, static_cast<Eigen::Index>(picks.size()));
  Eigen::VectorXi nnz(static_cast<Eigen::Index>(picks.size()));
  for (std::size_t b = 0; b < picks.size(); ++b) {
    nnz[static_cast<Eigen::Index>(b)] = static_cast<int>(lists.at(static_cast<std::size_t>(picks[b])).size());
  }
  out.reserve(nnz);
  for (std::size_t b = 0; b < picks.size(); ++b) {
    for (int r : lists[static_cast<std::size_t>(picks[b])]) out.insert(r, static_cast<Eigen::Index>(b)) = 1.0;
  }
  out.makeCompressed();
  return out;
}

}  // namespace

Eigen::SparseMatrix<double> InteractionMatrix::rows_as_sparse_columns(const std::vector<int>& users) const {
  return sparse_columns(num_items_, users, rows_);
}

Eigen::SparseMatrix<double> InteractionMatrix::columns_as_sparse_columns(const std::vector<int>& items) const {
  return sparse_columns(num_users_, items, cols_);
}

InteractionMatrix InteractionMatrix::transposed() const {
  std::vector<Entry> flipped;
  flipped.reserve(entries_.size());
  for (const auto& [u, i] : entries_) flipped.emplace_back(i, u);
  return InteractionMatrix(num_items_, num_users_, std::move(flipped));
}

BuiltMatrix build_matrix(const RawInteractions& raw) {
  if (raw.records.empty()) throw DataError("cannot build a matrix from zero interactions");
  BuiltMatrix out;
  std::vector<Entry> entries;
  entries.reserve(raw.records.size());
  for (const auto& rec : raw.records) {
    if (rec.user.empty() || rec.item.empty()) throw DataError("interaction with empty user or item id");
    const int u = out.ids.intern_user(rec.user);
    const int i = out.ids.intern_item(rec.item);
    entries.emplace_back(u, i);
  }
  out.matrix = InteractionMatrix(out.ids.num_users(), out.ids.num_items(), std::move(entries));
  return out;
}

SplitMode parse_split_mode(std::string_view name) {
  if (name == "global") return SplitMode::kGlobal;
  if (name == "per_user") return SplitMode::kPerUser;
  throw DataError("unknown split mode '" + std::string(name) + "' (expected global|per_user)");
}

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::kGlobal ? "global" : "per_user";
}

std::vector<std::vector<int>> SplitPair::test_by_user() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(train.num_users()));
  for (const auto& [u, i] : test) out[static_cast<std::size_t>(u)].push_back(i);
  return out;
}

namespace {

std::size_t holdout_count(std::size_t total, double ratio) {
  return static_cast<std::size_t>(std::llround((1.0 - ratio) * static_cast<double>(total)));
}

}  // namespace

SplitPair split_holdout(const InteractionMatrix& matrix, double ratio, std::uint64_t seed, SplitMode mode) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DataError("split ratio must lie in (0, 1), got " + text::format_double(ratio));
  }
  if (matrix.empty()) throw DataError("cannot split an empty matrix");

  Rng rng = make_rng(seed, RngStream::kSplit);
  std::vector<Entry> train;
  std::vector<Entry> test;

  auto partition = [&](std::vector<Entry> pool) {
    rng.shuffle(std::span<Entry>(pool));
    const std::size_t n_test = holdout_count(pool.size(), ratio);
    test.insert(test.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_test), pool.end());
  };

  if (mode == SplitMode::kGlobal) {
    partition(matrix.entries());
  } else {
    for (int u = 0; u < matrix.num_users(); ++u) {
      std::vector<Entry> pool;
      for (int i : matrix.row(u)) pool.emplace_back(u, i);
      partition(std::move(pool));
    }
  }

  std::sort(test.begin(), test.end());
  SplitPair out;
  out.train = InteractionMatrix(matrix.num_users(), matrix.num_items(), std::move(train));
  out.test = std::move(test);
  out.seed = seed;
  out.ratio = ratio;
  return out;
}

void persist_split(const SplitPair& split, std::ostream& out) {
  out << "m=" << split.train.num_users() << " n=" << split.train.num_items()
      << " ratio=" << text::format_double(split.ratio) << " seed=" << split.seed << '\n';
  // Merge train and test so the body is in (user, item) order.
  const auto& tr = split.train.entries();
  const auto& te = split.test;
  std::size_t a = 0;
  std::size_t b = 0;
  while (a < tr.size() || b < te.size()) {
    const bool take_train = b == te.size() || (a < tr.size() && tr[a] < te[b]);
    const Entry& e = take_train ? tr[a++] : te[b++];
    out << e.first << '\t' << e.second << '\t' << (take_train ? 'T' : 'E') << '\n';
  }
}

SplitPair load_split(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing split header");
  int m = -1;
  int n = -1;
  std::optional<double> ratio;
  std::optional<std::uint64_t> seed;
  for (auto tok : text::split_ws(line)) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw ParseError(1, "bad header token '" + std::string(tok) + "'");
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "m") {
      m = text::parse_int<int>(val).value_or(-1);
    } else if (key == "n") {
      n = text::parse_int<int>(val).value_or(-1);
    } else if (key == "ratio") {
      ratio = text::parse_double(val);
    } else if (key == "seed") {
      seed = text::parse_int<std::uint64_t>(val);
    } else {
      throw ParseError(1, "unknown header key '" + std::string(key) + "'");
    }
  }
  if (m < 0 || n < 0 || !ratio || !seed) throw ParseError(1, "incomplete split header");

  std::vector<Entry> train;
  std::vector<Entry> test;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = text::split(line, "\t");
    if (fields.size() != 3) throw ParseError(lineno, "expected <u>\\t<i>\\t<T|E>");
    const auto u = text::parse_int<int>(fields[0]);
    const auto i = text::parse_int<int>(fields[1]);
    if (!u || !i) throw ParseError(lineno, "non-integer index");
    if (*u < 0 || *u >= m || *i < 0 || *i >= n) {
      throw ParseError(lineno, "index (" + std::to_string(*u) + "," + std::to_string(*i) + ") out of range");
    }
    if (fields[2] == "T") {
      train.emplace_back(*u, *i);
    } else if (fields[2] == "E") {
      test.emplace_back(*u, *i);
    } else {
      throw ParseError(lineno, "unknown tag '" + std::string(fields[2]) + "'");
    }
  }
  std::sort(test.begin(), test.end());
  test.erase(std::unique(test.begin(), test.end()), test.end());

  SplitPair out;
  out.train = InteractionMatrix(m, n, std::move(train));
  for (const auto& [u, i] : test) {
    if (out.train.contains(u, i)) {
      throw DataError("split file lists (" + std::to_string(u) + "," + std::to_string(i) + ") as both T and E");
    }
  }
  out.test = std::move(test);
  out.ratio = *ratio;
  out.seed = *seed;
  return out;
}

void persist_split_file(const SplitPair& split, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file '" + path + "'");
  persist_split(split, out);
  if (!out) throw DataError("write failed for split file '" + path + "'");
}

SplitPair load_split_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file '" + path + "'");
  return load_split(in);
}

}  // namespace neurec::data
