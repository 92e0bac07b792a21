#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace neurec::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line; line numbers are 1-based.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Interaction {
  std::string user;
  std::string item;
  double rating = 1.0;
  std::optional<std::int64_t> timestamp;
};

struct RawInteractions {
  std::vector<Interaction> records;
};

enum class Delimiter { kTab, kComma, kColons, kWhitespace };

enum class Column { kUser, kItem, kRating, kTimestamp, kIgnore };

struct Format {
  Delimiter delimiter = Delimiter::kTab;
  std::vector<Column> columns{Column::kUser, Column::kItem, Column::kRating};
  std::size_t header_lines = 0;
};

// "tab", "comma", "colons" ("::"), "ws".
Delimiter parse_delimiter(std::string_view name);
// Comma-separated roles from {user, item, rating, ts, skip}; user and item required.
std::vector<Column> parse_columns(std::string_view spec);

RawInteractions load_interactions(std::istream& in, const Format& format);
RawInteractions load_interactions_file(const std::string& path, const Format& format);

struct IdMap {
  std::unordered_map<std::string, int> user_to_index;
  std::unordered_map<std::string, int> item_to_index;
  std::vector<std::string> index_to_user;
  std::vector<std::string> index_to_item;

  int num_users() const { return static_cast<int>(index_to_user.size()); }
  int num_items() const { return static_cast<int>(index_to_item.size()); }

  std::optional<int> user_index(const std::string& id) const;
  std::optional<int> item_index(const std::string& id) const;

  int intern_user(const std::string& id);
  int intern_item(const std::string& id);
};

// File layout: one line per id, "U\t<id>" or "I\t<id>", in dense index order.
void save_id_map(const IdMap& ids, std::ostream& out);
IdMap load_id_map(std::istream& in);

using Entry = std::pair<int, int>;  // (user, item)

// Binary implicit-feedback matrix. Rows and columns are kept as sorted index
// lists so that row and column views are both O(nnz) to materialize.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  // Entries may be unsorted and may repeat; duplicates collapse.
  InteractionMatrix(int num_users, int num_items, std::vector<Entry> entries);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Sorted by (user, item).
  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<int>& row(int u) const { return rows_.at(static_cast<std::size_t>(u)); }
  const std::vector<int>& column(int i) const { return cols_.at(static_cast<std::size_t>(i)); }

  bool contains(int u, int i) const;

  Eigen::VectorXd row_view(int u) const;
  Eigen::VectorXd column_view(int i) const;

  // Dense M x N copy; only sensible for small matrices.
  Eigen::MatrixXd to_dense() const;

  // Column b of the result is row_view(users[b]) (resp. column_view(items[b])).
  Eigen::MatrixXd rows_as_columns(const std::vector<int>& users) const;
  Eigen::MatrixXd columns_as_columns(const std::vector<int>& items) const;
  Eigen::SparseMatrix<double> rows_as_sparse_columns(const std::vector<int>& users) const;
  Eigen::SparseMatrix<double> columns_as_sparse_columns(const std::vector<int>& items) const;

  // Transposed matrix (items become rows).
  InteractionMatrix transposed() const;

  friend bool operator==(const InteractionMatrix& a, const InteractionMatrix& b) {
    return a.num_users_ == b.num_users_ && a.num_items_ == b.num_items_ && a.entries_ == b.entries_;
  }

 private:
  int num_users_ = 0;
  int num_items_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::vector<int>> rows_;
  std::vector<std::vector<int>> cols_;
};

struct BuiltMatrix {
  InteractionMatrix matrix;
  IdMap ids;
};

// Every distinct (user, item) pair becomes a 1 regardless of rating; ids are
// indexed in first-seen order.
BuiltMatrix build_matrix(const RawInteractions& raw);

enum class SplitMode { kGlobal, kPerUser };

SplitMode parse_split_mode(std::string_view name);
std::string_view to_string(SplitMode mode);

struct SplitPair {
  InteractionMatrix train;
  std::vector<Entry> test;  // sorted by (user, item)
  std::uint64_t seed = 0;
  double ratio = 0.8;

  // Test items per user, indexed by user.
  std::vector<std::vector<int>> test_by_user() const;

  friend bool operator==(const SplitPair& a, const SplitPair& b) {
    return a.train == b.train && a.test == b.test && a.seed == b.seed && a.ratio == b.ratio;
  }
};

// Keeps `ratio` of the entries for training. Global mode holds out
// round((1 - ratio) * nnz) pairs drawn uniformly over the whole matrix;
// per-user mode applies the same rule to each user's row.
SplitPair split_holdout(const InteractionMatrix& matrix, double ratio, std::uint64_t seed,
                        SplitMode mode = SplitMode::kGlobal);

// Header "m=<M> n=<N> ratio=<r> seed=<s>", then "<u>\t<i>\t<T|E>" per entry.
void persist_split(const SplitPair& split, std::ostream& out);
SplitPair load_split(std::istream& in);

void persist_split_file(const SplitPair& split, const std::string& path);
SplitPair load_split_file(const std::string& path);

}  // namespace neurec::data
