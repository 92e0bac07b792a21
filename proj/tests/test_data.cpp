#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "neurec/data.hpp"

using namespace neurec::data;

namespace {

RawInteractions parse(const std::string& body, const Format& f) {
  std::istringstream in(body);
  return load_interactions(in, f);
}

}  // namespace

TEST_CASE("colon-separated line with timestamp") {
  Format f{Delimiter::kColons, parse_columns("user,item,rating,ts"), 0};
  const auto raw = parse("1::32::4::978824330\n", f);
  REQUIRE(raw.records.size() == 1);
  CHECK(raw.records[0].user == "1");
  CHECK(raw.records[0].item == "32");
  CHECK(raw.records[0].rating == 4.0);
  CHECK(*raw.records[0].timestamp == 978824330);
}

TEST_CASE("empty input loads zero records") {
  CHECK(parse("", Format{}).records.empty());
  CHECK(parse("\n\n", Format{}).records.empty());
}

TEST_CASE("malformed line reports its line number") {
  Format f{Delimiter::kTab, parse_columns("user,item,rating"), 0};
  try {
    parse("a\tx\t1\nb\tonlytwo\nc\tz\t1\n", f);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("a\tx\tgood\n", f), ParseError);
}

TEST_CASE("header lines and comma/ws delimiters") {
  Format f{Delimiter::kComma, parse_columns("user,item,skip"), 1};
  const auto raw = parse("userId,movieId,rating\n7,9,3.5\n", f);
  REQUIRE(raw.records.size() == 1);
  CHECK(raw.records[0].item == "9");
  Format ws{Delimiter::kWhitespace, parse_columns("user,item"), 0};
  CHECK(parse("a   b\n c\td \n", ws).records.size() == 2);
}

TEST_CASE("bad format specs") {
  CHECK_THROWS_AS(parse_delimiter("semicolon"), DataError);
  CHECK_THROWS_AS(parse_columns("user,rating"), DataError);
  CHECK_THROWS_AS(parse_columns("user,item,stars"), DataError);
  CHECK_THROWS_AS(parse_columns("user,user,item"), DataError);
}

TEST_CASE("binarize: first-seen ids, duplicates collapse, any rating counts") {
  RawInteractions raw;
  raw.records = {{"a", "x", 5, {}}, {"a", "y", 1, {}}, {"b", "x", 3, {}}, {"a", "x", 0.5, {}}};
  const auto built = build_matrix(raw);
  CHECK(built.matrix.num_users() == 2);
  CHECK(built.matrix.num_items() == 2);
  CHECK(built.matrix.entries() == std::vector<Entry>{{0, 0}, {0, 1}, {1, 0}});
  CHECK(*built.ids.user_index("b") == 1);
  CHECK(*built.ids.item_index("y") == 1);
  CHECK_FALSE(built.ids.user_index("zz").has_value());
  CHECK_THROWS_AS(build_matrix(RawInteractions{}), DataError);
}

TEST_CASE("row, column and dense views agree") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto m = fixture::random_matrix(9, 13, 0.3, s);
    const auto dense = m.to_dense();
    for (int u = 0; u < m.num_users(); ++u) {
      CHECK(m.row_view(u) == Eigen::VectorXd(dense.row(u).transpose()));
      for (int i : m.row(u)) CHECK(m.contains(u, i));
    }
    for (int i = 0; i < m.num_items(); ++i) CHECK(m.column_view(i) == dense.col(i));
    CHECK(m.transposed().to_dense() == dense.transpose());
    CHECK(m.transposed().transposed() == m);
    CHECK(m.rows_as_columns({2, 0}).col(1) == m.row_view(0));
    CHECK(m.columns_as_columns({5}).col(0) == m.column_view(5));
  }
}

TEST_CASE("out-of-range entries are rejected") {
  CHECK_THROWS_AS(InteractionMatrix(2, 2, {{0, 2}}), DataError);
  CHECK_THROWS_AS(InteractionMatrix(2, 2, {{-1, 0}}), DataError);
}

TEST_CASE("global split: counts, disjointness, union") {
  const auto m = fixture::random_matrix(40, 30, 0.2, 11);
  std::set<std::vector<Entry>> distinct;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = split_holdout(m, 0.8, seed);
    const auto want_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(m.nnz())));
    CHECK(s.test.size() == want_test);
    CHECK(s.train.nnz() + s.test.size() == m.nnz());
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));
    std::vector<Entry> all = s.train.entries();
    for (const auto& e : s.test) CHECK_FALSE(s.train.contains(e.first, e.second));
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    CHECK(all == m.entries());
    CHECK(s.train.num_users() == m.num_users());
    CHECK(s.train.num_items() == m.num_items());
    distinct.insert(s.test);
    CHECK(split_holdout(m, 0.8, seed) == s);
  }
  CHECK(distinct.size() == 5);
}

TEST_CASE("ten entries split 8/2") {
  std::vector<Entry> e;
  for (int i = 0; i < 10; ++i) e.emplace_back(i % 3, i);
  const InteractionMatrix m(3, 10, e);
  const auto s = split_holdout(m, 0.8, 42);
  CHECK(s.train.nnz() == 8);
  CHECK(s.test.size() == 2);
}

TEST_CASE("per-user split holds out per row") {
  const auto m = fixture::random_matrix(20, 25, 0.4, 3);
  const auto s = split_holdout(m, 0.8, 9, SplitMode::kPerUser);
  const auto by_user = s.test_by_user();
  for (int u = 0; u < m.num_users(); ++u) {
    const auto n = m.row(u).size();
    CHECK(by_user[static_cast<std::size_t>(u)].size() ==
          static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
    CHECK(s.train.row(u).size() + by_user[static_cast<std::size_t>(u)].size() == n);
  }
  CHECK(parse_split_mode("per_user") == SplitMode::kPerUser);
  CHECK_THROWS_AS(parse_split_mode("leave_one_out"), DataError);
}

TEST_CASE("split argument errors") {
  const auto m = fixture::random_matrix(5, 5, 0.5, 1);
  CHECK_THROWS_AS(split_holdout(m, 1.0, 1), DataError);
  CHECK_THROWS_AS(split_holdout(m, 0.0, 1), DataError);
  CHECK_THROWS_AS(split_holdout(InteractionMatrix(3, 3, {}), 0.8, 1), DataError);
}

TEST_CASE("persisted splits load back identically") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = fixture::random_matrix(15, 12, 0.3, seed + 100);
    const auto s = split_holdout(m, 0.8, seed);
    std::stringstream io;
    persist_split(s, io);
    const auto back = load_split(io);
    CHECK(back == s);
  }
}

TEST_CASE("corrupt split files") {
  auto load = [](const std::string& body) {
    std::istringstream in(body);
    return load_split(in);
  };
  CHECK_NOTHROW(load("m=2 n=2 ratio=0.8 seed=1\n0\t0\tT\n1\t1\tE\n"));
  CHECK_THROWS_AS(load("m=2 n=2 ratio=0.8 seed=1\n0\t2\tT\n"), ParseError);
  CHECK_THROWS_AS(load("m=2 n=2 ratio=0.8 seed=1\n0\t1\tX\n"), ParseError);
  CHECK_THROWS_AS(load("m=2 n=2 ratio=0.8 seed=1 extra=3\n"), ParseError);
  CHECK_THROWS_AS(load(""), ParseError);
  CHECK_THROWS_AS(load("m=2 n=2 ratio=0.8 seed=1\n0\t1\tT\n0\t1\tE\n"), DataError);
}

TEST_CASE("id map round trip") {
  IdMap ids;
  ids.intern_user("alice");
  ids.intern_user("bob");
  ids.intern_item("x y");
  CHECK(ids.intern_user("alice") == 0);
  std::stringstream io;
  save_id_map(ids, io);
  const auto back = load_id_map(io);
  CHECK(back.index_to_user == ids.index_to_user);
  CHECK(back.index_to_item == ids.index_to_item);
  CHECK(*back.item_index("x y") == 0);
}
