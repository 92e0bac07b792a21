#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "fixtures.hpp"

#ifndef NEUREC_CLI_PATH
#error "NEUREC_CLI_PATH must point at the neurec binary"
#endif

namespace {

struct Outcome {
  int status = 0;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(NEUREC_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) o.out += buf.data();
  const int st = pclose(pipe);
  o.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

}  // namespace

TEST_CASE("split, train, evaluate, recommend, report") {
  fixture::TempDir tmp("cli");
  fixture::write_dataset(fixture::clustered(25, 20, 3, 0.35, 0.05, 2), tmp.file("data.txt"));
  const std::string common = " --dataset " + tmp.file("data.txt");
  const std::string net = " --model u_neurec --hidden_layers 1 --width 8 --k 4 --epochs 3 --learning_rate 0.01";

  auto s = run("split" + common + " --seed 3 --out " + tmp.file("split.tsv"));
  REQUIRE(s.status == 0);
  CHECK(s.out.find("users=25") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.file("ids.tsv")));

  auto t = run("train --split " + tmp.file("split.tsv") + " --out " + tmp.file("model.txt") + net);
  REQUIRE(t.status == 0);
  CHECK(t.out.find("parameters=") == 0);

  auto e = run("evaluate --model " + tmp.file("model.txt") + " --split " + tmp.file("split.tsv") + " --out " +
               tmp.file("report.json") + " --csv " + tmp.file("row.csv"));
  REQUIRE(e.status == 0);
  CHECK(e.out.find("P@5=") != std::string::npos);
  CHECK(fixture::slurp(tmp.file("row.csv")).rfind("P@5,P@10,R@5,R@10,MAP,MRR,NDCG\n", 0) == 0);

  auto r = run("recommend --model " + tmp.file("model.txt") + " --split " + tmp.file("split.tsv") + " --user u3 -n 4");
  REQUIRE(r.status == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);

  auto bad_user = run("recommend --model " + tmp.file("model.txt") + " --split " + tmp.file("split.tsv") + " --user nobody");
  CHECK(bad_user.status == 1);
  CHECK(bad_user.out.find("unknown user id 'nobody'") != std::string::npos);

  auto full = run("run" + common + net + " --seeds 1,2 --output_dir " + tmp.file("out"));
  REQUIRE(full.status == 0);
  CHECK(full.out == fixture::slurp(tmp.file("out/summary.csv")));

  auto again = run("report --result " + tmp.file("out/result.json") + " --format csv");
  CHECK(again.status == 0);
  CHECK(again.out == full.out);

  // `run` keeps ids.tsv one level above each split.
  auto rec2 = run("recommend --model " + tmp.file("out/seed-1/model.txt") + " --split " +
                  tmp.file("out/seed-1/split.tsv") + " --user u0 -n 2");
  CHECK(rec2.status == 0);

  auto sw = run("sweep" + common + net + " --seeds 1 --param width --values 4,6");
  CHECK(sw.status == 0);
  CHECK(sw.out.find("neuron_width,6,") != std::string::npos);
}

TEST_CASE("output directories are created") {
  fixture::TempDir tmp("cli_dirs");
  fixture::write_dataset(fixture::clustered(12, 10, 2, 0.4, 0.05, 4), tmp.file("data.txt"));
  REQUIRE(run("split --dataset " + tmp.file("data.txt") + " --out " + tmp.file("a/b/split.tsv")).status == 0);
  CHECK(std::filesystem::exists(tmp.file("a/b/ids.tsv")));
  REQUIRE(run("train --split " + tmp.file("a/b/split.tsv") + " --out " + tmp.file("m/model.txt") +
              " --model mostpop").status == 0);
  CHECK(run("evaluate --model " + tmp.file("m/model.txt") + " --split " + tmp.file("a/b/split.tsv") + " --out " +
            tmp.file("r/report.json")).status == 0);
  CHECK(std::filesystem::exists(tmp.file("r/report.json")));
}

TEST_CASE("bad arguments fail with a message") {
  auto unknown = run("run --dataset x --epohcs 3");
  CHECK(unknown.status == 1);
  CHECK(unknown.out.find("unknown config key 'epohcs'") != std::string::npos);
  CHECK(run("run --dataset /nonexistent/file").status == 1);
  CHECK(run("frobnicate").status != 0);
  CHECK(run("split --out /tmp/x.tsv").status == 1);
}
