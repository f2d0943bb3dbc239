#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "skillsim/evalkit.hpp"
#include "skillsim/rng.hpp"

#include "support/oracles.hpp"

using namespace skillsim;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("average precision fixtures") {
  CHECK(average_precision({"d1", "d2", "d3"}, {"d1", "d3"}) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
  CHECK(average_precision({"d1", "d2", "d3"}, {"d1", "d2"}) ==
        doctest::Approx(1.0));
  // Single relevant doc at the last of n ranks.
  CHECK(average_precision({"a", "b", "c", "d"}, {"d"}) ==
        doctest::Approx(0.25));
  // Unretrieved relevant docs contribute zero.
  CHECK(average_precision({"d1"}, {"d1", "dx"}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(average_precision({"d1"}, {}), std::runtime_error);
}

TEST_CASE("precision at k uses k as the denominator") {
  CHECK(precision_at_k({"r1", "x", "r2"}, {"r1", "r2"}, 5) ==
        doctest::Approx(0.4));
  CHECK(precision_at_k({"r1", "r2"}, {"r1", "r2"}, 2) == doctest::Approx(1.0));
  CHECK(precision_at_k({"x", "y"}, {"r"}, 5) == doctest::Approx(0.0));
}

TEST_CASE("reciprocal rank") {
  CHECK(reciprocal_rank({"x", "y", "r"}, {"r"}) == doctest::Approx(1.0 / 3.0));
  CHECK(reciprocal_rank({"r"}, {"r"}) == doctest::Approx(1.0));
  CHECK(reciprocal_rank({"x"}, {"r"}) == doctest::Approx(0.0));
}

TEST_CASE("metrics match the definitional oracle on 1000 random instances") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    std::size_t n_docs = 1 + rng.next_below(30);
    std::vector<std::string> pool;
    for (std::size_t d = 0; d < n_docs; ++d) {
      pool.push_back("d" + std::to_string(d));
    }
    std::set<std::string> relevant;
    std::size_t n_rel = 1 + rng.next_below(n_docs);
    while (relevant.size() < n_rel) {
      relevant.insert(pool[rng.next_below(pool.size())]);
    }
    std::vector<std::string> ranked = pool;
    shuffle(ranked, rng);
    ranked.resize(1 + rng.next_below(ranked.size()));

    CHECK(average_precision(ranked, relevant) ==
          oracles::ap_from_definition(ranked, relevant));
    std::size_t k = 1 + rng.next_below(25);
    CHECK(precision_at_k(ranked, relevant, k) ==
          oracles::p_at_k_from_definition(ranked, relevant, k));
    CHECK(reciprocal_rank(ranked, relevant) ==
          oracles::rr_from_definition(ranked, relevant));
  }
}

TEST_CASE("evaluate_run on a hand-derived two-query fixture") {
  // q1: ranked [a, b, c], relevant {a, c} -> AP 0.8333..., RR 1, P@5 0.4
  // q2: ranked [x, y], relevant {y} -> AP 0.5, RR 0.5, P@5 0.2
  RunFile run;
  run.tag = "fixture";
  run.add(make_ranked_list("q1",
                           {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}}, 0));
  run.add(make_ranked_list("q2", {{"x", 0.9}, {"y", 0.8}}, 0));
  QrelsSet qrels;
  for (const char* d : {"a", "b", "c"}) qrels.judged["q1"].insert(d);
  for (const char* d : {"x", "y"}) qrels.judged["q2"].insert(d);
  qrels.relevant["q1"] = {"a", "c"};
  qrels.relevant["q2"] = {"y"};

  MetricsReport report = evaluate_run(run, qrels);
  CHECK(report.query_count == 2);
  double q1_ap = (1.0 + 2.0 / 3.0) / 2.0;
  CHECK(report.per_query.at("q1").ap == doctest::Approx(q1_ap).epsilon(1e-9));
  CHECK(report.per_query.at("q2").ap == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(report.mean.ap == doctest::Approx((q1_ap + 0.5) / 2).epsilon(1e-9));
  CHECK(report.mean.rr == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(report.mean.p5 == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("perfect rankings score map 1.0") {
  RunFile run;
  run.add(make_ranked_list("q", {{"a", 0.9}, {"b", 0.8}}, 0));
  QrelsSet qrels;
  qrels.judged["q"] = {"a", "b"};
  qrels.relevant["q"] = {"a", "b"};
  CHECK(evaluate_run(run, qrels).mean.ap == doctest::Approx(1.0));
}

TEST_CASE("judged query missing from the run contributes zero") {
  RunFile run;
  run.add(make_ranked_list("q1", {{"a", 1.0}}, 0));
  QrelsSet qrels;
  qrels.judged["q1"] = {"a"};
  qrels.relevant["q1"] = {"a"};
  qrels.judged["q2"] = {"a"};
  qrels.relevant["q2"] = {"a"};
  MetricsReport report = evaluate_run(run, qrels);
  CHECK(report.query_count == 2);
  CHECK(report.mean.ap == doctest::Approx(0.5));
}

TEST_CASE("queries without relevant docs are excluded and listed") {
  RunFile run;
  run.add(make_ranked_list("q1", {{"a", 1.0}}, 0));
  run.add(make_ranked_list("q2", {{"a", 1.0}}, 0));
  QrelsSet qrels;
  qrels.judged["q1"] = {"a"};
  qrels.relevant["q1"] = {"a"};
  qrels.judged["q2"] = {"a"};  // judged, nothing relevant
  MetricsReport report = evaluate_run(run, qrels);
  CHECK(report.query_count == 1);
  REQUIRE(report.excluded_queries.size() == 1);
  CHECK(report.excluded_queries[0] == "q2");
  CHECK(report.mean.ap == doctest::Approx(1.0));
}

TEST_CASE("a doc ranked twice for one query is an error") {
  std::vector<ScoredDoc> docs = {{"a", 1.0}, {"a", 0.5}};
  RunFile run;
  CHECK_THROWS_WITH_AS(run.add({"q", docs}), doctest::Contains("twice"),
                       std::runtime_error);
}

TEST_CASE("unjudged run query is an error") {
  RunFile run;
  run.add(make_ranked_list("mystery", {{"a", 1.0}}, 0));
  QrelsSet qrels;
  qrels.judged["other"] = {"a"};
  qrels.relevant["other"] = {"a"};
  CHECK_THROWS_AS(evaluate_run(run, qrels), std::runtime_error);
}

TEST_CASE("qrels text format round trip") {
  std::string path = temp_path("skillsim_test_qrels.txt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "q1 0 d7 1\n";
    out << "q1 0 d8 0\n";
    out << "q2 0 d7 0\n";
  }
  QrelsSet qrels = QrelsSet::read(path);
  CHECK(qrels.relevant.at("q1") == std::set<std::string>{"d7"});
  CHECK(qrels.judged.at("q1").size() == 2);
  CHECK(qrels.relevant.count("q2") == 0);

  std::string copy = temp_path("skillsim_test_qrels2.txt");
  qrels.write(copy);
  QrelsSet reread = QrelsSet::read(copy);
  CHECK(reread.judged == qrels.judged);
  CHECK(reread.relevant == qrels.relevant);
}

TEST_CASE("qrels parse errors carry line numbers") {
  std::string path = temp_path("skillsim_test_qrels_bad.txt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "q1 0 d7 1\n";
    out << "q1 d7 1\n";
  }
  CHECK_THROWS_WITH_AS(QrelsSet::read(path), doctest::Contains(":2"),
                       std::runtime_error);
}

TEST_CASE("run file round trip and line-order invariance") {
  std::string path = temp_path("skillsim_test_run.txt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "q1 Q0 d7 1 0.923 skillsim\n";
    out << "q1 Q0 d9 2 0.413 skillsim\n";
  }
  RunFile run = RunFile::read(path);
  CHECK(run.tag == "skillsim");
  REQUIRE(run.queries.at("q1").items.size() == 2);
  CHECK(run.queries.at("q1").items[0].doc_id == "d7");

  std::string copy = temp_path("skillsim_test_run2.txt");
  run.write(copy);
  RunFile reread = RunFile::read(copy);
  CHECK(reread.queries.at("q1").items[0].doc_id == "d7");
  CHECK(reread.queries.at("q1").items[0].score == doctest::Approx(0.923));

  // Reversed file order must produce the same ranking.
  std::string reversed = temp_path("skillsim_test_run3.txt");
  {
    std::ofstream out(reversed, std::ios::binary);
    out << "q1 Q0 d9 2 0.413 skillsim\n";
    out << "q1 Q0 d7 1 0.923 skillsim\n";
  }
  RunFile rerun = RunFile::read(reversed);
  CHECK(rerun.queries.at("q1").items[0].doc_id == "d7");
}

TEST_CASE("run file rejects malformed lines with line numbers") {
  std::string path = temp_path("skillsim_test_run_bad.txt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "q1 Q0 d7\n";
  }
  CHECK_THROWS_WITH_AS(RunFile::read(path), doctest::Contains(":1"),
                       std::runtime_error);
}

TEST_CASE("metrics report json is written") {
  RunFile run;
  run.add(make_ranked_list("q", {{"a", 1.0}}, 0));
  QrelsSet qrels;
  qrels.judged["q"] = {"a"};
  qrels.relevant["q"] = {"a"};
  std::string path = temp_path("skillsim_test_metrics.json");
  evaluate_run(run, qrels).write_json(path);
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("\"map\"") != std::string::npos);
}
