#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "skillsim/baselines.hpp"
#include "skillsim/synth_bench.hpp"
#include "skillsim/text.hpp"

using namespace skillsim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

SyntheticBenchConfig small_config() {
  SyntheticBenchConfig config;
  config.n_clusters = 4;
  config.titles_per_cluster = 6;
  config.skills_per_cluster = 8;
  config.shared_skill_noise_rate = 0.0;
  config.filler_vocab_size = 40;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("cardinalities follow the configuration") {
  SyntheticBenchConfig config;
  config.n_clusters = 10;
  config.titles_per_cluster = 20;
  config.skills_per_cluster = 20;
  config.shared_skill_noise_rate = 0.1;
  config.seed = 42;
  SyntheticBench bench = generate_synthetic_benchmark(config);
  CHECK(bench.postings.size() == 200);
  CHECK(bench.corpus.size() == 200);
  CHECK(bench.queries.size() == 200);
  CHECK(bench.vocab_lines.size() == 200);
  for (const auto& [query, judged] : bench.qrels.judged) {
    CHECK(judged.size() == 200);
    CHECK(bench.qrels.relevant.at(query).size() == 20);
  }
}

TEST_CASE("doc ids are unique single-field keys") {
  SyntheticBench bench = generate_synthetic_benchmark(small_config());
  std::set<std::string> ids;
  for (const PostingRecord& rec : bench.postings) {
    CHECK(ids.insert(rec.id).second);
    CHECK(rec.id == bench_doc_id(normalize_title(rec.title)));
    CHECK(rec.id.find(' ') == std::string::npos);
  }
}

TEST_CASE("zero noise keeps descriptions within their own cluster") {
  SyntheticBench bench = generate_synthetic_benchmark(small_config());
  SkillVocabulary vocab =
      SkillVocabulary::from_lines(bench.vocab_lines, "<bench>");
  SkillExtractor extractor(vocab);
  for (const PostingRecord& rec : bench.postings) {
    std::uint32_t cluster = bench.cluster_of.at(rec.id);
    const auto& own = bench.cluster_skills[cluster];
    for (const std::string& skill : extractor.extract(rec.description)) {
      CHECK(std::find(own.begin(), own.end(), skill) != own.end());
    }
  }
}

TEST_CASE("every description yields at least three skills") {
  SyntheticBench bench = generate_synthetic_benchmark(small_config());
  SkillVocabulary vocab =
      SkillVocabulary::from_lines(bench.vocab_lines, "<bench>");
  SkillExtractor extractor(vocab);
  for (const PostingRecord& rec : bench.postings) {
    CHECK(extractor.extract(rec.description).size() >= 3);
  }
}

TEST_CASE("same seed regenerates byte-identical files") {
  std::string dir_a =
      (std::filesystem::temp_directory_path() / "skillsim_bench_a").string();
  std::string dir_b =
      (std::filesystem::temp_directory_path() / "skillsim_bench_b").string();
  SyntheticBenchConfig config = small_config();
  write_synthetic_benchmark(generate_synthetic_benchmark(config), dir_a);
  write_synthetic_benchmark(generate_synthetic_benchmark(config), dir_b);
  for (const char* name : {"skills.tsv", "postings.jsonl", "corpus.tsv",
                           "queries.tsv", "qrels.txt", "clusters.json"}) {
    CHECK(slurp(dir_a + "/" + name) == slurp(dir_b + "/" + name));
  }

  config.seed = 8;
  std::string dir_c =
      (std::filesystem::temp_directory_path() / "skillsim_bench_c").string();
  write_synthetic_benchmark(generate_synthetic_benchmark(config), dir_c);
  CHECK(slurp(dir_a + "/postings.jsonl") != slurp(dir_c + "/postings.jsonl"));
}

TEST_CASE("gold-skill tfidf retrieval is perfect at zero noise") {
  SyntheticBench bench = generate_synthetic_benchmark(small_config());

  // Gold standard: each title represented by its cluster's full skill set.
  std::vector<MergedRecord> merged;
  for (const auto& [doc, cluster] : bench.cluster_of) {
    MergedRecord rec;
    rec.title_key = doc;
    rec.support = 1;
    for (const std::string& skill : bench.cluster_skills[cluster]) {
      rec.skill_counts[skill] = 1;
    }
    merged.push_back(rec);
  }
  SkillStats stats = SkillStats::build(merged);

  RunFile run;
  run.tag = "gold-tfidf";
  for (const MergedRecord& query : merged) {
    TfidfVector qvec = tfidf_vector(query.skill_counts, stats);
    std::vector<ScoredDoc> scored;
    for (const MergedRecord& doc : merged) {
      scored.push_back(
          {doc.title_key,
           tfidf_cosine(qvec, tfidf_vector(doc.skill_counts, stats))});
    }
    run.add(make_ranked_list(query.title_key, std::move(scored), 0));
  }
  MetricsReport report = evaluate_run(run, bench.qrels);
  CHECK(report.mean.ap == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
  SyntheticBenchConfig config = small_config();
  config.n_clusters = 0;
  CHECK_THROWS_AS(generate_synthetic_benchmark(config), std::runtime_error);
  config = small_config();
  config.shared_skill_noise_rate = 1.5;
  CHECK_THROWS_AS(generate_synthetic_benchmark(config), std::runtime_error);
}
