#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "skillsim/ranking.hpp"
#include "skillsim/synth_bench.hpp"

#include "support/oracles.hpp"

using namespace skillsim;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

VectorIndex random_index(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  VectorIndex index(dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> vec(dim);
    double norm = 0;
    for (float& v : vec) {
      v = static_cast<float>(rng.next_double() * 2 - 1);
      norm += static_cast<double>(v) * v;
    }
    norm = std::sqrt(norm);
    for (float& v : vec) v = static_cast<float>(v / norm);
    index.add("doc" + std::to_string(i), std::move(vec));
  }
  return index;
}

EncoderModel tiny_model(std::uint32_t dim, std::uint64_t seed) {
  AuxDataset aux;
  aux.dim = dim;
  Rng rng(seed);
  const char* titles[] = {"analyst", "engineer", "nurse", "driver",
                          "chef",    "teacher",  "clerk", "pilot"};
  for (const char* t : titles) {
    std::vector<float> vec(dim);
    double norm = 0;
    for (float& v : vec) {
      v = static_cast<float>(rng.next_double() * 2 - 1);
      norm += static_cast<double>(v) * v;
    }
    norm = std::sqrt(norm);
    for (float& v : vec) v = static_cast<float>(v / norm);
    aux.pairs.emplace_back(t, std::move(vec));
  }
  EncoderConfig config;
  config.arch = EncoderArch::kBagOfSubwords;
  config.token_dim = 12;
  config.output_dim = dim;
  config.epochs = 4;
  config.batch_size = 4;
  config.tokenizer_vocab = 280;
  config.seed = seed;
  return train_encoder(aux, config);
}

}  // namespace

TEST_CASE("rank on an orthogonal pair") {
  VectorIndex index(2);
  index.add("a", {1.0f, 0.0f});
  index.add("b", {0.0f, 1.0f});
  RankedList list = index.rank({1.0f, 0.0f}, 0, "q");
  REQUIRE(list.items.size() == 2);
  CHECK(list.items[0].doc_id == "a");
  CHECK(list.items[0].score == doctest::Approx(1.0));
  CHECK(list.items[1].doc_id == "b");
  CHECK(list.items[1].score == doctest::Approx(0.0));
}

TEST_CASE("ties break by ascending doc id") {
  VectorIndex index(2);
  index.add("zeta", {1.0f, 0.0f});
  index.add("alpha", {1.0f, 0.0f});
  RankedList list = index.rank({1.0f, 0.0f}, 0);
  CHECK(list.items[0].doc_id == "alpha");
  CHECK(list.items[1].doc_id == "zeta");
}

TEST_CASE("duplicate doc ids are rejected") {
  VectorIndex index(2);
  index.add("a", {1.0f, 0.0f});
  CHECK_THROWS_WITH_AS(index.add("a", {0.0f, 1.0f}),
                       doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("dimension mismatches are rejected") {
  VectorIndex index(2);
  index.add("a", {1.0f, 0.0f});
  CHECK_THROWS_AS(index.rank({1.0f, 0.0f, 0.0f}, 0), std::runtime_error);
  CHECK_THROWS_AS(index.add("b", {1.0f, 0.0f, 0.0f}), std::runtime_error);
}

TEST_CASE("top-k equals the naive full sort on a random index") {
  VectorIndex index = random_index(50, 8, 21);
  Rng rng(5);
  std::vector<float> query(8);
  double norm = 0;
  for (float& v : query) {
    v = static_cast<float>(rng.next_double() * 2 - 1);
    norm += static_cast<double>(v) * v;
  }
  norm = std::sqrt(norm);
  for (float& v : query) v = static_cast<float>(v / norm);

  // Oracle: full scoring plus stable sort by the documented tie rule.
  std::vector<std::pair<double, std::string>> scored;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const float* v = index.vector_of(i);
    double dot = 0;
    for (std::uint32_t d = 0; d < 8; ++d) {
      dot += static_cast<double>(v[d]) * query[d];
    }
    scored.emplace_back(dot, index.ids()[i]);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  RankedList top10 = index.rank(query, 10);
  REQUIRE(top10.items.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(top10.items[i].doc_id == scored[i].second);
    CHECK(top10.items[i].score == doctest::Approx(scored[i].first));
  }

  // rank(all) truncated to k equals rank(k) for every k.
  RankedList all = index.rank(query, 0);
  for (std::size_t k = 1; k <= index.size(); k += 7) {
    RankedList topk = index.rank(query, k);
    REQUIRE(topk.items.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(topk.items[i].doc_id == all.items[i].doc_id);
      CHECK(topk.items[i].score == all.items[i].score);
    }
  }
}

TEST_CASE("scores stay within [-1, 1] for unit vectors") {
  VectorIndex index = random_index(40, 6, 3);
  Rng rng(4);
  for (int q = 0; q < 20; ++q) {
    std::vector<float> query(6);
    double norm = 0;
    for (float& v : query) {
      v = static_cast<float>(rng.next_double() * 2 - 1);
      norm += static_cast<double>(v) * v;
    }
    norm = std::sqrt(norm);
    for (float& v : query) v = static_cast<float>(v / norm);
    for (const ScoredDoc& doc : index.rank(query, 0).items) {
      CHECK(doc.score <= 1.0 + 1e-6);
      CHECK(doc.score >= -1.0 - 1e-6);
    }
  }
}

TEST_CASE("index content is independent of corpus order") {
  EncoderModel model = tiny_model(8, 11);
  std::vector<std::pair<std::string, std::string>> corpus = {
      {"a", "analyst"}, {"b", "engineer"}, {"c", "nurse"}, {"d", "pilot"}};
  VectorIndex first = VectorIndex::build(corpus, model);
  std::reverse(corpus.begin(), corpus.end());
  VectorIndex second = VectorIndex::build(corpus, model);
  REQUIRE(first.ids() == second.ids());
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::uint32_t d = 0; d < 8; ++d) {
      CHECK(first.vector_of(i)[d] == second.vector_of(i)[d]);
    }
  }
}

TEST_CASE("empty-normalizing titles are skipped and counted") {
  EncoderModel model = tiny_model(8, 11);
  std::uint64_t skipped = 0;
  VectorIndex index = VectorIndex::build(
      {{"a", "analyst"}, {"b", "!!!"}, {"c", "nurse"}}, model, &skipped);
  CHECK(index.size() == 2);
  CHECK(skipped == 1);
}

TEST_CASE("normalize_job returns the textual match first with score 1") {
  EncoderModel model = tiny_model(8, 13);
  std::vector<std::pair<std::string, std::string>> titles = {
      {"n1", "analyst"}, {"n2", "engineer"}, {"n3", "nurse"}};
  RankedList list = normalize_job(model, titles, "Engineer", 3);
  REQUIRE(!list.items.empty());
  CHECK(list.items[0].doc_id == "n2");
  CHECK(list.items[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("normalize_job truncates to the candidate set size") {
  EncoderModel model = tiny_model(8, 13);
  RankedList list = normalize_job(model, {{"only", "analyst"}}, "nurse", 10);
  CHECK(list.items.size() == 1);
}

TEST_CASE("normalize_job equals the rank/build composition") {
  EncoderModel model = tiny_model(8, 17);
  std::vector<std::pair<std::string, std::string>> titles = {
      {"n1", "analyst"}, {"n2", "engineer"}, {"n3", "nurse"},
      {"n4", "driver"},  {"n5", "chef"}};
  VectorIndex index = VectorIndex::build(titles, model);
  for (const char* raw : {"senior analyst", "nurse", "truck driver"}) {
    RankedList direct = normalize_job(model, titles, raw, 5);
    RankedList composed = index.rank(model.encode(raw), 5, raw);
    REQUIRE(direct.items.size() == composed.items.size());
    for (std::size_t i = 0; i < direct.items.size(); ++i) {
      CHECK(direct.items[i].doc_id == composed.items[i].doc_id);
      CHECK(direct.items[i].score == composed.items[i].score);
    }
  }
}

TEST_CASE("predict_skills ranks by cosine and truncates") {
  EncoderModel model = tiny_model(4, 19);
  AuxModel aux;
  aux.config.dim = 4;
  aux.noise.skills = {"alpha", "beta", "gamma", "zero"};
  aux.noise.weights = {1, 1, 1, 1};
  aux.noise.cumulative = {1, 2, 3, 4};
  aux.skill_out = Matrix<float>(4, 4);
  // Three informative vectors plus one all-zero (untrained) skill.
  float rows[3][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {-1, 0, 0, 0}};
  for (int s = 0; s < 3; ++s) {
    for (int d = 0; d < 4; ++d) aux.skill_out.at(s, d) = rows[s][d];
  }

  auto ranked = predict_skills(model, aux, "engineer", 10);
  CHECK(ranked.size() == 3);  // zero vector excluded, N clipped to vocabulary
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    CHECK(ranked[i - 1].second >= ranked[i].second);
  }

  auto top1 = predict_skills(model, aux, "engineer", 1);
  CHECK(top1.size() == 1);
  CHECK(top1[0].first == ranked[0].first);
}

TEST_CASE("predict_skills rejects an all-zero skill matrix") {
  EncoderModel model = tiny_model(4, 19);
  AuxModel aux;
  aux.config.dim = 4;
  aux.noise.skills = {"alpha"};
  aux.noise.weights = {1};
  aux.noise.cumulative = {1};
  aux.skill_out = Matrix<float>(1, 4);
  CHECK_THROWS_WITH_AS(predict_skills(model, aux, "engineer", 3),
                       doctest::Contains("zero"), std::runtime_error);
}

TEST_CASE("predicted skills recover the generating cluster") {
  SyntheticBenchConfig config;
  config.n_clusters = 4;
  config.titles_per_cluster = 8;
  config.skills_per_cluster = 10;
  config.shared_skill_noise_rate = 0.0;
  config.seed = 31;
  SyntheticBench bench = generate_synthetic_benchmark(config);
  SkillVocabulary vocab =
      SkillVocabulary::from_lines(bench.vocab_lines, "<bench>");
  std::vector<MergedRecord> merged =
      merge_by_title(build_raw_dataset(bench.postings, vocab));

  AuxConfig aux_config;
  aux_config.dim = 32;
  aux_config.epochs = 40;
  aux_config.initial_lr = 0.1;
  aux_config.seed = 3;
  AuxModel aux = train_pvdbow(merged, aux_config);

  EncoderConfig enc;
  enc.arch = EncoderArch::kBagOfSubwords;
  enc.token_dim = 32;
  enc.output_dim = 32;
  enc.epochs = 120;
  enc.batch_size = 16;
  enc.initial_lr = 0.1;
  enc.tokenizer_vocab = 400;
  enc.seed = 3;
  EncoderModel model = train_encoder(export_aux_dataset(aux), enc);

  double precision_sum = 0.0;
  std::size_t n_queries = 0;
  for (std::size_t t = 0; t < bench.corpus.size(); t += 5) {
    const auto& [doc_id, title] = bench.corpus[t];
    const auto& own = bench.cluster_skills[bench.cluster_of.at(doc_id)];
    auto top5 = predict_skills(model, aux, title, 5);
    std::size_t hits = 0;
    for (const auto& [skill, score] : top5) {
      if (std::find(own.begin(), own.end(), skill) != own.end()) ++hits;
    }
    precision_sum += static_cast<double>(hits) / 5.0;
    ++n_queries;
  }
  CHECK(precision_sum / static_cast<double>(n_queries) >= 0.6);
}

TEST_CASE("index file round trip") {
  VectorIndex index = random_index(10, 4, 9);
  std::string path = temp_path("skillsim_test_index.jsix");
  index.save(path);
  VectorIndex loaded = VectorIndex::load(path);
  CHECK(loaded.ids() == index.ids());
  CHECK(loaded.dim() == index.dim());
  Rng rng(2);
  std::vector<float> query = {0.5f, -0.5f, 0.5f, -0.5f};
  RankedList a = index.rank(query, 0);
  RankedList b = loaded.rank(query, 0);
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].doc_id == b.items[i].doc_id);
    CHECK(a.items[i].score == b.items[i].score);
  }
}
