#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "skillsim/learning_curve.hpp"
#include "skillsim/synth_bench.hpp"

using namespace skillsim;

namespace {

EvalBundle tiny_bundle(const SyntheticBench& bench) {
  EvalBundle bundle;
  bundle.corpus = bench.corpus;
  bundle.queries = bench.queries;
  bundle.qrels = bench.qrels;
  return bundle;
}

AuxDataset fabricated_aux(const SyntheticBench& bench, std::uint32_t dim) {
  // Targets clumped by cluster: a unit basis vector per cluster, tilted a
  // little per title so training has something to do.
  AuxDataset aux;
  aux.dim = dim;
  Rng rng(3);
  for (const auto& [doc, cluster] : bench.cluster_of) {
    std::vector<float> vec(dim, 0.0f);
    vec[cluster % dim] = 1.0f;
    vec[(cluster + 1) % dim] = static_cast<float>(rng.next_double() * 0.2);
    double norm = 0;
    for (float v : vec) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    for (float& v : vec) v = static_cast<float>(v / norm);
    aux.pairs.emplace_back(doc, std::move(vec));
  }
  return aux;
}

}  // namespace

TEST_CASE("curve rows appear at step zero, every interval, and the end") {
  SyntheticBenchConfig config;
  config.n_clusters = 3;
  config.titles_per_cluster = 4;
  config.skills_per_cluster = 5;
  config.shared_skill_noise_rate = 0.0;
  config.seed = 11;
  SyntheticBench bench = generate_synthetic_benchmark(config);
  EvalBundle bundle = tiny_bundle(bench);
  AuxDataset aux = fabricated_aux(bench, 8);

  EncoderConfig enc;
  enc.arch = EncoderArch::kBagOfSubwords;
  enc.token_dim = 8;
  enc.output_dim = 8;
  enc.epochs = 4;
  enc.batch_size = 4;
  enc.tokenizer_vocab = 280;
  enc.seed = 5;

  SnapshotTrainer trainer = [&](const EncoderTrainOptions& options) {
    EncoderTrainOptions merged = options;
    merged.steps_per_epoch = 5;  // 20 total steps
    train_encoder(aux, enc, merged);
  };

  std::string csv =
      (std::filesystem::temp_directory_path() / "skillsim_test_curve.csv")
          .string();
  std::vector<CurvePoint> rows = learning_curve(trainer, bundle, 5, csv);
  REQUIRE(rows.size() == 5);  // 0, 5, 10, 15, 20
  CHECK(rows.front().step == 0);
  CHECK(rows.back().step == 20);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].step > rows[i - 1].step);
  }
  for (const CurvePoint& row : rows) {
    CHECK(row.map >= 0.0);
    CHECK(row.map <= 1.0);
  }

  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,map,p5,p20");
  std::size_t data_lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++data_lines;
  }
  CHECK(data_lines == rows.size());
}

TEST_CASE("an interval that does not divide the budget still ends the curve") {
  SyntheticBenchConfig config;
  config.n_clusters = 2;
  config.titles_per_cluster = 3;
  config.skills_per_cluster = 4;
  config.shared_skill_noise_rate = 0.0;
  config.seed = 12;
  SyntheticBench bench = generate_synthetic_benchmark(config);
  EvalBundle bundle = tiny_bundle(bench);
  AuxDataset aux = fabricated_aux(bench, 6);

  EncoderConfig enc;
  enc.arch = EncoderArch::kBagOfSubwords;
  enc.token_dim = 6;
  enc.output_dim = 6;
  enc.epochs = 1;
  enc.batch_size = 2;
  enc.tokenizer_vocab = 280;
  enc.seed = 5;

  SnapshotTrainer trainer = [&](const EncoderTrainOptions& options) {
    EncoderTrainOptions merged = options;
    merged.steps_per_epoch = 7;
    train_encoder(aux, enc, merged);
  };
  std::vector<CurvePoint> rows = learning_curve(trainer, bundle, 3);
  REQUIRE(rows.size() == 4);  // 0, 3, 6, 7
  CHECK(rows.back().step == 7);
}
