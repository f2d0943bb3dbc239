#include <benchmark/benchmark.h>

#include "skillsim/aux_embed.hpp"
#include "skillsim/baselines.hpp"
#include "skillsim/corpus.hpp"
#include "skillsim/encoder.hpp"
#include "skillsim/ranking.hpp"
#include "skillsim/synth_bench.hpp"
#include "skillsim/text.hpp"

namespace {

using namespace skillsim;

const SyntheticBench& bench_data() {
  static SyntheticBench bench = [] {
    SyntheticBenchConfig config;
    config.seed = 42;
    return generate_synthetic_benchmark(config);
  }();
  return bench;
}

const SkillVocabulary& bench_vocab() {
  static SkillVocabulary vocab =
      SkillVocabulary::from_lines(bench_data().vocab_lines, "<bench>");
  return vocab;
}

EncoderModel trained_model(EncoderArch arch) {
  const SyntheticBench& bench = bench_data();
  std::vector<MergedRecord> merged =
      merge_by_title(build_raw_dataset(bench.postings, bench_vocab(), 2));
  AuxConfig aux_config;
  aux_config.dim = 48;
  aux_config.epochs = 8;
  aux_config.seed = 1;
  AuxDataset aux = export_aux_dataset(train_pvdbow(merged, aux_config));
  EncoderConfig config;
  config.arch = arch;
  config.token_dim = 32;
  config.hidden_dim = 32;
  config.output_dim = 48;
  config.epochs = 2;
  config.batch_size = 32;
  config.tokenizer_vocab = 600;
  config.seed = 1;
  return train_encoder(aux, config);
}

void BM_NormalizeTitle(benchmark::State& state) {
  std::string title = "Sr. Software Engineer (Backend) — Zürich";
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_title(title));
  }
}
BENCHMARK(BM_NormalizeTitle);

void BM_ExtractSkills(benchmark::State& state) {
  SkillExtractor extractor(bench_vocab());
  const std::string& description = bench_data().postings[7].description;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extractor.extract(description));
  }
}
BENCHMARK(BM_ExtractSkills);

void BM_Bm25ScoreAll(benchmark::State& state) {
  BM25Index index = BM25Index::build(bench_data().corpus);
  const std::string& query = bench_data().queries[3].second;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.score_all(query));
  }
}
BENCHMARK(BM_Bm25ScoreAll);

void BM_EncodeBag(benchmark::State& state) {
  static EncoderModel model = trained_model(EncoderArch::kBagOfSubwords);
  const std::string& title = bench_data().corpus[11].second;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.encode(title));
  }
}
BENCHMARK(BM_EncodeBag);

void BM_EncodeBiLstm(benchmark::State& state) {
  static EncoderModel model = trained_model(EncoderArch::kBiLstm);
  const std::string& title = bench_data().corpus[11].second;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.encode(title));
  }
}
BENCHMARK(BM_EncodeBiLstm);

void BM_RankFullCorpus(benchmark::State& state) {
  static EncoderModel model = trained_model(EncoderArch::kBagOfSubwords);
  static VectorIndex index = VectorIndex::build(bench_data().corpus, model);
  std::vector<float> query = model.encode(bench_data().queries[5].second);
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.rank(query, 20));
  }
}
BENCHMARK(BM_RankFullCorpus);

void BM_PvdbowEpoch(benchmark::State& state) {
  std::vector<MergedRecord> merged = merge_by_title(
      build_raw_dataset(bench_data().postings, bench_vocab(), 2));
  for (auto _ : state) {
    AuxConfig config;
    config.dim = 48;
    config.epochs = 1;
    config.seed = 2;
    benchmark::DoNotOptimize(train_pvdbow(merged, config));
  }
}
BENCHMARK(BM_PvdbowEpoch);

}  // namespace

BENCHMARK_MAIN();
