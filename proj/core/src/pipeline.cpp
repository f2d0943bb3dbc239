#include "skillsim/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "skillsim/aux_embed.hpp"
#include "skillsim/baselines.hpp"
#include "skillsim/binio.hpp"
#include "skillsim/corpus.hpp"
#include "skillsim/encoder.hpp"
#include "skillsim/ranking.hpp"
#include "skillsim/synth_bench.hpp"

namespace skillsim {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

PipelineConfig PipelineConfig::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  PipelineConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key");
    }
    config.values[key] = value;
  }
  return config;
}

const std::string& PipelineConfig::require(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) {
    throw std::runtime_error("pipeline config: missing key \"" + key + "\"");
  }
  return it->second;
}

std::string PipelineConfig::get(const std::string& key,
                                const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double PipelineConfig::get_double(const std::string& key,
                                  double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : std::stod(it->second);
}

std::uint64_t PipelineConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : std::stoull(it->second);
}

namespace {

class StageRunner {
 public:
  StageRunner(const std::string& out_dir,
              const std::function<void(const std::string&)>& progress)
      : out_dir_(out_dir), progress_(progress) {
    fs::create_directories(fs::path(out_dir_) / ".stamps");
  }

  std::string out(const char* name) const {
    return (fs::path(out_dir_) / name).string();
  }

  /// Runs `body` unless the stamp for (inputs, params) matches and all
  /// outputs exist. Failures are re-thrown tagged with the stage name.
  bool run(const std::string& stage, const std::vector<std::string>& inputs,
           const std::string& params, const std::vector<std::string>& outputs,
           const std::function<void()>& body) {
    std::uint64_t hash = fnv1a(params.data(), params.size());
    try {
      for (const std::string& input : inputs) {
        hash = fnv1a_file(input, hash);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + stage + ": " + e.what());
    }

    std::string stamp_path =
        (fs::path(out_dir_) / ".stamps" / stage).string();
    bool outputs_exist = true;
    for (const std::string& output : outputs) {
      outputs_exist = outputs_exist && fs::exists(output);
    }
    if (outputs_exist) {
      std::ifstream stamp(stamp_path);
      std::string stored;
      if (stamp && std::getline(stamp, stored) &&
          stored == std::to_string(hash)) {
        if (progress_) progress_("pipeline: " + stage + " cached");
        cached_[stage] = true;
        return false;
      }
    }

    if (progress_) progress_("pipeline: " + stage + " running");
    cached_[stage] = false;
    try {
      body();
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + stage + ": " + e.what());
    }
    std::ofstream stamp(stamp_path, std::ios::binary);
    stamp << hash << '\n';
    return true;
  }

  const std::map<std::string, bool>& cached() const { return cached_; }

 private:
  std::string out_dir_;
  std::function<void(const std::string&)> progress_;
  std::map<std::string, bool> cached_;
};

}  // namespace

PipelineResult run_pipeline(
    const std::string& config_path,
    const std::function<void(const std::string&)>& progress) {
  PipelineConfig config = PipelineConfig::read(config_path);

  const std::string vocab_path = config.require("vocab");
  const std::string postings_path = config.require("postings");
  const std::string corpus_path = config.require("corpus");
  const std::string queries_path = config.require("queries");
  const std::string qrels_path = config.require("qrels");
  const std::string out_dir = config.require("out_dir");
  const std::uint64_t seed = std::stoull(config.require("seed"));
  const int workers = static_cast<int>(config.get_u64("workers", 1));

  AuxConfig aux_config;
  aux_config.dim = static_cast<std::uint32_t>(config.get_u64("aux_dim", 64));
  aux_config.epochs =
      static_cast<std::uint32_t>(config.get_u64("aux_epochs", 30));
  aux_config.initial_lr = config.get_double("aux_lr", 0.025);
  aux_config.final_lr = config.get_double("aux_final_lr", 0.0001);
  aux_config.negatives_k =
      static_cast<std::uint32_t>(config.get_u64("aux_negatives", 5));
  aux_config.noise_power = config.get_double("aux_power", 0.75);
  std::string damping = config.get("aux_damping", "log1p");
  if (damping == "log1p") {
    aux_config.damping = CountDamping::kLog1p;
  } else if (damping == "none") {
    aux_config.damping = CountDamping::kNone;
  } else {
    throw std::runtime_error("pipeline config: aux_damping must be log1p|none");
  }
  aux_config.seed = seed;

  EncoderConfig enc_config;
  enc_config.arch = arch_from_name(config.get("encoder_arch", "bilstm"));
  enc_config.token_dim =
      static_cast<std::uint32_t>(config.get_u64("encoder_token_dim", 64));
  enc_config.hidden_dim =
      static_cast<std::uint32_t>(config.get_u64("encoder_hidden_dim", 96));
  enc_config.output_dim = aux_config.dim;
  enc_config.epochs =
      static_cast<std::uint32_t>(config.get_u64("encoder_epochs", 40));
  enc_config.batch_size =
      static_cast<std::uint32_t>(config.get_u64("encoder_batch", 32));
  enc_config.initial_lr = config.get_double("encoder_lr", 0.05);
  enc_config.momentum = config.get_double("encoder_momentum", 0.9);
  enc_config.weight_decay = config.get_double("encoder_wd", 1e-4);
  enc_config.tokenizer_vocab =
      static_cast<std::uint32_t>(config.get_u64("encoder_vocab", 800));
  enc_config.seed = seed;

  const std::size_t rank_k =
      static_cast<std::size_t>(config.get_u64("rank_k", 0));
  const std::string tag = config.get("tag", "skillsim");

  StageRunner stages(out_dir, progress);
  const std::string raw_path = stages.out("raw.jsonl");
  const std::string merged_path = stages.out("merged.jsonl");
  const std::string aux_model_path = stages.out("aux_model.jsax");
  const std::string aux_data_path = stages.out("aux.jsdx");
  const std::string encoder_path = stages.out("encoder.jstm");
  const std::string index_path = stages.out("index.jsix");
  const std::string run_path = stages.out("run.txt");
  const std::string metrics_path = stages.out("metrics.json");

  stages.run("extract", {vocab_path, postings_path},
             "workers=" + std::to_string(workers), {raw_path}, [&] {
               SkillVocabulary vocab = SkillVocabulary::load(vocab_path);
               build_raw_dataset_file(postings_path, vocab, raw_path, workers);
             });

  stages.run("merge", {raw_path}, "", {merged_path}, [&] {
    write_merged_dataset(merged_path, merge_by_title(read_raw_dataset(raw_path)));
  });

  {
    std::ostringstream params;
    params << "dim=" << aux_config.dim << ";epochs=" << aux_config.epochs
           << ";lr=" << aux_config.initial_lr << ";final=" << aux_config.final_lr
           << ";k=" << aux_config.negatives_k << ";power=" << aux_config.noise_power
           << ";damping=" << damping << ";seed=" << seed
           << ";workers=" << workers;
    stages.run("train-aux", {merged_path}, params.str(),
               {aux_model_path, aux_data_path}, [&] {
                 std::vector<MergedRecord> merged =
                     read_merged_dataset(merged_path);
                 AuxModel model = train_pvdbow(merged, aux_config, workers);
                 model.save(aux_model_path);
                 export_aux_dataset(model).save(aux_data_path);
               });
  }

  {
    std::ostringstream params;
    params << "arch=" << arch_name(enc_config.arch)
           << ";token=" << enc_config.token_dim
           << ";hidden=" << enc_config.hidden_dim
           << ";epochs=" << enc_config.epochs
           << ";batch=" << enc_config.batch_size << ";lr=" << enc_config.initial_lr
           << ";mu=" << enc_config.momentum << ";wd=" << enc_config.weight_decay
           << ";vocab=" << enc_config.tokenizer_vocab << ";seed=" << seed
           << ";workers=" << workers;
    stages.run("train-encoder", {aux_data_path}, params.str(), {encoder_path},
               [&] {
                 AuxDataset aux = AuxDataset::load(aux_data_path);
                 EncoderTrainOptions options;
                 options.workers = workers;
                 train_encoder(aux, enc_config, options).save(encoder_path);
               });
  }

  stages.run("index", {encoder_path, corpus_path}, "", {index_path}, [&] {
    EncoderModel model = EncoderModel::load(encoder_path);
    VectorIndex::build(read_title_tsv(corpus_path), model).save(index_path);
  });

  stages.run("rank", {index_path, queries_path, encoder_path},
             "k=" + std::to_string(rank_k) + ";tag=" + tag, {run_path}, [&] {
               EncoderModel model = EncoderModel::load(encoder_path);
               VectorIndex index = VectorIndex::load(index_path);
               RunFile run;
               run.tag = tag;
               for (const auto& [query_id, title] :
                    read_title_tsv(queries_path)) {
                 run.add(index.rank(model.encode(title), rank_k, query_id));
               }
               run.write(run_path);
             });

  stages.run("evaluate", {run_path, qrels_path}, "", {metrics_path}, [&] {
    RunFile run = RunFile::read(run_path);
    QrelsSet qrels = QrelsSet::read(qrels_path);
    evaluate_run(run, qrels).write_json(metrics_path);
  });

  PipelineResult result;
  result.cached = stages.cached();
  result.metrics_path = metrics_path;
  result.run_path = run_path;
  result.encoder_path = encoder_path;
  result.metrics = evaluate_run(RunFile::read(run_path), QrelsSet::read(qrels_path));
  return result;
}

}  // namespace skillsim
