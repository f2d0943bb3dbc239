// skillsim: batch CLI over the job-title similarity pipeline.
// Data goes to files named on the command line; progress goes to stderr.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skillsim/aux_embed.hpp"
#include "skillsim/baselines.hpp"
#include "skillsim/corpus.hpp"
#include "skillsim/encoder.hpp"
#include "skillsim/evalkit.hpp"
#include "skillsim/learning_curve.hpp"
#include "skillsim/pipeline.hpp"
#include "skillsim/ranking.hpp"
#include "skillsim/synth_bench.hpp"
#include "skillsim/text.hpp"

namespace {

using namespace skillsim;

void progress(const std::string& line) { std::cerr << line << std::endl; }

std::string sniff_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() != 4) throw std::runtime_error(path + ": truncated file");
  return std::string(magic, 4);
}

// Skill maps for the skill-based ranking baselines; accepts raw records
// (each skill counted once) or merged records. Ranking ids are the title
// keys with spaces hyphenated so they survive the TREC formats.
std::vector<std::pair<std::string, std::map<std::string, std::uint32_t>>>
read_skill_maps(const std::string& path) {
  std::vector<std::pair<std::string, std::map<std::string, std::uint32_t>>> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::string> seen;  // id -> source title key
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::map<std::string, std::uint32_t> skills;
      std::string key;
      if (line.find("\"skill_counts\"") != std::string::npos) {
        MergedRecord rec = merged_record_from_json(line);
        key = rec.title_key;
        skills = rec.skill_counts;
      } else {
        JobSkillRecord rec = raw_record_from_json(line);
        key = rec.title_key;
        for (const std::string& s : rec.skills) skills[s] = 1;
      }
      std::string id = bench_doc_id(key);
      auto [it, inserted] = seen.emplace(id, key);
      if (!inserted) {
        throw std::runtime_error("title keys \"" + it->second + "\" and \"" +
                                 key + "\" collide on ranking id \"" + id +
                                 "\"");
      }
      out.emplace_back(id, std::move(skills));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return out;
}

struct TrainEncoderFlags {
  std::string arch = "bilstm";
  std::uint32_t token_dim = 100;
  std::uint32_t hidden_dim = 256;
  std::uint32_t epochs = 10;
  std::uint32_t batch = 64;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint32_t vocab_size = 2000;
  std::uint64_t seed = 0;
  int workers = 1;
  std::uint64_t steps_per_epoch = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--arch", arch, "bilstm or bag-of-subwords");
    cmd->add_option("--token-dim", token_dim, "token embedding size");
    cmd->add_option("--hidden-dim", hidden_dim, "recurrent width per direction");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch", batch, "mini-batch size");
    cmd->add_option("--lr", lr, "initial learning rate");
    cmd->add_option("--momentum", momentum, "SGD momentum");
    cmd->add_option("--weight-decay", weight_decay, "decoupled weight decay");
    cmd->add_option("--vocab-size", vocab_size, "tokenizer unit budget");
    cmd->add_option("--seed", seed, "training seed")->required();
    cmd->add_option("--workers", workers, "gradient workers");
    cmd->add_option("--steps-per-epoch", steps_per_epoch,
                    "override optimizer steps per epoch (0 = derive)");
  }

  EncoderConfig to_config(std::uint32_t output_dim) const {
    EncoderConfig config;
    config.arch = arch_from_name(arch);
    config.token_dim = token_dim;
    config.hidden_dim = hidden_dim;
    config.output_dim = output_dim;
    config.epochs = epochs;
    config.batch_size = batch;
    config.initial_lr = lr;
    config.momentum = momentum;
    config.weight_decay = weight_decay;
    config.tokenizer_vocab = vocab_size;
    config.seed = seed;
    return config;
  }
};

void write_epoch_losses(const std::string& path,
                        const std::vector<double>& losses) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write loss log: " + path);
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) {
    out << (e + 1) << ',' << losses[e] << '\n';
  }
}

EvalBundle load_eval_bundle(const std::string& corpus_path,
                            const std::string& queries_path,
                            const std::string& qrels_path) {
  EvalBundle bundle;
  bundle.corpus = read_title_tsv(corpus_path);
  bundle.queries = read_title_tsv(queries_path);
  bundle.qrels = QrelsSet::read(qrels_path);
  return bundle;
}

int run(int argc, char** argv) {
  CLI::App app{"job title similarity pipeline"};
  app.require_subcommand(1);

  // ---- extract ----
  auto* extract = app.add_subcommand(
      "extract", "extract noisy skills from postings into a raw dataset");
  std::string ex_vocab, ex_in, ex_out;
  int ex_workers = 1;
  extract->add_option("--vocab", ex_vocab, "skills TSV")->required();
  extract->add_option("--in", ex_in, "postings JSONL")->required();
  extract->add_option("--out", ex_out, "raw dataset JSONL")->required();
  extract->add_option("--workers", ex_workers, "extraction workers");
  extract->callback([&] {
    SkillVocabulary vocab = SkillVocabulary::load(ex_vocab);
    ExtractStats stats =
        build_raw_dataset_file(ex_in, vocab, ex_out, ex_workers);
    std::fprintf(stderr,
                 "extract: %llu lines, %llu malformed, %llu dropped empty "
                 "titles, %llu records\n",
                 (unsigned long long)stats.total_lines,
                 (unsigned long long)stats.malformed,
                 (unsigned long long)stats.dropped_empty_title,
                 (unsigned long long)stats.records);
  });

  // ---- merge ----
  auto* merge = app.add_subcommand(
      "merge", "aggregate raw records into per-title skill multisets");
  std::vector<std::string> mg_in;
  std::string mg_out;
  merge->add_option("--in", mg_in, "raw dataset JSONL (repeatable)")
      ->required();
  merge->add_option("--out", mg_out, "merged dataset JSONL")->required();
  merge->callback([&] {
    std::vector<JobSkillRecord> raw;
    for (const std::string& path : mg_in) {
      std::vector<JobSkillRecord> part = read_raw_dataset(path);
      raw.insert(raw.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    std::vector<MergedRecord> merged = merge_by_title(raw);
    write_merged_dataset(mg_out, merged);
    std::fprintf(stderr, "merge: %zu raw records -> %zu titles\n", raw.size(),
                 merged.size());
  });

  // ---- train-aux ----
  auto* train_aux = app.add_subcommand(
      "train-aux", "train skill-multiset document embeddings");
  std::string ta_in, ta_out, ta_export, ta_damping = "log1p";
  AuxConfig ta_config;
  int ta_workers = 1;
  train_aux->add_option("--in", ta_in, "merged dataset JSONL")->required();
  train_aux->add_option("--out", ta_out, "aux model file")->required();
  train_aux->add_option("--export", ta_export,
                        "also export the unit-normalized dataset");
  train_aux->add_option("--dim", ta_config.dim, "vector dimension");
  train_aux->add_option("--epochs", ta_config.epochs, "training epochs");
  train_aux->add_option("--lr", ta_config.initial_lr, "initial learning rate");
  train_aux->add_option("--final-lr", ta_config.final_lr, "final learning rate");
  train_aux->add_option("--negatives", ta_config.negatives_k,
                        "negatives per positive");
  train_aux->add_option("--power", ta_config.noise_power,
                        "noise distribution damping power");
  train_aux->add_option("--damping", ta_damping, "count damping: log1p|none");
  train_aux->add_option("--seed", ta_config.seed, "training seed")->required();
  train_aux->add_option("--workers", ta_workers, "training workers");
  train_aux->callback([&] {
    if (ta_damping == "log1p") {
      ta_config.damping = CountDamping::kLog1p;
    } else if (ta_damping == "none") {
      ta_config.damping = CountDamping::kNone;
    } else {
      throw std::runtime_error("--damping must be log1p or none");
    }
    std::vector<MergedRecord> merged = read_merged_dataset(ta_in);
    AuxTrainReport report;
    AuxModel model = train_pvdbow(merged, ta_config, ta_workers, &report);
    model.save(ta_out);
    if (!ta_export.empty()) export_aux_dataset(model).save(ta_export);
    if (report.skipped_empty_titles > 0) {
      std::fprintf(stderr, "train-aux: skipped %llu titles with no skills\n",
                   (unsigned long long)report.skipped_empty_titles);
    }
    for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e) {
      std::fprintf(stderr, "train-aux: epoch %zu mean loss %.6f\n", e + 1,
                   report.epoch_mean_loss[e]);
    }
  });

  // ---- train-encoder ----
  auto* train_enc = app.add_subcommand(
      "train-encoder", "fit the title encoder to auxiliary targets");
  std::vector<std::string> te_aux;
  std::string te_out, te_loss_log;
  TrainEncoderFlags te_flags;
  train_enc->add_option("--aux", te_aux, "aux dataset files (repeatable)")
      ->required();
  train_enc->add_option("--out", te_out, "encoder model file")->required();
  train_enc->add_option("--loss-log", te_loss_log, "per-epoch loss CSV");
  te_flags.add_to(train_enc);
  train_enc->callback([&] {
    AuxDataset aux;
    for (const std::string& path : te_aux) aux.append(AuxDataset::load(path));
    EncoderTrainOptions options;
    options.workers = te_flags.workers;
    options.steps_per_epoch = te_flags.steps_per_epoch;
    std::vector<double> losses;
    options.epoch_mean_loss = &losses;
    EncoderModel model =
        train_encoder(aux, te_flags.to_config(aux.dim), options);
    model.save(te_out);
    write_epoch_losses(te_loss_log, losses);
    for (std::size_t e = 0; e < losses.size(); ++e) {
      std::fprintf(stderr, "train-encoder: epoch %zu mean loss %.6f\n", e + 1,
                   losses[e]);
    }
  });

  // ---- train-negsamp ----
  auto* train_ns = app.add_subcommand(
      "train-negsamp", "contrastive baseline trainer over raw records");
  std::vector<std::string> tn_raw;
  std::string tn_out, tn_loss_log;
  TrainEncoderFlags tn_flags;
  std::uint32_t tn_negatives = 5;
  std::uint32_t tn_output_dim = 100;
  train_ns->add_option("--raw", tn_raw, "raw dataset files (repeatable)")
      ->required();
  train_ns->add_option("--out", tn_out, "encoder model file")->required();
  train_ns->add_option("--negatives", tn_negatives, "negatives per positive");
  train_ns->add_option("--output-dim", tn_output_dim, "encoder output size");
  train_ns->add_option("--loss-log", tn_loss_log, "per-epoch loss CSV");
  tn_flags.add_to(train_ns);
  train_ns->callback([&] {
    std::vector<JobSkillRecord> raw;
    for (const std::string& path : tn_raw) {
      std::vector<JobSkillRecord> part = read_raw_dataset(path);
      raw.insert(raw.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    EncoderTrainOptions options;
    options.workers = tn_flags.workers;
    options.steps_per_epoch = tn_flags.steps_per_epoch;
    std::vector<double> losses;
    options.epoch_mean_loss = &losses;
    EncoderModel model = train_negative_sampling(
        raw, tn_flags.to_config(tn_output_dim), tn_negatives, options);
    model.save(tn_out);
    write_epoch_losses(tn_loss_log, losses);
    for (std::size_t e = 0; e < losses.size(); ++e) {
      std::fprintf(stderr, "train-negsamp: epoch %zu mean loss %.6f\n", e + 1,
                   losses[e]);
    }
  });

  // ---- encode ----
  auto* encode = app.add_subcommand("encode", "encode titles to unit vectors");
  std::string en_model, en_in, en_out;
  encode->add_option("--model", en_model, "encoder model file")->required();
  encode->add_option("--in", en_in, "titles TSV (id, title)")->required();
  encode->add_option("--out", en_out, "vectors TSV")->required();
  encode->callback([&] {
    EncoderModel model = EncoderModel::load(en_model);
    std::ofstream out(en_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + en_out);
    std::size_t count = 0;
    for (const auto& [id, title] : read_title_tsv(en_in)) {
      std::vector<float> vec = model.encode(title);
      out << id << '\t';
      for (std::size_t d = 0; d < vec.size(); ++d) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.8g", vec[d]);
        out << (d ? " " : "") << buf;
      }
      out << '\n';
      ++count;
    }
    std::fprintf(stderr, "encode: %zu titles\n", count);
  });

  // ---- index ----
  auto* index = app.add_subcommand("index", "build a retrieval index");
  std::string ix_in, ix_out, ix_model, ix_method = "encoder";
  BM25Params ix_params;
  index->add_option("--in", ix_in, "corpus TSV or merged JSONL")->required();
  index->add_option("--out", ix_out, "index file")->required();
  index->add_option("--method", ix_method, "encoder|bm25|tfidf");
  index->add_option("--model", ix_model, "encoder model (encoder method)");
  index->add_option("--k1", ix_params.k1, "bm25 k1");
  index->add_option("--b", ix_params.b, "bm25 b");
  index->callback([&] {
    if (ix_method == "encoder") {
      if (ix_model.empty()) {
        throw std::runtime_error("index: --model is required for encoder");
      }
      EncoderModel model = EncoderModel::load(ix_model);
      std::uint64_t skipped = 0;
      VectorIndex vix =
          VectorIndex::build(read_title_tsv(ix_in), model, &skipped);
      vix.save(ix_out);
      std::fprintf(stderr, "index: %zu vectors (%llu skipped)\n", vix.size(),
                   (unsigned long long)skipped);
    } else if (ix_method == "bm25") {
      BM25Index bm = BM25Index::build(read_title_tsv(ix_in), ix_params);
      bm.save(ix_out);
      std::fprintf(stderr, "index: %zu docs, avgdl %.3f\n", bm.doc_count(),
                   bm.average_doc_length());
    } else if (ix_method == "tfidf") {
      SkillStats stats = SkillStats::build(read_merged_dataset(ix_in));
      stats.save(ix_out);
      std::fprintf(stderr, "index: %zu skills over %u titles\n",
                   stats.skills.size(), stats.n_titles);
    } else {
      throw std::runtime_error("index: unknown method \"" + ix_method + "\"");
    }
  });

  // ---- rank ----
  auto* rank = app.add_subcommand(
      "rank", "rank a corpus against queries, writing a TREC run file");
  std::string rk_index, rk_queries, rk_model, rk_out, rk_tag = "skillsim";
  std::string rk_doc_skills, rk_query_skills;
  std::size_t rk_k = 0;
  AuxConfig rk_infer;
  rk_infer.epochs = 40;
  std::uint64_t rk_seed = 1;
  rank->add_option("--index", rk_index, "index file (.jsix/.jsbm/.jstf/.jsax)")
      ->required();
  rank->add_option("--out", rk_out, "run file")->required();
  rank->add_option("--queries", rk_queries, "queries TSV (vector/bm25)");
  rank->add_option("--model", rk_model, "encoder model (vector index)");
  rank->add_option("--doc-skills", rk_doc_skills,
                   "corpus skill maps JSONL (tfidf/doc2vec)");
  rank->add_option("--query-skills", rk_query_skills,
                   "query skill maps JSONL (tfidf/doc2vec)");
  rank->add_option("--k", rk_k, "ranked list depth (0 = all)");
  rank->add_option("--tag", rk_tag, "run tag");
  rank->add_option("--infer-epochs", rk_infer.epochs,
                   "doc2vec inference epochs");
  rank->add_option("--infer-lr", rk_infer.initial_lr, "doc2vec inference lr");
  rank->add_option("--seed", rk_seed, "doc2vec inference seed");
  rank->callback([&] {
    std::string magic = sniff_magic(rk_index);
    RunFile run;
    run.tag = rk_tag;
    if (magic == "JSIX") {
      if (rk_model.empty() || rk_queries.empty()) {
        throw std::runtime_error("rank: vector index needs --model and --queries");
      }
      EncoderModel model = EncoderModel::load(rk_model);
      VectorIndex vix = VectorIndex::load(rk_index);
      for (const auto& [qid, title] : read_title_tsv(rk_queries)) {
        run.add(vix.rank(model.encode(title), rk_k, qid));
      }
    } else if (magic == "JSBM") {
      if (rk_queries.empty()) {
        throw std::runtime_error("rank: bm25 index needs --queries");
      }
      BM25Index bm = BM25Index::load(rk_index);
      for (const auto& [qid, title] : read_title_tsv(rk_queries)) {
        std::vector<ScoredDoc> scored;
        for (auto& [doc, score] : bm.score_all(title)) {
          scored.push_back({doc, score});
        }
        run.add(make_ranked_list(qid, std::move(scored), rk_k));
      }
    } else if (magic == "JSTF") {
      if (rk_doc_skills.empty() || rk_query_skills.empty()) {
        throw std::runtime_error(
            "rank: tfidf needs --doc-skills and --query-skills");
      }
      SkillStats stats = SkillStats::load(rk_index);
      auto docs = read_skill_maps(rk_doc_skills);
      std::vector<std::pair<std::string, TfidfVector>> doc_vecs;
      for (const auto& [id, skills] : docs) {
        doc_vecs.emplace_back(id, tfidf_vector(skills, stats));
      }
      for (const auto& [qid, skills] : read_skill_maps(rk_query_skills)) {
        TfidfVector qvec = tfidf_vector(skills, stats);
        std::vector<ScoredDoc> scored;
        for (const auto& [id, dvec] : doc_vecs) {
          scored.push_back({id, qvec.rankable && dvec.rankable
                                    ? tfidf_cosine(qvec, dvec)
                                    : 0.0});
        }
        run.add(make_ranked_list(qid, std::move(scored), rk_k));
      }
    } else if (magic == "JSAX") {
      if (rk_doc_skills.empty() || rk_query_skills.empty()) {
        throw std::runtime_error(
            "rank: doc2vec needs --doc-skills and --query-skills");
      }
      AuxModel aux = AuxModel::load(rk_index);
      rk_infer.dim = aux.dim();
      rk_infer.seed = rk_seed;
      auto embed = [&](const std::map<std::string, std::uint32_t>& skills) {
        std::vector<float> vec = infer_doc_vector(aux, skills, rk_infer);
        double norm = 0.0;
        for (float v : vec) norm += static_cast<double>(v) * v;
        norm = std::sqrt(norm);
        if (norm > 0) {
          for (float& v : vec) v = static_cast<float>(v / norm);
        }
        return vec;
      };
      std::vector<std::pair<std::string, std::vector<float>>> doc_vecs;
      for (const auto& [id, skills] : read_skill_maps(rk_doc_skills)) {
        doc_vecs.emplace_back(id, embed(skills));
      }
      for (const auto& [qid, skills] : read_skill_maps(rk_query_skills)) {
        std::vector<float> qvec = embed(skills);
        std::vector<ScoredDoc> scored;
        for (const auto& [id, dvec] : doc_vecs) {
          double dot = 0.0;
          for (std::size_t d = 0; d < dvec.size(); ++d) {
            dot += static_cast<double>(dvec[d]) * qvec[d];
          }
          scored.push_back({id, dot});
        }
        run.add(make_ranked_list(qid, std::move(scored), rk_k));
      }
    } else {
      throw std::runtime_error("rank: unrecognized index format \"" + magic +
                               "\"");
    }
    run.write(rk_out);
    std::fprintf(stderr, "rank: %zu queries\n", run.queries.size());
  });

  // ---- normalize ----
  auto* normalize = app.add_subcommand(
      "normalize", "map raw titles onto a normalized title set");
  std::string nm_model, nm_titles, nm_in, nm_out, nm_tag = "normalize";
  std::size_t nm_k = 10;
  normalize->add_option("--model", nm_model, "encoder model")->required();
  normalize->add_option("--titles", nm_titles, "normalized titles TSV")
      ->required();
  normalize->add_option("--in", nm_in, "raw titles TSV")->required();
  normalize->add_option("--out", nm_out, "run file")->required();
  normalize->add_option("--k", nm_k, "candidates per title (0 = all)");
  normalize->add_option("--tag", nm_tag, "run tag");
  normalize->callback([&] {
    EncoderModel model = EncoderModel::load(nm_model);
    VectorIndex index = VectorIndex::build(read_title_tsv(nm_titles), model);
    RunFile run;
    run.tag = nm_tag;
    for (const auto& [id, title] : read_title_tsv(nm_in)) {
      RankedList list = index.rank(model.encode(title), nm_k, id);
      run.add(std::move(list));
    }
    run.write(nm_out);
    std::fprintf(stderr, "normalize: %zu titles against %zu candidates\n",
                 run.queries.size(), index.size());
  });

  // ---- predict-skills ----
  auto* predict = app.add_subcommand(
      "predict-skills", "suggest skills for titles from the shared space");
  std::string pr_model, pr_aux, pr_title, pr_in, pr_out;
  std::size_t pr_n = 10;
  predict->add_option("--model", pr_model, "encoder model")->required();
  predict->add_option("--aux", pr_aux, "aux model file")->required();
  predict->add_option("--title", pr_title, "single title");
  predict->add_option("--in", pr_in, "titles TSV");
  predict->add_option("--n", pr_n, "skills per title");
  predict->add_option("--out", pr_out, "output TSV")->required();
  predict->callback([&] {
    if (pr_title.empty() == pr_in.empty()) {
      throw std::runtime_error(
          "predict-skills: give exactly one of --title or --in");
    }
    EncoderModel model = EncoderModel::load(pr_model);
    AuxModel aux = AuxModel::load(pr_aux);
    std::vector<std::pair<std::string, std::string>> titles;
    if (!pr_title.empty()) {
      titles.emplace_back("query", pr_title);
    } else {
      titles = read_title_tsv(pr_in);
    }
    std::ofstream out(pr_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + pr_out);
    for (const auto& [id, title] : titles) {
      auto ranked = predict_skills(model, aux, title, pr_n);
      std::size_t rank_no = 1;
      for (const auto& [skill, score] : ranked) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", score);
        out << id << '\t' << rank_no << '\t' << skill << '\t' << buf << '\n';
        ++rank_no;
      }
    }
    std::fprintf(stderr, "predict-skills: %zu titles\n", titles.size());
  });

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand(
      "evaluate", "score a run file against relevance judgments");
  std::string ev_run, ev_qrels, ev_out;
  evaluate->add_option("--run", ev_run, "TREC run file")->required();
  evaluate->add_option("--qrels", ev_qrels, "TREC qrels file")->required();
  evaluate->add_option("--out", ev_out, "metrics JSON")->required();
  evaluate->callback([&] {
    MetricsReport report =
        evaluate_run(RunFile::read(ev_run), QrelsSet::read(ev_qrels));
    report.write_json(ev_out);
    std::fprintf(stderr,
                 "evaluate: %u queries, map %.4f p5 %.4f p10 %.4f p20 %.4f "
                 "mrr %.4f\n",
                 report.query_count, report.mean.ap, report.mean.p5,
                 report.mean.p10, report.mean.p20, report.mean.rr);
  });

  // ---- gen-bench ----
  auto* gen = app.add_subcommand("gen-bench",
                                 "generate the synthetic retrieval benchmark");
  SyntheticBenchConfig gb_config;
  std::string gb_dir;
  gen->add_option("--out-dir", gb_dir, "output directory")->required();
  gen->add_option("--clusters", gb_config.n_clusters, "occupation clusters");
  gen->add_option("--titles", gb_config.titles_per_cluster,
                  "titles per cluster");
  gen->add_option("--skills", gb_config.skills_per_cluster,
                  "skills per cluster");
  gen->add_option("--noise", gb_config.shared_skill_noise_rate,
                  "cross-cluster skill noise rate");
  gen->add_option("--filler", gb_config.filler_vocab_size,
                  "filler vocabulary size");
  gen->add_option("--seed", gb_config.seed, "generator seed")->required();
  gen->callback([&] {
    SyntheticBench bench = generate_synthetic_benchmark(gb_config);
    write_synthetic_benchmark(bench, gb_dir);
    std::fprintf(stderr, "gen-bench: %zu postings, %zu queries -> %s\n",
                 bench.postings.size(), bench.queries.size(), gb_dir.c_str());
  });

  // ---- learning-curve ----
  auto* curve = app.add_subcommand(
      "learning-curve", "periodic ranking evaluation during training");
  std::string lc_method = "jst", lc_aux, lc_raw, lc_corpus, lc_queries,
              lc_qrels, lc_out;
  std::uint64_t lc_interval = 100;
  std::uint32_t lc_negatives = 5;
  std::uint32_t lc_output_dim = 100;
  TrainEncoderFlags lc_flags;
  curve->add_option("--method", lc_method, "jst or negsamp");
  curve->add_option("--aux", lc_aux, "aux dataset (jst)");
  curve->add_option("--raw", lc_raw, "raw dataset (negsamp)");
  curve->add_option("--corpus", lc_corpus, "eval corpus TSV")->required();
  curve->add_option("--queries", lc_queries, "eval queries TSV")->required();
  curve->add_option("--qrels", lc_qrels, "eval qrels")->required();
  curve->add_option("--interval", lc_interval, "steps between snapshots");
  curve->add_option("--negatives", lc_negatives, "negatives (negsamp)");
  curve->add_option("--output-dim", lc_output_dim, "output size (negsamp)");
  curve->add_option("--out", lc_out, "curve CSV")->required();
  lc_flags.add_to(curve);
  curve->callback([&] {
    EvalBundle bundle = load_eval_bundle(lc_corpus, lc_queries, lc_qrels);
    SnapshotTrainer trainer;
    if (lc_method == "jst") {
      if (lc_aux.empty()) {
        throw std::runtime_error("learning-curve: jst needs --aux");
      }
      AuxDataset aux = AuxDataset::load(lc_aux);
      EncoderConfig config = lc_flags.to_config(aux.dim);
      trainer = [aux = std::move(aux), config,
                 &lc_flags](const EncoderTrainOptions& options) {
        EncoderTrainOptions merged = options;
        merged.workers = lc_flags.workers;
        merged.steps_per_epoch = lc_flags.steps_per_epoch;
        train_encoder(aux, config, merged);
      };
    } else if (lc_method == "negsamp") {
      if (lc_raw.empty()) {
        throw std::runtime_error("learning-curve: negsamp needs --raw");
      }
      std::vector<JobSkillRecord> raw = read_raw_dataset(lc_raw);
      EncoderConfig config = lc_flags.to_config(lc_output_dim);
      trainer = [raw = std::move(raw), config, lc_negatives,
                 &lc_flags](const EncoderTrainOptions& options) {
        EncoderTrainOptions merged = options;
        merged.workers = lc_flags.workers;
        merged.steps_per_epoch = lc_flags.steps_per_epoch;
        train_negative_sampling(raw, config, lc_negatives, merged);
      };
    } else {
      throw std::runtime_error("learning-curve: --method must be jst|negsamp");
    }
    std::vector<CurvePoint> rows =
        learning_curve(trainer, bundle, lc_interval, lc_out);
    std::fprintf(stderr, "learning-curve: %zu rows -> %s\n", rows.size(),
                 lc_out.c_str());
  });

  // ---- pipeline ----
  auto* pipeline = app.add_subcommand(
      "pipeline", "run the full train/index/evaluate pipeline from a config");
  std::string pl_config;
  pipeline->add_option("--config", pl_config, "key = value config file")
      ->required();
  pipeline->callback([&] {
    PipelineResult result = run_pipeline(pl_config, progress);
    std::fprintf(stderr, "pipeline: map %.4f p5 %.4f p20 %.4f -> %s\n",
                 result.metrics.mean.ap, result.metrics.mean.p5,
                 result.metrics.mean.p20, result.metrics_path.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
