#include "skillsim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "skillsim/binio.hpp"
#include "skillsim/text.hpp"

namespace skillsim {

namespace {

constexpr char kBm25Magic[4] = {'J', 'S', 'B', 'M'};
constexpr char kStatsMagic[4] = {'J', 'S', 'T', 'F'};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  Rng rng(seed ^ (0xbf58476d1ce4e5b9ULL * (salt + 1)));
  rng.next_u64();
  return rng.next_u64();
}

}  // namespace

BM25Index BM25Index::build(
    const std::vector<std::pair<std::string, std::string>>& corpus,
    BM25Params params) {
  if (corpus.empty()) throw std::runtime_error("bm25: empty corpus");
  if (params.k1 < 0 || params.b < 0 || params.b > 1) {
    throw std::runtime_error("bm25: invalid parameters");
  }

  std::vector<std::pair<std::string, std::string>> sorted = corpus;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].first == sorted[i - 1].first) {
      throw std::runtime_error("bm25: duplicate doc id \"" + sorted[i].first +
                               "\"");
    }
  }

  BM25Index index;
  index.params_ = params;

  std::map<std::string, std::uint32_t> df;
  std::vector<std::map<std::string, std::uint32_t>> term_counts;
  std::uint64_t total_len = 0;
  for (const auto& [id, title] : sorted) {
    index.doc_ids_.push_back(id);
    std::string norm = normalize_title(title);
    std::map<std::string, std::uint32_t> counts;
    std::uint32_t len = 0;
    for (std::string_view tok : split_tokens(norm)) {
      counts[std::string(tok)] += 1;
      ++len;
    }
    for (const auto& [term, tf] : counts) df[term] += 1;
    index.doc_lengths_.push_back(len);
    total_len += len;
    term_counts.push_back(std::move(counts));
  }
  index.avgdl_ =
      static_cast<double>(total_len) / static_cast<double>(sorted.size());
  if (index.avgdl_ <= 0.0) {
    throw std::runtime_error("bm25: corpus has no tokens");
  }

  std::map<std::string, std::uint32_t> term_ids;
  for (const auto& [term, count] : df) {
    term_ids.emplace(term, static_cast<std::uint32_t>(index.terms_.size()));
    index.terms_.push_back(term);
    index.term_df_.push_back(count);
  }
  index.doc_terms_.resize(sorted.size());
  for (std::size_t d = 0; d < term_counts.size(); ++d) {
    for (const auto& [term, tf] : term_counts[d]) {
      index.doc_terms_[d].emplace(term_ids.at(term), tf);
    }
  }
  return index;
}

double BM25Index::idf(std::uint32_t df) const {
  double n = static_cast<double>(doc_ids_.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::uint32_t BM25Index::doc_frequency(const std::string& term) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
  if (it == terms_.end() || *it != term) return 0;
  return term_df_[static_cast<std::size_t>(it - terms_.begin())];
}

double BM25Index::score(const std::string& query,
                        const std::string& doc_id) const {
  auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
  if (it == doc_ids_.end() || *it != doc_id) {
    throw std::runtime_error("bm25: unknown doc id \"" + doc_id + "\"");
  }
  std::size_t d = static_cast<std::size_t>(it - doc_ids_.begin());

  std::string norm = normalize_title(query);
  double dl = doc_lengths_[d];
  double denom_scale = 1.0 - params_.b + params_.b * dl / avgdl_;
  double score = 0.0;
  for (std::string_view tok : split_tokens(norm)) {
    auto tit = std::lower_bound(terms_.begin(), terms_.end(), tok);
    if (tit == terms_.end() || *tit != tok) continue;  // unseen query term
    std::size_t t = static_cast<std::size_t>(tit - terms_.begin());
    auto cit = doc_terms_[d].find(static_cast<std::uint32_t>(t));
    if (cit == doc_terms_[d].end()) continue;
    double tf = cit->second;
    score += idf(term_df_[t]) * tf * (params_.k1 + 1.0) /
             (tf + params_.k1 * denom_scale);
  }
  return score;
}

std::vector<std::pair<std::string, double>> BM25Index::score_all(
    const std::string& query) const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(doc_ids_.size());
  for (const std::string& id : doc_ids_) {
    out.emplace_back(id, score(query, id));
  }
  return out;
}

void BM25Index::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kBm25Magic);
  w.u32(1);
  w.f64(params_.k1);
  w.f64(params_.b);
  w.f64(avgdl_);
  w.u32(static_cast<std::uint32_t>(terms_.size()));
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    w.str(terms_[t]);
    w.u32(term_df_[t]);
  }
  w.u32(static_cast<std::uint32_t>(doc_ids_.size()));
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    w.str(doc_ids_[d]);
    w.u32(doc_lengths_[d]);
    w.u32(static_cast<std::uint32_t>(doc_terms_[d].size()));
    for (const auto& [term, tf] : doc_terms_[d]) {
      w.u32(term);
      w.u32(tf);
    }
  }
  w.close();
}

BM25Index BM25Index::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kBm25Magic);
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));
  }
  BM25Index index;
  index.params_.k1 = r.f64();
  index.params_.b = r.f64();
  index.avgdl_ = r.f64();
  std::uint32_t n_terms = r.u32();
  for (std::uint32_t t = 0; t < n_terms; ++t) {
    index.terms_.push_back(r.str());
    index.term_df_.push_back(r.u32());
  }
  std::uint32_t n_docs = r.u32();
  index.doc_terms_.resize(n_docs);
  for (std::uint32_t d = 0; d < n_docs; ++d) {
    index.doc_ids_.push_back(r.str());
    index.doc_lengths_.push_back(r.u32());
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t term = r.u32();
      std::uint32_t tf = r.u32();
      index.doc_terms_[d].emplace(term, tf);
    }
  }
  r.expect_end();
  return index;
}

SkillStats SkillStats::build(const std::vector<MergedRecord>& merged) {
  SkillStats stats;
  stats.n_titles = static_cast<std::uint32_t>(merged.size());
  std::map<std::string, std::uint32_t> df;
  for (const MergedRecord& rec : merged) {
    for (const auto& [skill, count] : rec.skill_counts) df[skill] += 1;
  }
  for (const auto& [skill, count] : df) {
    stats.skills.push_back(skill);
    stats.doc_freq.push_back(count);
  }
  return stats;
}

void SkillStats::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kStatsMagic);
  w.u32(1);
  w.u32(n_titles);
  w.u32(static_cast<std::uint32_t>(skills.size()));
  for (std::size_t s = 0; s < skills.size(); ++s) {
    w.str(skills[s]);
    w.u32(doc_freq[s]);
  }
  w.close();
}

SkillStats SkillStats::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kStatsMagic);
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));
  }
  SkillStats stats;
  stats.n_titles = r.u32();
  std::uint32_t n = r.u32();
  for (std::uint32_t s = 0; s < n; ++s) {
    stats.skills.push_back(r.str());
    stats.doc_freq.push_back(r.u32());
  }
  r.expect_end();
  return stats;
}

TfidfVector tfidf_vector(const std::map<std::string, std::uint32_t>& skills,
                         const SkillStats& stats) {
  TfidfVector vec;
  for (const auto& [skill, count] : skills) {
    auto it = std::lower_bound(stats.skills.begin(), stats.skills.end(), skill);
    if (it == stats.skills.end() || *it != skill) continue;
    std::size_t id = static_cast<std::size_t>(it - stats.skills.begin());
    double idf = std::log(static_cast<double>(stats.n_titles) /
                          static_cast<double>(stats.doc_freq[id]));
    vec.components.emplace_back(static_cast<std::uint32_t>(id),
                                static_cast<double>(count) * idf);
  }
  for (const auto& [id, value] : vec.components) {
    if (value != 0.0) {
      vec.rankable = true;
      break;
    }
  }
  return vec;
}

double tfidf_cosine(const TfidfVector& a, const TfidfVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  std::size_t i = 0, j = 0;
  for (const auto& [id, v] : a.components) na += v * v;
  for (const auto& [id, v] : b.components) nb += v * v;
  while (i < a.components.size() && j < b.components.size()) {
    if (a.components[i].first == b.components[j].first) {
      dot += a.components[i].second * b.components[j].second;
      ++i;
      ++j;
    } else if (a.components[i].first < b.components[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EncoderModel train_negative_sampling(const std::vector<JobSkillRecord>& raw,
                                     const EncoderConfig& config,
                                     std::uint32_t negatives_k,
                                     const EncoderTrainOptions& options) {
  config.validate();

  // Positive pairs and the skill universe with unigram counts.
  std::vector<MergedRecord> merged = merge_by_title(raw);
  NoiseDistribution noise = build_noise_distribution(merged, 0.75);

  struct Pair {
    std::uint32_t record;
    std::uint32_t skill;
  };
  std::vector<Pair> positives;
  std::vector<std::vector<std::uint32_t>> record_skills(raw.size());
  for (std::size_t rec = 0; rec < raw.size(); ++rec) {
    for (const std::string& skill : raw[rec].skills) {
      std::uint32_t id = static_cast<std::uint32_t>(noise.index_of(skill));
      record_skills[rec].push_back(id);
      positives.push_back({static_cast<std::uint32_t>(rec), id});
    }
  }
  if (positives.empty()) {
    throw std::runtime_error(
        "train_negative_sampling: no (title, skill) pairs");
  }

  std::vector<std::string> titles;
  titles.reserve(raw.size());
  for (const JobSkillRecord& rec : raw) titles.push_back(rec.title_key);

  EncoderModel model;
  model.config = config;
  model.tokenizer = Tokenizer::train(titles, config.tokenizer_vocab);
  model.net = init_encoder_net<float>(config, model.tokenizer.vocab_size(),
                                      derive_seed(config.seed, 0));
  model.ns_skills = noise.skills;
  model.ns_skill_out =
      Matrix<float>(noise.skills.size(), config.output_dim);

  std::vector<std::vector<std::uint32_t>> tokens(raw.size());
  for (std::size_t rec = 0; rec < raw.size(); ++rec) {
    tokens[rec] = encoder_input_ids(model.tokenizer, raw[rec].title_key);
    if (tokens[rec].empty() && !record_skills[rec].empty()) {
      throw std::runtime_error(
          "train_negative_sampling: title normalizes to empty: \"" +
          raw[rec].title_key + "\"");
    }
  }

  const std::uint64_t steps_per_epoch =
      options.steps_per_epoch > 0
          ? options.steps_per_epoch
          : (positives.size() + config.batch_size - 1) / config.batch_size;
  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(config.epochs) * steps_per_epoch;

  auto emit_snapshot = [&](std::uint64_t step) {
    if (options.snapshot && options.snapshot_every > 0) {
      options.snapshot(step, model);
    }
  };
  emit_snapshot(0);
  if (total_steps == 0) return model;

  // Negatives are drawn on the batch-assembly thread so the draw sequence
  // does not depend on the worker count.
  Rng neg_rng(derive_seed(config.seed, 2));
  auto draw_negatives = [&](std::uint32_t record,
                            std::vector<std::uint32_t>& out) {
    out.clear();
    const std::vector<std::uint32_t>& own = record_skills[record];
    if (own.size() >= noise.skills.size()) return;  // nothing to contrast
    for (std::uint32_t k = 0; k < negatives_k; ++k) {
      for (;;) {
        std::uint32_t cand = static_cast<std::uint32_t>(noise.sample(neg_rng));
        if (std::find(own.begin(), own.end(), cand) == own.end()) {
          out.push_back(cand);
          break;
        }
      }
    }
  };

  struct BatchItem {
    std::uint32_t record;
    std::uint32_t skill;
    std::vector<std::uint32_t> negatives;
  };

  class PairStream {
   public:
    PairStream(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
      for (std::size_t i = 0; i < n; ++i) order_[i] = i;
      shuffle(order_, rng_);
    }
    std::size_t next() {
      if (cursor_ == order_.size()) {
        shuffle(order_, rng_);
        cursor_ = 0;
      }
      return order_[cursor_++];
    }

   private:
    std::vector<std::size_t> order_;
    Rng rng_;
    std::size_t cursor_ = 0;
  };
  PairStream stream(positives.size(), derive_seed(config.seed, 1));

  const std::size_t n_params = model.net.param_count();
  int workers = std::max(1, options.workers);
  std::vector<std::vector<float>> worker_grads(
      workers, std::vector<float>(n_params, 0.0f));
  std::vector<Matrix<float>> worker_skill_grads(
      workers, Matrix<float>(noise.skills.size(), config.output_dim));
  std::vector<double> worker_loss(workers, 0.0);
  std::vector<float> velocity(n_params, 0.0f);
  std::vector<float> skill_velocity(model.ns_skill_out.size(), 0.0f);

  std::vector<BatchItem> batch(config.batch_size);
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::uint64_t epoch_samples = 0;
    for (std::uint64_t bs = 0; bs < steps_per_epoch; ++bs) {
      std::size_t batch_n =
          std::min<std::size_t>(config.batch_size, positives.size());
      for (std::size_t i = 0; i < batch_n; ++i) {
        const Pair& p = positives[stream.next()];
        batch[i].record = p.record;
        batch[i].skill = p.skill;
        draw_negatives(p.record, batch[i].negatives);
      }

      auto run_range = [&](int w, std::size_t begin, std::size_t end) {
        std::vector<float>& grad = worker_grads[w];
        Matrix<float>& skill_grad = worker_skill_grads[w];
        std::fill(grad.begin(), grad.end(), 0.0f);
        std::fill(skill_grad.data.begin(), skill_grad.data.end(), 0.0f);
        worker_loss[w] = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
          const BatchItem& item = batch[i];
          worker_loss[w] += ns_loss_and_grad<float>(
              model.net, std::span<const std::uint32_t>(tokens[item.record]),
              model.ns_skill_out, item.skill,
              std::span<const std::uint32_t>(item.negatives),
              std::span<float>(grad), skill_grad);
        }
      };

      int nw = static_cast<int>(
          std::min<std::size_t>(static_cast<std::size_t>(workers), batch_n));
      if (nw <= 1) {
        run_range(0, 0, batch_n);
      } else {
        std::vector<std::thread> threads;
        std::size_t chunk = (batch_n + nw - 1) / nw;
        for (int w = 0; w < nw; ++w) {
          std::size_t begin = static_cast<std::size_t>(w) * chunk;
          std::size_t end = std::min(batch_n, begin + chunk);
          if (begin >= end) break;
          threads.emplace_back(run_range, w, begin, end);
        }
        for (auto& t : threads) t.join();
      }

      double batch_loss = 0.0;
      for (int w = 0; w < nw; ++w) batch_loss += worker_loss[w];
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "train_negative_sampling: non-finite loss at epoch " +
            std::to_string(epoch + 1) + ", step " + std::to_string(step));
      }
      epoch_loss += batch_loss;
      epoch_samples += batch_n;

      double frac = static_cast<double>(step) / static_cast<double>(total_steps);
      float lr = static_cast<float>(config.initial_lr *
                                    std::max(1e-4, 1.0 - frac));
      float inv_batch = 1.0f / static_cast<float>(batch_n);
      float mu = static_cast<float>(config.momentum);
      float decay = 1.0f - lr * static_cast<float>(config.weight_decay);
      float* grad0 = worker_grads[0].data();
      float* sg0 = worker_skill_grads[0].data.data();
      for (int w = 1; w < nw; ++w) {
        const float* grad = worker_grads[w].data();
        for (std::size_t p = 0; p < n_params; ++p) grad0[p] += grad[p];
        const float* sg = worker_skill_grads[w].data.data();
        for (std::size_t p = 0; p < model.ns_skill_out.size(); ++p) {
          sg0[p] += sg[p];
        }
      }
      // One global clip across the encoder and skill-head gradients.
      double grad_norm_sq = 0.0;
      for (std::size_t p = 0; p < n_params; ++p) {
        double g = static_cast<double>(grad0[p]) * inv_batch;
        grad_norm_sq += g * g;
      }
      for (std::size_t p = 0; p < model.ns_skill_out.size(); ++p) {
        double g = static_cast<double>(sg0[p]) * inv_batch;
        grad_norm_sq += g * g;
      }
      float clip_scale = inv_batch;
      if (config.grad_clip > 0.0) {
        double norm = std::sqrt(grad_norm_sq);
        if (norm > config.grad_clip) {
          clip_scale = static_cast<float>(inv_batch * config.grad_clip / norm);
        }
      }
      float* params = model.net.params.data();
      for (std::size_t p = 0; p < n_params; ++p) {
        velocity[p] = mu * velocity[p] + grad0[p] * clip_scale;
        params[p] = params[p] * decay - lr * velocity[p];
      }
      float* sw = model.ns_skill_out.data.data();
      for (std::size_t p = 0; p < model.ns_skill_out.size(); ++p) {
        skill_velocity[p] = mu * skill_velocity[p] + sg0[p] * clip_scale;
        sw[p] = sw[p] * decay - lr * skill_velocity[p];
      }

      ++step;
      if (options.snapshot && options.snapshot_every > 0 &&
          (step % options.snapshot_every == 0 || step == total_steps)) {
        emit_snapshot(step);
      }
    }
    if (options.epoch_mean_loss) {
      options.epoch_mean_loss->push_back(
          epoch_samples ? epoch_loss / static_cast<double>(epoch_samples)
                        : 0.0);
    }
  }
  return model;
}

}  // namespace skillsim
