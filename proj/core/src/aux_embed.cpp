#include "skillsim/aux_embed.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "skillsim/binio.hpp"

namespace skillsim {

namespace {

constexpr char kAuxModelMagic[4] = {'J', 'S', 'A', 'X'};
constexpr char kAuxDatasetMagic[4] = {'J', 'S', 'D', 'X'};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b) {
  Rng rng(seed);
  rng.next_u64();
  Rng forked = rng.fork(a * 0x9e3779b9ULL + b + 1);
  return forked.next_u64();
}

// Per-title sampling state: distinct skills with damped cumulative weights.
struct TitleSamples {
  std::vector<std::uint32_t> skill_ids;
  std::vector<double> cumulative;

  std::uint32_t sample(Rng& rng) const {
    double u = rng.next_double() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()),
        cumulative.size() - 1);
    return skill_ids[idx];
  }
};

double damp(CountDamping damping, std::uint32_t count) {
  switch (damping) {
    case CountDamping::kNone:
      return static_cast<double>(count);
    case CountDamping::kLog1p:
      return std::log1p(static_cast<double>(count));
  }
  return static_cast<double>(count);
}

void init_doc_vector(float* row, std::uint32_t dim, Rng& rng) {
  for (std::uint32_t i = 0; i < dim; ++i) {
    row[i] = static_cast<float>((rng.next_double() - 0.5) / dim);
  }
}

// Draws a negative skill id, rejecting the positive. With a single-skill
// universe there is nothing to contrast against and no negative is drawn.
bool sample_negative(const NoiseDistribution& noise, std::uint32_t positive,
                     Rng& rng, std::uint32_t& out) {
  if (noise.skills.size() <= 1) return false;
  for (;;) {
    std::uint32_t id = static_cast<std::uint32_t>(noise.sample(rng));
    if (id != positive) {
      out = id;
      return true;
    }
  }
}

}  // namespace

void AuxConfig::validate() const {
  if (dim < 2) throw std::runtime_error("aux config: dim must be >= 2");
  if (initial_lr <= 0) {
    throw std::runtime_error("aux config: initial_lr must be > 0");
  }
  if (final_lr < 0 || final_lr > initial_lr) {
    throw std::runtime_error(
        "aux config: need 0 <= final_lr <= initial_lr");
  }
  if (negatives_k == 0) {
    throw std::runtime_error("aux config: negatives_k must be >= 1");
  }
}

std::size_t NoiseDistribution::sample(Rng& rng) const {
  double u = rng.next_double() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               cumulative.size() - 1);
}

std::size_t NoiseDistribution::index_of(const std::string& skill) const {
  auto it = std::lower_bound(skills.begin(), skills.end(), skill);
  if (it == skills.end() || *it != skill) {
    throw std::runtime_error("unknown skill: " + skill);
  }
  return static_cast<std::size_t>(it - skills.begin());
}

NoiseDistribution build_noise_distribution(
    const std::vector<MergedRecord>& merged, double power) {
  std::map<std::string, std::uint64_t> totals;
  for (const MergedRecord& rec : merged) {
    for (const auto& [skill, count] : rec.skill_counts) {
      totals[skill] += count;
    }
  }
  if (totals.empty()) {
    throw std::runtime_error("noise distribution: no skills observed");
  }
  NoiseDistribution noise;
  noise.skills.reserve(totals.size());
  noise.weights.reserve(totals.size());
  double acc = 0.0;
  for (const auto& [skill, total] : totals) {
    double w = std::pow(static_cast<double>(total), power);
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::runtime_error("noise distribution: bad weight for " + skill);
    }
    noise.skills.push_back(skill);
    noise.weights.push_back(w);
    acc += w;
    noise.cumulative.push_back(acc);
  }
  return noise;
}

AuxModel train_pvdbow(const std::vector<MergedRecord>& merged,
                      const AuxConfig& config, int workers,
                      AuxTrainReport* report) {
  config.validate();
  if (merged.empty()) throw std::runtime_error("train_pvdbow: empty dataset");

  AuxModel model;
  model.config = config;
  model.noise = build_noise_distribution(merged, config.noise_power);
  const std::uint32_t dim = config.dim;

  model.title_keys.reserve(merged.size());
  for (const MergedRecord& rec : merged) {
    auto [it, inserted] =
        model.title_index.emplace(rec.title_key, model.title_keys.size());
    if (!inserted) {
      throw std::runtime_error("train_pvdbow: duplicate title key \"" +
                               rec.title_key + "\"");
    }
    model.title_keys.push_back(rec.title_key);
  }

  model.doc_vectors = Matrix<float>(model.title_keys.size(), dim);
  model.skill_out = Matrix<float>(model.noise.skills.size(), dim);
  {
    Rng init_rng(derive_seed(config.seed, 0, 0));
    for (std::size_t t = 0; t < model.title_keys.size(); ++t) {
      init_doc_vector(model.doc_vectors.row(t), dim, init_rng);
    }
  }

  // Per-title damped sampling tables. Titles with no skills are skipped.
  std::vector<TitleSamples> samples(merged.size());
  std::uint64_t skipped = 0;
  std::uint64_t draws_per_epoch = 0;
  for (std::size_t t = 0; t < merged.size(); ++t) {
    double acc = 0.0;
    for (const auto& [skill, count] : merged[t].skill_counts) {
      samples[t].skill_ids.push_back(
          static_cast<std::uint32_t>(model.noise.index_of(skill)));
      acc += damp(config.damping, count);
      samples[t].cumulative.push_back(acc);
    }
    if (samples[t].skill_ids.empty()) {
      ++skipped;
    } else {
      draws_per_epoch += samples[t].skill_ids.size();
    }
  }
  if (report) report->skipped_empty_titles = skipped;
  if (draws_per_epoch == 0 || config.epochs == 0) {
    if (report) report->epoch_mean_loss.clear();
    return model;
  }

  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(config.epochs) * draws_per_epoch;
  std::atomic<std::uint64_t> global_step{0};
  auto step_lr = [&](std::uint64_t step) {
    double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return config.initial_lr + (config.final_lr - config.initial_lr) * frac;
  };

  int nw = std::max(1, workers);
  if (static_cast<std::size_t>(nw) > merged.size()) {
    nw = static_cast<int>(merged.size());
  }

  std::vector<double> epoch_losses;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<double> worker_loss(nw, 0.0);
    std::vector<std::uint64_t> worker_count(nw, 0);

    auto run_range = [&](int w, std::size_t begin, std::size_t end) {
      Rng rng(derive_seed(config.seed, epoch + 1, static_cast<std::uint64_t>(w)));
      std::vector<float*> neg_ptrs;
      for (std::size_t t = begin; t < end; ++t) {
        const TitleSamples& ts = samples[t];
        if (ts.skill_ids.empty()) continue;
        float* doc = model.doc_vectors.row(t);
        for (std::size_t d = 0; d < ts.skill_ids.size(); ++d) {
          std::uint32_t pos = ts.sample(rng);
          neg_ptrs.clear();
          for (std::uint32_t k = 0; k < config.negatives_k; ++k) {
            std::uint32_t neg;
            if (sample_negative(model.noise, pos, rng, neg)) {
              neg_ptrs.push_back(model.skill_out.row(neg));
            }
          }
          std::uint64_t step = global_step.fetch_add(1);
          float lr = static_cast<float>(step_lr(step));
          float loss = pvdbow_step<float>(
              std::span<float>(doc, dim),
              std::span<float>(model.skill_out.row(pos), dim),
              std::span<float*>(neg_ptrs), lr);
          worker_loss[w] += loss;
          worker_count[w] += 1;
        }
      }
    };

    if (nw == 1) {
      run_range(0, 0, merged.size());
    } else {
      // Hogwild-style: doc vectors are worker-private (titles are sharded),
      // races on shared skill rows are tolerated. Determinism is only
      // guaranteed for a single worker.
      std::vector<std::thread> threads;
      std::size_t chunk = (merged.size() + nw - 1) / nw;
      for (int w = 0; w < nw; ++w) {
        std::size_t begin = static_cast<std::size_t>(w) * chunk;
        std::size_t end = std::min(merged.size(), begin + chunk);
        if (begin >= end) break;
        threads.emplace_back(run_range, w, begin, end);
      }
      for (auto& t : threads) t.join();
    }

    double loss_sum = 0.0;
    std::uint64_t count = 0;
    for (int w = 0; w < nw; ++w) {
      loss_sum += worker_loss[w];
      count += worker_count[w];
    }
    epoch_losses.push_back(count ? loss_sum / static_cast<double>(count) : 0.0);
  }
  if (report) report->epoch_mean_loss = std::move(epoch_losses);
  return model;
}

std::vector<float> infer_doc_vector(
    const AuxModel& model, const std::map<std::string, std::uint32_t>& skills,
    const AuxConfig& config) {
  config.validate();
  const std::uint32_t dim = model.dim();
  if (config.dim != dim) {
    throw std::runtime_error("infer_doc_vector: config dim mismatch");
  }

  TitleSamples ts;
  double acc = 0.0;
  for (const auto& [skill, count] : skills) {
    auto it = std::lower_bound(model.noise.skills.begin(),
                               model.noise.skills.end(), skill);
    if (it == model.noise.skills.end() || *it != skill) continue;  // unknown
    ts.skill_ids.push_back(
        static_cast<std::uint32_t>(it - model.noise.skills.begin()));
    acc += damp(config.damping, count);
    ts.cumulative.push_back(acc);
  }
  if (ts.skill_ids.empty()) {
    throw std::runtime_error("infer_doc_vector: no known skills");
  }

  Rng rng(derive_seed(config.seed, 0x1f, 0));
  std::vector<float> doc(dim);
  init_doc_vector(doc.data(), dim, rng);
  if (config.epochs == 0) return doc;

  // Output vectors stay frozen: updates go to a scratch copy of the row.
  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(config.epochs) * ts.skill_ids.size();
  std::vector<float> w_scratch(dim);
  std::vector<float> neg_scratch;
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t d = 0; d < ts.skill_ids.size(); ++d) {
      std::uint32_t pos = ts.sample(rng);
      std::copy_n(model.skill_out.row(pos), dim, w_scratch.begin());
      std::vector<float*> neg_ptrs;
      neg_scratch.clear();
      std::vector<std::uint32_t> neg_ids;
      for (std::uint32_t k = 0; k < config.negatives_k; ++k) {
        std::uint32_t neg;
        if (sample_negative(model.noise, pos, rng, neg)) neg_ids.push_back(neg);
      }
      neg_scratch.resize(neg_ids.size() * dim);
      for (std::size_t n = 0; n < neg_ids.size(); ++n) {
        std::copy_n(model.skill_out.row(neg_ids[n]), dim,
                    neg_scratch.begin() + n * dim);
        neg_ptrs.push_back(neg_scratch.data() + n * dim);
      }
      double frac =
          static_cast<double>(step) / static_cast<double>(total_steps);
      float lr = static_cast<float>(config.initial_lr +
                                    (config.final_lr - config.initial_lr) * frac);
      pvdbow_step<float>(std::span<float>(doc.data(), dim),
                         std::span<float>(w_scratch.data(), dim),
                         std::span<float*>(neg_ptrs), lr);
      ++step;
    }
  }
  return doc;
}

AuxDataset export_aux_dataset(const AuxModel& model) {
  AuxDataset out;
  out.dim = model.dim();
  out.pairs.reserve(model.title_keys.size());
  for (std::size_t t = 0; t < model.title_keys.size(); ++t) {
    const float* row = model.doc_vectors.row(t);
    double norm_sq = 0.0;
    for (std::uint32_t i = 0; i < out.dim; ++i) {
      norm_sq += static_cast<double>(row[i]) * row[i];
    }
    if (norm_sq <= 0.0) {
      throw std::runtime_error("export_aux_dataset: zero vector for title \"" +
                               model.title_keys[t] + "\"");
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<float> vec(out.dim);
    for (std::uint32_t i = 0; i < out.dim; ++i) {
      vec[i] = static_cast<float>(row[i] * inv);
    }
    out.pairs.emplace_back(model.title_keys[t], std::move(vec));
  }
  return out;
}

void AuxModel::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kAuxModelMagic);
  w.u32(1);
  w.u32(config.dim);
  w.u32(static_cast<std::uint32_t>(title_keys.size()));
  w.u32(static_cast<std::uint32_t>(noise.skills.size()));
  for (std::size_t t = 0; t < title_keys.size(); ++t) {
    w.str(title_keys[t]);
    w.f32_row(doc_vectors.row(t), config.dim);
  }
  for (std::size_t s = 0; s < noise.skills.size(); ++s) {
    w.str(noise.skills[s]);
    w.f32_row(skill_out.row(s), config.dim);
  }
  for (double weight : noise.weights) w.f64(weight);
  w.close();
}

AuxModel AuxModel::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kAuxModelMagic);
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));
  }
  AuxModel model;
  model.config.dim = r.u32();
  std::uint32_t n_titles = r.u32();
  std::uint32_t n_skills = r.u32();
  model.doc_vectors = Matrix<float>(n_titles, model.config.dim);
  for (std::uint32_t t = 0; t < n_titles; ++t) {
    std::string key = r.str();
    model.title_index.emplace(key, t);
    model.title_keys.push_back(std::move(key));
    r.f32_row(model.doc_vectors.row(t), model.config.dim);
  }
  model.skill_out = Matrix<float>(n_skills, model.config.dim);
  for (std::uint32_t s = 0; s < n_skills; ++s) {
    model.noise.skills.push_back(r.str());
    r.f32_row(model.skill_out.row(s), model.config.dim);
  }
  double acc = 0.0;
  for (std::uint32_t s = 0; s < n_skills; ++s) {
    double weight = r.f64();
    model.noise.weights.push_back(weight);
    acc += weight;
    model.noise.cumulative.push_back(acc);
  }
  r.expect_end();
  return model;
}

void AuxDataset::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kAuxDatasetMagic);
  w.u32(1);
  w.u32(dim);
  w.u32(static_cast<std::uint32_t>(pairs.size()));
  w.u32(0);  // no skill section
  for (const auto& [key, vec] : pairs) {
    w.str(key);
    w.f32_row(vec.data(), vec.size());
  }
  w.close();
}

AuxDataset AuxDataset::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kAuxDatasetMagic);
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));
  }
  AuxDataset out;
  out.dim = r.u32();
  std::uint32_t n = r.u32();
  std::uint32_t n_skills = r.u32();
  if (n_skills != 0) {
    throw std::runtime_error(path + ": dataset must not carry skill rows");
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string key = r.str();
    std::vector<float> vec(out.dim);
    r.f32_row(vec.data(), out.dim);
    out.pairs.emplace_back(std::move(key), std::move(vec));
  }
  r.expect_end();
  return out;
}

void AuxDataset::append(const AuxDataset& other) {
  if (pairs.empty() && dim == 0) {
    dim = other.dim;
  }
  if (other.dim != dim) {
    throw std::runtime_error("aux dataset append: dimension mismatch");
  }
  std::unordered_map<std::string, bool> seen;
  seen.reserve(pairs.size());
  for (const auto& [key, vec] : pairs) seen.emplace(key, true);
  for (const auto& [key, vec] : other.pairs) {
    if (seen.count(key)) {
      throw std::runtime_error("aux dataset append: duplicate title \"" + key +
                               "\"");
    }
    pairs.emplace_back(key, vec);
  }
}

}  // namespace skillsim
