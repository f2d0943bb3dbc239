#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillsim/corpus.hpp"
#include "skillsim/matrix.hpp"
#include "skillsim/rng.hpp"

namespace skillsim {

enum class CountDamping { kNone, kLog1p };

struct AuxConfig {
  std::uint32_t dim = 100;
  std::uint32_t epochs = 20;
  double initial_lr = 0.025;
  double final_lr = 0.0001;
  std::uint32_t negatives_k = 5;
  double noise_power = 0.75;
  CountDamping damping = CountDamping::kLog1p;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Skill sampling distribution: weight(s) = total_count(s)^power.
struct NoiseDistribution {
  std::vector<std::string> skills;  // sorted canonical names
  std::vector<double> weights;      // positive, aligned with skills
  std::vector<double> cumulative;   // prefix sums of weights

  std::size_t sample(Rng& rng) const;
  double probability(std::size_t idx) const {
    return weights[idx] / cumulative.back();
  }
  std::size_t index_of(const std::string& skill) const;
};

NoiseDistribution build_noise_distribution(
    const std::vector<MergedRecord>& merged, double power);

/// Document embeddings over skill multisets plus the skill output matrix.
struct AuxModel {
  AuxConfig config;
  std::vector<std::string> title_keys;
  std::unordered_map<std::string, std::uint32_t> title_index;
  Matrix<float> doc_vectors;  // n_titles x dim
  NoiseDistribution noise;    // skill universe + sampling weights
  Matrix<float> skill_out;    // n_skills x dim, rows align with noise.skills

  std::uint32_t dim() const { return config.dim; }

  void save(const std::string& path) const;
  static AuxModel load(const std::string& path);
};

/// Unit-normalized document vectors keyed by title.
struct AuxDataset {
  std::uint32_t dim = 0;
  std::vector<std::pair<std::string, std::vector<float>>> pairs;

  void save(const std::string& path) const;
  static AuxDataset load(const std::string& path);

  /// Concatenation with duplicate-key detection (multi-language training).
  void append(const AuxDataset& other);
};

struct AuxTrainReport {
  std::vector<double> epoch_mean_loss;
  std::uint64_t skipped_empty_titles = 0;
};

namespace detail {

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) {
    T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(x);
  return e / (T(1) + e);
}

// -log sigmoid(x), stable for large |x|.
template <typename T>
T neg_log_sigmoid(T x) {
  if (x >= T(0)) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

}  // namespace detail

/// One SGD step of L = -log s(d.wp) - sum_n log s(-d.wn). All partials are
/// evaluated at the incoming parameter values (the dots are cached before
/// any write), so the step is exactly one gradient step of the joint loss.
/// Returns the loss before the update. lr = 0 leaves everything unchanged.
template <typename T>
T pvdbow_step(std::span<T> doc, std::span<T> positive,
              std::span<T*> negatives, T lr) {
  const std::size_t dim = doc.size();
  T dot_pos = dot(doc.data(), positive.data(), dim);
  std::vector<T> dot_neg(negatives.size());
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    dot_neg[n] = dot(doc.data(), negatives[n], dim);
  }

  T loss = detail::neg_log_sigmoid(dot_pos);
  for (T dn : dot_neg) loss += detail::neg_log_sigmoid(-dn);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("pvdbow_step: non-finite loss");
  }

  std::vector<T> doc_grad(dim, T(0));
  T g_pos = detail::stable_sigmoid(dot_pos) - T(1);
  for (std::size_t i = 0; i < dim; ++i) doc_grad[i] += g_pos * positive[i];
  for (std::size_t i = 0; i < dim; ++i) positive[i] -= lr * g_pos * doc[i];

  for (std::size_t n = 0; n < negatives.size(); ++n) {
    T g_neg = detail::stable_sigmoid(dot_neg[n]);
    T* w = negatives[n];
    for (std::size_t i = 0; i < dim; ++i) doc_grad[i] += g_neg * w[i];
    for (std::size_t i = 0; i < dim; ++i) w[i] -= lr * g_neg * doc[i];
  }
  for (std::size_t i = 0; i < dim; ++i) doc[i] -= lr * doc_grad[i];
  return loss;
}

AuxModel train_pvdbow(const std::vector<MergedRecord>& merged,
                      const AuxConfig& config, int workers = 1,
                      AuxTrainReport* report = nullptr);

std::vector<float> infer_doc_vector(
    const AuxModel& model, const std::map<std::string, std::uint32_t>& skills,
    const AuxConfig& config);

AuxDataset export_aux_dataset(const AuxModel& model);

}  // namespace skillsim
