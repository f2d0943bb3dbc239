#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skillsim/corpus.hpp"
#include "skillsim/encoder.hpp"

namespace skillsim {

struct BM25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Lexical index over title text. Tokenization is the whitespace split of
/// normalize_title; idf uses the non-negative ln(1 + (N - df + 0.5)/(df + 0.5))
/// form so tiny corpora never produce negative term scores.
class BM25Index {
 public:
  static BM25Index build(
      const std::vector<std::pair<std::string, std::string>>& corpus,
      BM25Params params = {});

  double score(const std::string& query, const std::string& doc_id) const;
  /// Scores against every document; pairs of (doc_id, score).
  std::vector<std::pair<std::string, double>> score_all(
      const std::string& query) const;

  std::size_t doc_count() const { return doc_ids_.size(); }
  double average_doc_length() const { return avgdl_; }
  std::uint32_t doc_frequency(const std::string& term) const;
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const BM25Params& params() const { return params_; }

  void save(const std::string& path) const;
  static BM25Index load(const std::string& path);

 private:
  double idf(std::uint32_t df) const;

  BM25Params params_;
  std::vector<std::string> doc_ids_;                    // sorted
  std::vector<std::uint32_t> doc_lengths_;              // aligned with ids
  std::vector<std::map<std::uint32_t, std::uint32_t>> doc_terms_;  // term->tf
  std::vector<std::string> terms_;                      // sorted
  std::vector<std::uint32_t> term_df_;
  double avgdl_ = 0.0;
};

/// Per-skill document frequencies over a merged dataset.
struct SkillStats {
  std::uint32_t n_titles = 0;
  std::vector<std::string> skills;      // sorted
  std::vector<std::uint32_t> doc_freq;  // aligned

  static SkillStats build(const std::vector<MergedRecord>& merged);

  void save(const std::string& path) const;
  static SkillStats load(const std::string& path);
};

/// Sparse TF-IDF vector over skill ids: component = count * ln(N / df).
/// Unknown skills are dropped; `rankable` is false when nothing remains.
struct TfidfVector {
  std::vector<std::pair<std::uint32_t, double>> components;  // sorted by id
  bool rankable = false;
};

TfidfVector tfidf_vector(const std::map<std::string, std::uint32_t>& skills,
                         const SkillStats& stats);
double tfidf_cosine(const TfidfVector& a, const TfidfVector& b);

/// Contrastive baseline: trains the same encoder architecture to classify
/// (title, skill) pairs with k sampled negatives per positive, binary
/// cross-entropy on sigmoid(eta(j) . w_s). Step budget semantics are shared
/// with train_encoder so learning curves are comparable at equal budgets.
EncoderModel train_negative_sampling(const std::vector<JobSkillRecord>& raw,
                                     const EncoderConfig& config,
                                     std::uint32_t negatives_k = 5,
                                     const EncoderTrainOptions& options = {});

/// BCE loss and gradients for one (title, skill, negatives) example; the
/// double instantiation backs the finite-difference checks.
template <typename T>
T ns_loss_and_grad(const EncoderNet<T>& net,
                   std::span<const std::uint32_t> tokens,
                   Matrix<T>& skill_out, std::uint32_t positive,
                   std::span<const std::uint32_t> negatives,
                   std::span<T> net_grad, Matrix<T>& skill_grad) {
  EncoderTrace<T> trace;
  encoder_forward(net, tokens, trace);
  const std::uint32_t D = net.config.output_dim;

  auto dot_out = [&](std::uint32_t skill) {
    const T* w = skill_out.row(skill);
    T acc = T(0);
    for (std::uint32_t d = 0; d < D; ++d) acc += trace.output[d] * w[d];
    return acc;
  };

  std::vector<T> d_output(D, T(0));
  T dot_pos = dot_out(positive);
  T loss = detail::neg_log_sigmoid(dot_pos);
  T g_pos = detail::stable_sigmoid(dot_pos) - T(1);
  {
    const T* w = skill_out.row(positive);
    T* dw = skill_grad.row(positive);
    for (std::uint32_t d = 0; d < D; ++d) {
      d_output[d] += g_pos * w[d];
      dw[d] += g_pos * trace.output[d];
    }
  }
  for (std::uint32_t neg : negatives) {
    T dot_neg = dot_out(neg);
    loss += detail::neg_log_sigmoid(-dot_neg);
    T g_neg = detail::stable_sigmoid(dot_neg);
    const T* w = skill_out.row(neg);
    T* dw = skill_grad.row(neg);
    for (std::uint32_t d = 0; d < D; ++d) {
      d_output[d] += g_neg * w[d];
      dw[d] += g_neg * trace.output[d];
    }
  }
  encoder_backward(net, trace, std::span<const T>(d_output), net_grad);
  return loss;
}

}  // namespace skillsim
