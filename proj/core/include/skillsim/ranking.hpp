#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skillsim/aux_embed.hpp"
#include "skillsim/encoder.hpp"

namespace skillsim {

struct ScoredDoc {
  std::string doc_id;
  double score;
};

/// Ranked result for one query: scores descending, ties by doc_id ascending.
struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> items;
};

/// Brute-force exact cosine retrieval over unit vectors.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::uint32_t dim) : dim_(dim) {}

  static VectorIndex build(
      const std::vector<std::pair<std::string, std::string>>& corpus,
      const EncoderModel& model, std::uint64_t* skipped = nullptr);

  void add(const std::string& doc_id, std::vector<float> vector);

  /// Exact top-k by dot product (k = 0 returns everything).
  RankedList rank(const std::vector<float>& query_vector, std::size_t k,
                  const std::string& query_id = "") const;

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const float* vector_of(std::size_t i) const { return vectors_.data() + i * dim_; }

  void save(const std::string& path) const;
  static VectorIndex load(const std::string& path);

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;   // sorted, unique
  std::vector<float> vectors_;     // row per id
};

/// Sorts (doc, score) pairs by the standard tie rule and truncates to k.
RankedList make_ranked_list(const std::string& query_id,
                            std::vector<ScoredDoc> scored, std::size_t k);

/// Maps a raw title onto a fixed normalized-title set; top-1 is the answer.
RankedList normalize_job(
    const EncoderModel& model,
    const std::vector<std::pair<std::string, std::string>>& normalized_titles,
    const std::string& raw_title, std::size_t k);

RankedList normalize_job(const EncoderModel& model, const VectorIndex& index,
                         const std::string& raw_title, std::size_t k);

/// Top-N skills whose aux output vectors are closest to the encoded title.
/// Zero skill vectors are unrankable and excluded.
std::vector<std::pair<std::string, double>> predict_skills(
    const EncoderModel& model, const AuxModel& aux, const std::string& title,
    std::size_t n);

}  // namespace skillsim
