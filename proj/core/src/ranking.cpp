#include "skillsim/ranking.hpp"

#include <algorithm>
#include <cmath>

#include "skillsim/binio.hpp"

namespace skillsim {

namespace {

constexpr char kIndexMagic[4] = {'J', 'S', 'I', 'X'};

}  // namespace

VectorIndex VectorIndex::build(
    const std::vector<std::pair<std::string, std::string>>& corpus,
    const EncoderModel& model, std::uint64_t* skipped) {
  VectorIndex index(model.config.output_dim);
  if (skipped) *skipped = 0;
  for (const auto& [id, title] : corpus) {
    std::vector<std::uint32_t> tokens = model.tokenizer.tokenize(title);
    if (tokens.empty()) {
      if (skipped) *skipped += 1;
      continue;
    }
    index.add(id, model.encode(title));
  }
  return index;
}

void VectorIndex::add(const std::string& doc_id, std::vector<float> vector) {
  if (vector.size() != dim_) {
    throw std::runtime_error("index: vector dimension mismatch");
  }
  double norm_sq = 0.0;
  for (float v : vector) norm_sq += static_cast<double>(v) * v;
  if (std::abs(norm_sq - 1.0) > 1e-4) {
    throw std::runtime_error("index: vector for \"" + doc_id +
                             "\" is not unit norm");
  }
  auto it = std::lower_bound(ids_.begin(), ids_.end(), doc_id);
  if (it != ids_.end() && *it == doc_id) {
    throw std::runtime_error("index: duplicate doc id \"" + doc_id + "\"");
  }
  std::size_t pos = static_cast<std::size_t>(it - ids_.begin());
  ids_.insert(it, doc_id);
  vectors_.insert(vectors_.begin() + static_cast<std::ptrdiff_t>(pos * dim_),
                  vector.begin(), vector.end());
}

RankedList make_ranked_list(const std::string& query_id,
                            std::vector<ScoredDoc> scored, std::size_t k) {
  for (const ScoredDoc& doc : scored) {
    if (!std::isfinite(doc.score)) {
      throw std::runtime_error("rank: non-finite score for \"" + doc.doc_id +
                               "\"");
    }
  }
  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  if (k > 0 && k < scored.size()) {
    std::partial_sort(scored.begin(),
                      scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  RankedList list;
  list.query_id = query_id;
  list.items = std::move(scored);
  return list;
}

RankedList VectorIndex::rank(const std::vector<float>& query_vector,
                             std::size_t k, const std::string& query_id) const {
  if (query_vector.size() != dim_) {
    throw std::runtime_error("rank: query dimension mismatch");
  }
  std::vector<ScoredDoc> scored;
  scored.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const float* v = vector_of(i);
    double dot = 0.0;
    for (std::uint32_t d = 0; d < dim_; ++d) {
      dot += static_cast<double>(v[d]) * query_vector[d];
    }
    scored.push_back({ids_[i], dot});
  }
  return make_ranked_list(query_id, std::move(scored), k);
}

void VectorIndex::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kIndexMagic);
  w.u32(1);
  w.u32(dim_);
  w.u32(static_cast<std::uint32_t>(ids_.size()));
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    w.str(ids_[i]);
    w.f32_row(vector_of(i), dim_);
  }
  w.close();
}

VectorIndex VectorIndex::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kIndexMagic);
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));
  }
  VectorIndex index(r.u32());
  std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string id = r.str();
    std::vector<float> vec(index.dim_);
    r.f32_row(vec.data(), index.dim_);
    index.add(id, std::move(vec));
  }
  r.expect_end();
  return index;
}

RankedList normalize_job(
    const EncoderModel& model,
    const std::vector<std::pair<std::string, std::string>>& normalized_titles,
    const std::string& raw_title, std::size_t k) {
  if (normalized_titles.empty()) {
    throw std::runtime_error("normalize_job: empty normalized title set");
  }
  VectorIndex index = VectorIndex::build(normalized_titles, model);
  return normalize_job(model, index, raw_title, k);
}

RankedList normalize_job(const EncoderModel& model, const VectorIndex& index,
                         const std::string& raw_title, std::size_t k) {
  return index.rank(model.encode(raw_title), k, raw_title);
}

std::vector<std::pair<std::string, double>> predict_skills(
    const EncoderModel& model, const AuxModel& aux, const std::string& title,
    std::size_t n) {
  if (model.config.output_dim != aux.dim()) {
    throw std::runtime_error("predict_skills: model and aux dim mismatch");
  }
  std::vector<float> encoded = model.encode(title);

  std::vector<ScoredDoc> scored;
  scored.reserve(aux.noise.skills.size());
  for (std::size_t s = 0; s < aux.noise.skills.size(); ++s) {
    const float* w = aux.skill_out.row(s);
    double norm_sq = 0.0, dot = 0.0;
    for (std::uint32_t d = 0; d < aux.dim(); ++d) {
      norm_sq += static_cast<double>(w[d]) * w[d];
      dot += static_cast<double>(w[d]) * encoded[d];
    }
    if (norm_sq == 0.0) continue;  // untrained skill, unrankable
    scored.push_back({aux.noise.skills[s], dot / std::sqrt(norm_sq)});
  }
  if (scored.empty()) {
    throw std::runtime_error("predict_skills: all skill vectors are zero");
  }
  RankedList list = make_ranked_list(title, std::move(scored), n);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(list.items.size());
  for (const ScoredDoc& doc : list.items) {
    out.emplace_back(doc.doc_id, doc.score);
  }
  return out;
}

}  // namespace skillsim
