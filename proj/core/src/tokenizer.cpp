#include "skillsim/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "skillsim/binio.hpp"
#include "skillsim/text.hpp"

namespace skillsim {

namespace {

constexpr std::uint32_t kSpaceId = 0x20;

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

void Tokenizer::rebuild_units() {
  units_.clear();
  units_.reserve(256 + merges_.size());
  for (int b = 0; b < 256; ++b) {
    units_.push_back(std::string(1, static_cast<char>(b)));
  }
  merge_lookup_.clear();
  for (std::size_t m = 0; m < merges_.size(); ++m) {
    const Merge& merge = merges_[m];
    if (merge.left >= units_.size() || merge.right >= units_.size()) {
      throw std::runtime_error("tokenizer: merge references unknown unit");
    }
    units_.push_back(units_[merge.left] + units_[merge.right]);
    merge_lookup_.emplace_back(pair_key(merge.left, merge.right),
                               static_cast<std::uint32_t>(256 + m));
  }
  std::sort(merge_lookup_.begin(), merge_lookup_.end());
}

Tokenizer Tokenizer::train(const std::vector<std::string>& titles,
                           std::uint32_t vocab_size) {
  if (vocab_size < 257) {
    throw std::runtime_error(
        "tokenizer: vocab_size must be >= 257 (256 byte units + merges)");
  }
  if (titles.empty()) {
    throw std::runtime_error("tokenizer: empty training corpus");
  }

  // Word frequency table over normalized titles, in first-seen order so
  // training is deterministic for a given input order.
  std::vector<std::pair<std::vector<std::uint32_t>, std::uint64_t>> words;
  {
    std::unordered_map<std::string, std::size_t> index;
    for (const std::string& title : titles) {
      std::string norm = normalize_title(title);
      for (std::string_view token : split_tokens(norm)) {
        auto [it, inserted] = index.emplace(std::string(token), words.size());
        if (inserted) {
          std::vector<std::uint32_t> ids;
          ids.reserve(token.size());
          for (char ch : token) {
            ids.push_back(static_cast<unsigned char>(ch));
          }
          words.emplace_back(std::move(ids), 1);
        } else {
          words[it->second].second += 1;
        }
      }
    }
  }

  Tokenizer tok;
  tok.rebuild_units();

  std::uint32_t budget = vocab_size - 256;
  for (std::uint32_t round = 0; round < budget; ++round) {
    std::map<std::uint64_t, std::uint64_t> pair_counts;
    for (const auto& [ids, freq] : words) {
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        pair_counts[pair_key(ids[i], ids[i + 1])] += freq;
      }
    }
    if (pair_counts.empty()) break;

    // Highest count wins; ties go to the smallest concatenated byte strings.
    std::uint64_t best_key = 0;
    std::uint64_t best_count = 0;
    for (const auto& [key, count] : pair_counts) {
      if (count < best_count) continue;
      if (count > best_count) {
        best_count = count;
        best_key = key;
        continue;
      }
      std::uint32_t a = static_cast<std::uint32_t>(key >> 32);
      std::uint32_t b = static_cast<std::uint32_t>(key & 0xffffffff);
      std::uint32_t ba = static_cast<std::uint32_t>(best_key >> 32);
      std::uint32_t bb = static_cast<std::uint32_t>(best_key & 0xffffffff);
      auto lhs = std::make_pair(tok.units_[a], tok.units_[b]);
      auto rhs = std::make_pair(tok.units_[ba], tok.units_[bb]);
      if (lhs < rhs) best_key = key;
    }
    if (best_count < 2) break;

    std::uint32_t left = static_cast<std::uint32_t>(best_key >> 32);
    std::uint32_t right = static_cast<std::uint32_t>(best_key & 0xffffffff);
    std::uint32_t merged_id = tok.vocab_size();
    tok.merges_.push_back({left, right});
    tok.units_.push_back(tok.units_[left] + tok.units_[right]);

    for (auto& [ids, freq] : words) {
      std::size_t out = 0;
      for (std::size_t i = 0; i < ids.size();) {
        if (i + 1 < ids.size() && ids[i] == left && ids[i + 1] == right) {
          ids[out++] = merged_id;
          i += 2;
        } else {
          ids[out++] = ids[i];
          i += 1;
        }
      }
      ids.resize(out);
    }
  }

  tok.rebuild_units();
  return tok;
}

std::vector<std::uint32_t> Tokenizer::encode_word(std::string_view word) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(word.size());
  for (char ch : word) ids.push_back(static_cast<unsigned char>(ch));

  auto find_merge = [&](std::uint32_t a, std::uint32_t b) -> std::int64_t {
    std::uint64_t key = pair_key(a, b);
    auto it = std::lower_bound(
        merge_lookup_.begin(), merge_lookup_.end(), key,
        [](const auto& p, std::uint64_t k) { return p.first < k; });
    if (it != merge_lookup_.end() && it->first == key) return it->second;
    return -1;
  };

  while (ids.size() > 1) {
    // Apply the lowest-ranked applicable merge.
    std::int64_t best = -1;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      std::int64_t merged = find_merge(ids[i], ids[i + 1]);
      if (merged >= 0 && (best < 0 || merged < best)) {
        best = merged;
        best_pos = i;
      }
    }
    if (best < 0) break;
    ids[best_pos] = static_cast<std::uint32_t>(best);
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
  }
  return ids;
}

std::vector<std::uint32_t> Tokenizer::tokenize(std::string_view text) const {
  std::string norm = normalize_title(text);
  std::vector<std::uint32_t> out;
  bool first = true;
  for (std::string_view word : split_tokens(norm)) {
    if (!first) out.push_back(kSpaceId);
    first = false;
    std::vector<std::uint32_t> ids = encode_word(word);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::string Tokenizer::decode(std::span<const std::uint32_t> ids) const {
  std::string out;
  for (std::uint32_t id : ids) {
    if (id >= units_.size()) {
      throw std::runtime_error("tokenizer: unknown unit id " +
                               std::to_string(id));
    }
    out += units_[id];
  }
  return out;
}

void Tokenizer::write(BinWriter& w) const {
  w.u32(static_cast<std::uint32_t>(merges_.size()));
  for (const Merge& m : merges_) {
    w.u32(m.left);
    w.u32(m.right);
  }
}

Tokenizer Tokenizer::read(BinReader& r) {
  Tokenizer tok;
  std::uint32_t n = r.u32();
  tok.merges_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Merge m;
    m.left = r.u32();
    m.right = r.u32();
    if (m.left >= 256 + i || m.right >= 256 + i) {
      throw std::runtime_error("tokenizer: merge references unknown unit");
    }
    tok.merges_.push_back(m);
  }
  tok.rebuild_units();
  return tok;
}

}  // namespace skillsim
