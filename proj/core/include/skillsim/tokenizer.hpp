#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skillsim {

class BinReader;
class BinWriter;

/// Byte-pair subword tokenizer with byte fallback. Unit ids 0..255 are the
/// raw bytes; ids 256+ are merges, in rank order. Input is normalized with
/// normalize_title before segmentation, merges never cross spaces, and the
/// space byte keeps its own id, so decode(tokenize(x)) == normalize_title(x)
/// for every input.
class Tokenizer {
 public:
  struct Merge {
    std::uint32_t left;
    std::uint32_t right;
  };

  /// Learns merges from a title corpus. Greedy highest-count pair per round,
  /// ties broken by the lexicographically smallest (left bytes, right bytes);
  /// stops at vocab_size units or when no pair occurs twice.
  static Tokenizer train(const std::vector<std::string>& titles,
                         std::uint32_t vocab_size);

  /// Token ids of the normalized text. Empty only when the normalized text
  /// is empty; unseen characters fall back to byte units.
  std::vector<std::uint32_t> tokenize(std::string_view text) const;

  std::string decode(std::span<const std::uint32_t> ids) const;

  std::uint32_t vocab_size() const {
    return static_cast<std::uint32_t>(256 + merges_.size());
  }
  const std::string& unit_bytes(std::uint32_t id) const {
    return units_[id];
  }
  const std::vector<Merge>& merges() const { return merges_; }

  void write(BinWriter& w) const;
  static Tokenizer read(BinReader& r);

 private:
  void rebuild_units();
  std::vector<std::uint32_t> encode_word(std::string_view word) const;

  std::vector<Merge> merges_;
  std::vector<std::string> units_;  // id -> byte string
  // (left << 32 | right) -> merged id; rank is merged id order.
  std::vector<std::pair<std::uint64_t, std::uint32_t>> merge_lookup_;
};

}  // namespace skillsim
