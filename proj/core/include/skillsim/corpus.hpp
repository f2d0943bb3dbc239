#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace skillsim {

/// Dictionary of canonical skills with surface-form aliases. Surface forms
/// are stored normalized; canonical identity is the normalized canonical
/// name. Loading rejects duplicate canonicals and surface forms shared
/// between two skills.
class SkillVocabulary {
 public:
  struct Entry {
    std::string canonical;              // normalized
    std::vector<std::string> aliases;   // normalized, deduplicated
  };

  static SkillVocabulary load(const std::string& path);
  static SkillVocabulary from_lines(const std::vector<std::string>& lines,
                                    const std::string& source_name);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  bool contains(std::string_view canonical) const;

  /// All (surface form, canonical index) pairs, surface-sorted.
  const std::vector<std::pair<std::string, std::uint32_t>>& surfaces() const {
    return surfaces_;
  }

 private:
  std::vector<Entry> entries_;
  std::vector<std::pair<std::string, std::uint32_t>> surfaces_;
};

struct PostingRecord {
  std::string id;
  std::string title;
  std::string description;
  std::optional<std::string> lang;
};

struct JobSkillRecord {
  std::string title_key;
  std::string title;
  std::set<std::string> skills;  // canonical, normalized
};

struct MergedRecord {
  std::string title_key;
  std::map<std::string, std::uint32_t> skill_counts;
  std::uint32_t support = 0;
};

/// Multi-pattern matcher over normalized text: token-boundary anchored,
/// leftmost-longest, non-overlapping. Built once per vocabulary.
class SkillExtractor {
 public:
  explicit SkillExtractor(const SkillVocabulary& vocab);

  /// Canonical skills found in `text` (raw; normalized internally).
  std::set<std::string> extract(std::string_view text) const;

 private:
  struct Node {
    std::map<unsigned char, std::int32_t> next;
    std::int32_t fail = 0;
    std::int32_t match_surface = -1;    // surface index ending here
    std::int32_t output_link = -1;      // next shorter suffix match
  };

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> surface_canonical_;  // surface idx -> entry idx
  std::vector<std::size_t> surface_length_;
  const SkillVocabulary& vocab_;
};

struct ExtractStats {
  std::uint64_t total_lines = 0;
  std::uint64_t malformed = 0;
  std::uint64_t dropped_empty_title = 0;
  std::uint64_t records = 0;
};

// Postings JSONL parsing. Malformed lines are skipped and counted; more
// than 10% malformed aborts with an error.
PostingRecord parse_posting_line(const std::string& line);

std::vector<JobSkillRecord> build_raw_dataset(
    const std::vector<PostingRecord>& postings, const SkillVocabulary& vocab,
    int workers = 1);

/// File-to-file variant. Returns counters for progress reporting.
ExtractStats build_raw_dataset_file(const std::string& postings_path,
                                    const SkillVocabulary& vocab,
                                    const std::string& out_path,
                                    int workers = 1);

std::vector<MergedRecord> merge_by_title(
    const std::vector<JobSkillRecord>& raw);

// JSONL serialization for the raw and merged datasets.
std::string raw_record_to_json(const JobSkillRecord& rec);
JobSkillRecord raw_record_from_json(const std::string& line);
std::string merged_record_to_json(const MergedRecord& rec);
MergedRecord merged_record_from_json(const std::string& line);

std::vector<JobSkillRecord> read_raw_dataset(const std::string& path);
void write_raw_dataset(const std::string& path,
                       const std::vector<JobSkillRecord>& records);
std::vector<MergedRecord> read_merged_dataset(const std::string& path);
void write_merged_dataset(const std::string& path,
                          const std::vector<MergedRecord>& records);

}  // namespace skillsim
