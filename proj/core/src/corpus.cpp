#include "skillsim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "skillsim/text.hpp"

namespace skillsim {

using json = nlohmann::json;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

SkillVocabulary SkillVocabulary::load(const std::string& path) {
  return from_lines(read_lines(path), path);
}

SkillVocabulary SkillVocabulary::from_lines(
    const std::vector<std::string>& lines, const std::string& source_name) {
  SkillVocabulary vocab;
  std::unordered_map<std::string, std::uint32_t> surface_owner;

  for (std::size_t lineno = 0; lineno < lines.size(); ++lineno) {
    const std::string& line = lines[lineno];
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos
                                            ? std::string::npos
                                            : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }

    Entry entry;
    entry.canonical = normalize_title(cols[0]);
    if (entry.canonical.empty()) {
      throw std::runtime_error(source_name + ":" + std::to_string(lineno + 1) +
                               ": skill name normalizes to empty");
    }
    std::uint32_t idx = static_cast<std::uint32_t>(vocab.entries_.size());

    auto add_surface = [&](const std::string& surface) {
      auto [it, inserted] = surface_owner.emplace(surface, idx);
      if (!inserted) {
        if (it->second == idx) return;  // same skill listed twice, harmless
        throw std::runtime_error(
            source_name + ":" + std::to_string(lineno + 1) +
            ": surface form \"" + surface + "\" maps to both \"" +
            vocab.entries_[it->second].canonical + "\" and \"" +
            entry.canonical + "\"");
      }
      vocab.surfaces_.emplace_back(surface, idx);
    };

    add_surface(entry.canonical);
    for (std::size_t c = 1; c < cols.size(); ++c) {
      std::string alias = normalize_title(cols[c]);
      if (alias.empty()) {
        throw std::runtime_error(source_name + ":" +
                                 std::to_string(lineno + 1) +
                                 ": alias normalizes to empty");
      }
      if (alias == entry.canonical) continue;
      if (std::find(entry.aliases.begin(), entry.aliases.end(), alias) !=
          entry.aliases.end()) {
        continue;
      }
      add_surface(alias);
      entry.aliases.push_back(alias);
    }
    vocab.entries_.push_back(std::move(entry));
  }

  if (vocab.entries_.empty()) {
    throw std::runtime_error(source_name + ": vocabulary is empty");
  }
  std::sort(vocab.surfaces_.begin(), vocab.surfaces_.end());
  return vocab;
}

bool SkillVocabulary::contains(std::string_view canonical) const {
  auto it = std::lower_bound(
      surfaces_.begin(), surfaces_.end(), canonical,
      [](const auto& p, std::string_view key) { return p.first < key; });
  for (; it != surfaces_.end() && it->first == canonical; ++it) {
    if (entries_[it->second].canonical == canonical) return true;
  }
  return false;
}

SkillExtractor::SkillExtractor(const SkillVocabulary& vocab) : vocab_(vocab) {
  nodes_.emplace_back();  // root
  const auto& surfaces = vocab.surfaces();
  surface_canonical_.reserve(surfaces.size());
  surface_length_.reserve(surfaces.size());

  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    const std::string& pattern = surfaces[s].first;
    surface_canonical_.push_back(surfaces[s].second);
    surface_length_.push_back(pattern.size());
    std::int32_t node = 0;
    for (char ch : pattern) {
      unsigned char b = static_cast<unsigned char>(ch);
      auto it = nodes_[node].next.find(b);
      if (it == nodes_[node].next.end()) {
        nodes_.emplace_back();
        std::int32_t fresh = static_cast<std::int32_t>(nodes_.size()) - 1;
        nodes_[node].next.emplace(b, fresh);
        node = fresh;
      } else {
        node = it->second;
      }
    }
    nodes_[node].match_surface = static_cast<std::int32_t>(s);
  }

  // BFS failure links.
  std::vector<std::int32_t> queue;
  for (auto& [b, child] : nodes_[0].next) {
    nodes_[child].fail = 0;
    queue.push_back(child);
  }
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    std::int32_t node = queue[qi];
    for (auto& [b, child] : nodes_[node].next) {
      std::int32_t f = nodes_[node].fail;
      while (f != 0 && !nodes_[f].next.count(b)) f = nodes_[f].fail;
      auto it = nodes_[f].next.find(b);
      nodes_[child].fail = (it != nodes_[f].next.end() && it->second != child)
                               ? it->second
                               : 0;
      std::int32_t fl = nodes_[child].fail;
      nodes_[child].output_link =
          nodes_[fl].match_surface >= 0 ? fl : nodes_[fl].output_link;
      queue.push_back(child);
    }
  }
}

std::set<std::string> SkillExtractor::extract(std::string_view text) const {
  std::set<std::string> result;
  std::string norm = normalize_title(text);
  if (norm.empty()) return result;

  struct Match {
    std::size_t start;
    std::size_t end;
    std::uint32_t canonical;
  };
  std::vector<Match> matches;

  std::int32_t node = 0;
  for (std::size_t pos = 0; pos < norm.size(); ++pos) {
    unsigned char b = static_cast<unsigned char>(norm[pos]);
    while (node != 0 && !nodes_[node].next.count(b)) node = nodes_[node].fail;
    auto it = nodes_[node].next.find(b);
    node = it != nodes_[node].next.end() ? it->second : 0;

    std::int32_t m =
        nodes_[node].match_surface >= 0 ? node : nodes_[node].output_link;
    for (; m >= 0; m = nodes_[m].output_link) {
      std::uint32_t surface = nodes_[m].match_surface;
      std::size_t len = surface_length_[surface];
      std::size_t start = pos + 1 - len;
      bool starts_ok = start == 0 || norm[start - 1] == ' ';
      bool ends_ok = pos + 1 == norm.size() || norm[pos + 1] == ' ';
      if (starts_ok && ends_ok) {
        matches.push_back({start, pos + 1, surface_canonical_[surface]});
      }
    }
  }

  // Leftmost-longest, non-overlapping.
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end > b.end;
  });
  std::size_t cursor = 0;
  for (const Match& m : matches) {
    if (m.start < cursor) continue;
    result.insert(vocab_.entries()[m.canonical].canonical);
    cursor = m.end;
  }
  return result;
}

PostingRecord parse_posting_line(const std::string& line) {
  json obj = json::parse(line);
  if (!obj.is_object()) throw std::runtime_error("not a JSON object");
  PostingRecord rec;
  if (!obj.contains("id") || !obj["id"].is_string()) {
    throw std::runtime_error("missing string field \"id\"");
  }
  rec.id = obj["id"].get<std::string>();
  if (rec.id.empty()) throw std::runtime_error("empty \"id\"");
  if (!obj.contains("title") || !obj["title"].is_string()) {
    throw std::runtime_error("missing string field \"title\"");
  }
  rec.title = obj["title"].get<std::string>();
  if (!obj.contains("description") || !obj["description"].is_string()) {
    throw std::runtime_error("missing string field \"description\"");
  }
  rec.description = obj["description"].get<std::string>();
  if (obj.contains("lang") && obj["lang"].is_string()) {
    rec.lang = obj["lang"].get<std::string>();
  }
  return rec;
}

namespace {

// Extraction is pure per record; shards of the input are processed in
// parallel and reassembled in input order, so output bytes do not depend
// on the worker count.
std::vector<JobSkillRecord> extract_records(
    const std::vector<PostingRecord>& postings, const SkillExtractor& extractor,
    int workers, ExtractStats& stats) {
  std::vector<std::optional<JobSkillRecord>> slots(postings.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      JobSkillRecord rec;
      rec.title_key = normalize_title(postings[i].title);
      if (rec.title_key.empty()) continue;
      rec.title = postings[i].title;
      rec.skills = extractor.extract(postings[i].description);
      slots[i] = std::move(rec);
    }
  };

  if (workers <= 1 || postings.size() < 2) {
    work(0, postings.size());
  } else {
    std::size_t n = postings.size();
    std::size_t nw = std::min<std::size_t>(workers, n);
    std::vector<std::thread> threads;
    std::size_t chunk = (n + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
      std::size_t begin = w * chunk;
      std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(work, begin, end);
    }
    for (auto& t : threads) t.join();
  }

  std::vector<JobSkillRecord> out;
  out.reserve(postings.size());
  for (auto& slot : slots) {
    if (slot) {
      out.push_back(std::move(*slot));
    } else {
      ++stats.dropped_empty_title;
    }
  }
  stats.records += out.size();
  return out;
}

}  // namespace

std::vector<JobSkillRecord> build_raw_dataset(
    const std::vector<PostingRecord>& postings, const SkillVocabulary& vocab,
    int workers) {
  SkillExtractor extractor(vocab);
  ExtractStats stats;
  return extract_records(postings, extractor, workers, stats);
}

ExtractStats build_raw_dataset_file(const std::string& postings_path,
                                    const SkillVocabulary& vocab,
                                    const std::string& out_path, int workers) {
  std::vector<std::string> lines = read_lines(postings_path);
  ExtractStats stats;
  std::vector<PostingRecord> postings;
  postings.reserve(lines.size());
  std::unordered_set<std::string> seen_ids;
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    ++stats.total_lines;
    try {
      PostingRecord rec = parse_posting_line(line);
      if (!seen_ids.insert(rec.id).second) {
        throw std::runtime_error("duplicate id \"" + rec.id + "\"");
      }
      postings.push_back(std::move(rec));
    } catch (const std::exception&) {
      ++stats.malformed;
    }
  }
  if (stats.total_lines > 0 &&
      stats.malformed * 10 > stats.total_lines) {
    throw std::runtime_error(
        postings_path + ": " + std::to_string(stats.malformed) + " of " +
        std::to_string(stats.total_lines) +
        " lines malformed (>10%), aborting");
  }

  SkillExtractor extractor(vocab);
  std::vector<JobSkillRecord> records =
      extract_records(postings, extractor, workers, stats);
  write_raw_dataset(out_path, records);
  return stats;
}

std::vector<MergedRecord> merge_by_title(
    const std::vector<JobSkillRecord>& raw) {
  std::map<std::string, MergedRecord> merged;
  for (const JobSkillRecord& rec : raw) {
    MergedRecord& m = merged[rec.title_key];
    m.title_key = rec.title_key;
    m.support += 1;
    for (const std::string& skill : rec.skills) m.skill_counts[skill] += 1;
  }
  std::vector<MergedRecord> out;
  out.reserve(merged.size());
  for (auto& [key, rec] : merged) out.push_back(std::move(rec));
  return out;
}

std::string raw_record_to_json(const JobSkillRecord& rec) {
  json obj;
  obj["title_key"] = rec.title_key;
  obj["title"] = rec.title;
  obj["skills"] = json::array();
  for (const std::string& s : rec.skills) obj["skills"].push_back(s);
  return obj.dump();
}

JobSkillRecord raw_record_from_json(const std::string& line) {
  json obj = json::parse(line);
  JobSkillRecord rec;
  rec.title_key = obj.at("title_key").get<std::string>();
  rec.title = obj.at("title").get<std::string>();
  for (const auto& s : obj.at("skills")) {
    rec.skills.insert(s.get<std::string>());
  }
  return rec;
}

std::string merged_record_to_json(const MergedRecord& rec) {
  json obj;
  obj["title_key"] = rec.title_key;
  obj["support"] = rec.support;
  obj["skill_counts"] = json::object();
  for (const auto& [skill, count] : rec.skill_counts) {
    obj["skill_counts"][skill] = count;
  }
  return obj.dump();
}

MergedRecord merged_record_from_json(const std::string& line) {
  json obj = json::parse(line);
  MergedRecord rec;
  rec.title_key = obj.at("title_key").get<std::string>();
  rec.support = obj.at("support").get<std::uint32_t>();
  for (const auto& [skill, count] : obj.at("skill_counts").items()) {
    rec.skill_counts[skill] = count.get<std::uint32_t>();
  }
  return rec;
}

namespace {

template <typename Record, typename Parse>
std::vector<Record> read_jsonl(const std::string& path, Parse parse) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<Record> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(parse(lines[i]));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": " +
                               e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<JobSkillRecord> read_raw_dataset(const std::string& path) {
  return read_jsonl<JobSkillRecord>(path, raw_record_from_json);
}

void write_raw_dataset(const std::string& path,
                       const std::vector<JobSkillRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const JobSkillRecord& rec : records) {
    out << raw_record_to_json(rec) << '\n';
  }
}

std::vector<MergedRecord> read_merged_dataset(const std::string& path) {
  return read_jsonl<MergedRecord>(path, merged_record_from_json);
}

void write_merged_dataset(const std::string& path,
                          const std::vector<MergedRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const MergedRecord& rec : records) {
    out << merged_record_to_json(rec) << '\n';
  }
}

}  // namespace skillsim
