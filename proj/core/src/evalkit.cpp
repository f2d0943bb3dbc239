#include "skillsim/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace skillsim {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", score);
  return buf;
}

// TREC fields are whitespace-delimited, so ids must be single tokens.
void require_field(const std::string& id, const char* what) {
  if (id.empty() || id.find_first_of(" \t") != std::string::npos) {
    throw std::runtime_error(std::string(what) + " \"" + id +
                             "\" is not a single whitespace-free field");
  }
}

}  // namespace

QrelsSet QrelsSet::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open qrels: " + path);
  QrelsSet qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    }
    int rel;
    try {
      rel = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad relevance value \"" + fields[3] + "\"");
    }
    const std::string& query = fields[0];
    const std::string& doc = fields[2];
    if (!qrels.judged[query].insert(doc).second) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": duplicate judgment for (" + query + ", " +
                               doc + ")");
    }
    if (rel > 0) qrels.relevant[query].insert(doc);
  }
  return qrels;
}

void QrelsSet::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write qrels: " + path);
  for (const auto& [query, docs] : judged) {
    require_field(query, "query id");
    auto rel_it = relevant.find(query);
    for (const std::string& doc : docs) {
      require_field(doc, "doc id");
      int rel = rel_it != relevant.end() && rel_it->second.count(doc) ? 1 : 0;
      out << query << " 0 " << doc << ' ' << rel << '\n';
    }
  }
}

std::vector<std::string> QrelsSet::scorable_queries() const {
  std::vector<std::string> out;
  for (const auto& [query, docs] : relevant) {
    if (!docs.empty()) out.push_back(query);
  }
  return out;
}

RunFile RunFile::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run file: " + path);
  RunFile run;
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::vector<ScoredDoc>> scored;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 6) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 6 fields, got " +
                               std::to_string(fields.size()));
    }
    double score;
    try {
      score = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad score \"" + fields[4] + "\"");
    }
    scored[fields[0]].push_back({fields[2], score});
    run.tag = fields[5];
  }
  // Order comes from scores plus the tie rule, not from file order.
  for (auto& [query, docs] : scored) {
    run.add(make_ranked_list(query, std::move(docs), 0));
  }
  return run;
}

void RunFile::add(RankedList list) {
  std::set<std::string> seen;
  for (const ScoredDoc& doc : list.items) {
    if (!seen.insert(doc.doc_id).second) {
      throw std::runtime_error("run: doc \"" + doc.doc_id +
                               "\" ranked twice for query \"" + list.query_id +
                               "\"");
    }
  }
  std::string key = list.query_id;
  if (!queries.emplace(std::move(key), std::move(list)).second) {
    throw std::runtime_error("run: duplicate query id");
  }
}

void RunFile::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write run file: " + path);
  std::string system_tag = tag.empty() ? "skillsim" : tag;
  require_field(system_tag, "run tag");
  for (const auto& [query, list] : queries) {
    require_field(query, "query id");
    std::size_t rank = 1;
    for (const ScoredDoc& doc : list.items) {
      require_field(doc.doc_id, "doc id");
      out << query << " Q0 " << doc.doc_id << ' ' << rank << ' '
          << format_score(doc.score) << ' ' << system_tag << '\n';
      ++rank;
    }
  }
}

double average_precision(const std::vector<std::string>& ranked,
                         const std::set<std::string>& relevant) {
  if (relevant.empty()) {
    throw std::runtime_error("average_precision: empty relevant set");
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (relevant.count(ranked[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

double precision_at_k(const std::vector<std::string>& ranked,
                      const std::set<std::string>& relevant, std::size_t k) {
  if (k == 0) throw std::runtime_error("precision_at_k: k must be >= 1");
  std::size_t hits = 0;
  std::size_t upto = std::min(k, ranked.size());
  for (std::size_t r = 0; r < upto; ++r) {
    if (relevant.count(ranked[r])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double reciprocal_rank(const std::vector<std::string>& ranked,
                       const std::set<std::string>& relevant) {
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (relevant.count(ranked[r])) {
      return 1.0 / static_cast<double>(r + 1);
    }
  }
  return 0.0;
}

MetricsReport evaluate_run(const RunFile& run, const QrelsSet& qrels) {
  for (const auto& [query, list] : run.queries) {
    if (!qrels.judged.count(query)) {
      throw std::runtime_error("evaluate_run: query \"" + query +
                               "\" has no judgments");
    }
  }

  MetricsReport report;
  double sum_ap = 0, sum_p5 = 0, sum_p10 = 0, sum_p20 = 0, sum_rr = 0;
  for (const auto& [query, docs] : qrels.judged) {
    const auto rel_it = qrels.relevant.find(query);
    if (rel_it == qrels.relevant.end() || rel_it->second.empty()) {
      report.excluded_queries.push_back(query);
      continue;
    }
    std::vector<std::string> ranked;
    auto run_it = run.queries.find(query);
    if (run_it != run.queries.end()) {
      ranked.reserve(run_it->second.items.size());
      for (const ScoredDoc& doc : run_it->second.items) {
        ranked.push_back(doc.doc_id);
      }
    }
    QueryMetrics m;
    m.ap = average_precision(ranked, rel_it->second);
    m.p5 = precision_at_k(ranked, rel_it->second, 5);
    m.p10 = precision_at_k(ranked, rel_it->second, 10);
    m.p20 = precision_at_k(ranked, rel_it->second, 20);
    m.rr = reciprocal_rank(ranked, rel_it->second);
    sum_ap += m.ap;
    sum_p5 += m.p5;
    sum_p10 += m.p10;
    sum_p20 += m.p20;
    sum_rr += m.rr;
    report.per_query.emplace(query, m);
    ++report.query_count;
  }
  if (report.query_count > 0) {
    double n = report.query_count;
    report.mean.ap = sum_ap / n;
    report.mean.p5 = sum_p5 / n;
    report.mean.p10 = sum_p10 / n;
    report.mean.p20 = sum_p20 / n;
    report.mean.rr = sum_rr / n;
  }
  return report;
}

void MetricsReport::write_json(const std::string& path) const {
  nlohmann::json obj;
  obj["num_queries"] = query_count;
  obj["excluded_queries"] = excluded_queries;
  obj["mean"] = {{"map", mean.ap},
                 {"p5", mean.p5},
                 {"p10", mean.p10},
                 {"p20", mean.p20},
                 {"mrr", mean.rr}};
  nlohmann::json per;
  for (const auto& [query, m] : per_query) {
    per[query] = {{"ap", m.ap},
                  {"p5", m.p5},
                  {"p10", m.p10},
                  {"p20", m.p20},
                  {"rr", m.rr}};
  }
  obj["per_query"] = per;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << obj.dump(2) << '\n';
}

}  // namespace skillsim
