#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "skillsim/ranking.hpp"

namespace skillsim {

/// Binary relevance judgments keyed by (query, doc).
struct QrelsSet {
  std::map<std::string, std::set<std::string>> relevant;   // query -> docs
  std::map<std::string, std::set<std::string>> judged;     // incl. rel 0

  static QrelsSet read(const std::string& path);
  void write(const std::string& path) const;

  /// Queries with at least one relevant document.
  std::vector<std::string> scorable_queries() const;
};

/// A system's ranked output for a set of queries.
struct RunFile {
  std::string tag;
  std::map<std::string, RankedList> queries;

  static RunFile read(const std::string& path);
  void write(const std::string& path) const;

  void add(RankedList list);
};

struct QueryMetrics {
  double ap = 0.0;
  double p5 = 0.0;
  double p10 = 0.0;
  double p20 = 0.0;
  double rr = 0.0;
};

struct MetricsReport {
  std::map<std::string, QueryMetrics> per_query;
  QueryMetrics mean;
  std::uint32_t query_count = 0;              // queries contributing to means
  std::vector<std::string> excluded_queries;  // judged but nothing relevant

  void write_json(const std::string& path) const;
};

// trec_eval conventions: P@k divides by k even when fewer were retrieved;
// unretrieved relevant documents contribute zero to AP; queries without
// relevant documents are excluded from the means and listed.
double average_precision(const std::vector<std::string>& ranked,
                         const std::set<std::string>& relevant);
double precision_at_k(const std::vector<std::string>& ranked,
                      const std::set<std::string>& relevant, std::size_t k);
double reciprocal_rank(const std::vector<std::string>& ranked,
                       const std::set<std::string>& relevant);

MetricsReport evaluate_run(const RunFile& run, const QrelsSet& qrels);

}  // namespace skillsim
