#pragma once

#include <map>
#include <string>
#include <vector>

#include "oracleloom/canonical_json.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom {

struct ClassCounts {
  int positive = 0;
  int neutral = 0;
  int negative = 0;

  int total() const { return positive + neutral + negative; }
  bool operator==(const ClassCounts&) const = default;
};

struct SourceStats {
  int doc_count = 0;
  double polarity = 0.0;
  double subjectivity = 0.0;
  double score = 0.0;
  ClassCounts class_counts;
};

struct CombinedStats {
  double polarity = 0.0;
  double subjectivity = 0.0;
  double score = 0.0;
};

struct TermCount {
  std::string term;
  int frequency = 0;
  bool operator==(const TermCount&) const = default;
};

inline constexpr int kRecordSchemaVersion = 1;

/// Per-keyword, per-day sentiment aggregate; the archive unit.
struct DailyRecord {
  std::string keyword;
  Date day;
  std::map<std::string, SourceStats> per_source;
  CombinedStats combined;
  std::vector<TermCount> top_terms;
  Timestamp generated_at{};
  int schema_version = kRecordSchemaVersion;
  /// Set on carry-forward copies produced by range retrieval; never stored.
  bool synthetic = false;

  int doc_count() const;

  Json to_json() const;
  static DailyRecord from_json(const Json& j);
  std::string canonical() const { return canonical_dump(to_json()); }
};

/// Throws InvalidRecord when class counts disagree with doc counts, the
/// combined values leave the per-source bounds, values leave their ranges,
/// or the schema version is unknown.
void validate_record(const DailyRecord& record);

}  // namespace oracleloom
