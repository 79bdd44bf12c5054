#include "oracleloom/daily_record.hpp"

#include <algorithm>
#include <cmath>

#include "oracleloom/error.hpp"

namespace oracleloom {

int DailyRecord::doc_count() const {
  int n = 0;
  for (const auto& [id, s] : per_source) n += s.doc_count;
  return n;
}

Json DailyRecord::to_json() const {
  Json sources = Json::object();
  for (const auto& [id, s] : per_source) {
    sources[id] = {
        {"doc_count", s.doc_count},
        {"polarity", s.polarity},
        {"subjectivity", s.subjectivity},
        {"score", s.score},
        {"class_counts",
         {{"positive", s.class_counts.positive},
          {"neutral", s.class_counts.neutral},
          {"negative", s.class_counts.negative}}},
    };
  }
  Json terms = Json::array();
  for (const auto& t : top_terms) terms.push_back({{"term", t.term}, {"frequency", t.frequency}});
  return {
      {"keyword", keyword},
      {"day", day.to_string()},
      {"per_source", sources},
      {"combined", {{"polarity", combined.polarity}, {"subjectivity", combined.subjectivity}, {"score", combined.score}}},
      {"top_terms", terms},
      {"generated_at", format_rfc3339(generated_at)},
      {"schema_version", schema_version},
      {"synthetic", synthetic},
  };
}

DailyRecord DailyRecord::from_json(const Json& j) {
  DailyRecord r;
  try {
    r.keyword = j.at("keyword").get<std::string>();
    auto day = Date::parse(j.at("day").get<std::string>());
    if (!day) throw Error(ErrorCode::InvalidRecord, "record day is not a calendar date");
    r.day = *day;
    for (const auto& [id, s] : j.at("per_source").items()) {
      SourceStats st;
      st.doc_count = s.at("doc_count").get<int>();
      st.polarity = s.at("polarity").get<double>();
      st.subjectivity = s.at("subjectivity").get<double>();
      st.score = s.at("score").get<double>();
      const auto& cc = s.at("class_counts");
      st.class_counts = {cc.at("positive").get<int>(), cc.at("neutral").get<int>(), cc.at("negative").get<int>()};
      r.per_source.emplace(id, st);
    }
    const auto& c = j.at("combined");
    r.combined = {c.at("polarity").get<double>(), c.at("subjectivity").get<double>(), c.at("score").get<double>()};
    for (const auto& t : j.at("top_terms")) {
      r.top_terms.push_back({t.at("term").get<std::string>(), t.at("frequency").get<int>()});
    }
    auto ts = parse_rfc3339(j.at("generated_at").get<std::string>());
    if (!ts) throw Error(ErrorCode::InvalidRecord, "record generated_at is not RFC 3339");
    r.generated_at = *ts;
    r.schema_version = j.at("schema_version").get<int>();
    r.synthetic = j.value("synthetic", false);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidRecord, std::string("malformed record: ") + e.what());
  }
  return r;
}

void validate_record(const DailyRecord& r) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidRecord, "record " + r.keyword + "/" + r.day.to_string() + ": " + why);
  };
  if (r.schema_version != kRecordSchemaVersion) fail("unsupported schema_version");
  if (r.keyword.empty()) fail("empty keyword");
  // Stored reals carry six decimals, so bounds are checked at that precision.
  constexpr double tol = 1e-6;
  auto in = [&](double v, double lo, double hi) { return std::isfinite(v) && v >= lo - tol && v <= hi + tol; };
  double lo_p = 1, hi_p = -1, lo_s = 1, hi_s = -1, lo_c = 1e300, hi_c = -1e300;
  bool any = false;
  for (const auto& [id, s] : r.per_source) {
    if (s.doc_count < 0) fail("negative doc_count for " + id);
    if (s.class_counts.positive < 0 || s.class_counts.neutral < 0 || s.class_counts.negative < 0) {
      fail("negative class count for " + id);
    }
    if (s.class_counts.total() != s.doc_count) fail("class counts do not sum to doc_count for " + id);
    if (!in(s.polarity, -1, 1)) fail("polarity out of range for " + id);
    if (!in(s.subjectivity, 0, 1)) fail("subjectivity out of range for " + id);
    if (!std::isfinite(s.score)) fail("non-finite score for " + id);
    if (s.doc_count == 0 && !r.synthetic) continue;
    any = true;
    lo_p = std::min(lo_p, s.polarity);
    hi_p = std::max(hi_p, s.polarity);
    lo_s = std::min(lo_s, s.subjectivity);
    hi_s = std::max(hi_s, s.subjectivity);
    lo_c = std::min(lo_c, s.score);
    hi_c = std::max(hi_c, s.score);
  }
  if (any) {
    if (!in(r.combined.polarity, lo_p, hi_p)) fail("combined polarity outside per-source bounds");
    if (!in(r.combined.subjectivity, lo_s, hi_s)) fail("combined subjectivity outside per-source bounds");
    if (!in(r.combined.score, lo_c, hi_c)) fail("combined score outside per-source bounds");
  } else if (!r.synthetic && (std::abs(r.combined.polarity) > tol || std::abs(r.combined.subjectivity) > tol ||
                              std::abs(r.combined.score) > tol)) {
    fail("combined values must be zero without documents");
  }
  for (const auto& t : r.top_terms) {
    if (t.term.empty() || t.frequency < 1) fail("invalid top term");
  }
}

}  // namespace oracleloom
