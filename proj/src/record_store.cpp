#include "oracleloom/record_store.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "oracleloom/error.hpp"

namespace oracleloom {

namespace fs = std::filesystem;

std::string fold_keyword(std::string_view keyword) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : keyword) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string keyword_slug(std::string_view keyword) {
  std::string out;
  bool dash = false;
  for (unsigned char c : fold_keyword(keyword)) {
    if (std::isalnum(c) || c >= 0x80) {
      if (dash && !out.empty()) out.push_back('-');
      dash = false;
      out.push_back(static_cast<char>(c));
    } else {
      dash = true;
    }
  }
  return out;
}

FillMode fill_mode_from_string(std::string_view s) {
  if (s == "none" || s.empty()) return FillMode::None;
  if (s == "carry_forward" || s == "carryforward" || s == "carry-forward") return FillMode::CarryForward;
  throw Error(ErrorCode::BadArgument, "unknown fill mode '" + std::string(s) + "'");
}

RecordStore::RecordStore(fs::path data_dir) : root_(std::move(data_dir)) {}

fs::path RecordStore::keyword_dir(std::string_view keyword) const {
  const std::string slug = keyword_slug(keyword);
  if (slug.empty()) throw Error(ErrorCode::InvalidRecord, "keyword has no storable characters");
  return root_ / "records" / slug;
}

std::shared_ptr<std::shared_mutex> RecordStore::lock_for(const std::string& path) const {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[path];
  if (!slot) slot = std::make_shared<std::shared_mutex>();
  return slot;
}

RecordKey RecordStore::put_record(const DailyRecord& record) {
  if (record.synthetic) throw Error(ErrorCode::InvalidRecord, "synthetic records are not stored");
  validate_record(record);
  const fs::path dir = keyword_dir(record.keyword);
  const fs::path target = dir / (record.day.to_string() + ".json");
  const std::string body = record.canonical();

  auto lock = lock_for(target.string());
  std::unique_lock guard(*lock);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());

  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << "." << record.day.to_string() << ".json.tmp." << std::this_thread::get_id() << "." << counter++;
  const fs::path tmp = dir / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
    out << body;
    out.flush();
    if (!out) throw Error(ErrorCode::StorageFailure, "short write to " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::StorageFailure, "cannot move record into place: " + ec.message());
  }
  return {fold_keyword(record.keyword), record.day};
}

std::optional<DailyRecord> RecordStore::get(std::string_view keyword, Date day) const {
  const fs::path path = keyword_dir(keyword) / (day.to_string() + ".json");
  auto lock = lock_for(path.string());
  std::shared_lock guard(*lock);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::StorageFailure, "corrupt record " + path.string() + ": " + e.what());
  }
  return DailyRecord::from_json(j);
}

std::vector<DailyRecord> RecordStore::get_range(std::string_view keyword, Date from, Date to, FillMode fill) const {
  if (to < from) throw Error(ErrorCode::BadDate, "range start is after range end");
  std::vector<DailyRecord> stored;
  const fs::path dir = keyword_dir(keyword);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return stored;

  std::vector<Date> days;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.size() != 15 || name.substr(10) != ".json") continue;
    if (auto d = Date::parse(name.substr(0, 10)); d && from <= *d && *d <= to) days.push_back(*d);
  }
  std::sort(days.begin(), days.end());
  for (Date d : days) {
    if (auto r = get(keyword, d)) stored.push_back(std::move(*r));
  }
  if (fill == FillMode::None || stored.empty()) return stored;

  std::vector<DailyRecord> filled;
  size_t next = 0;
  for (Date d = stored.front().day; d <= to; ++d) {
    if (next < stored.size() && stored[next].day == d) {
      filled.push_back(stored[next++]);
      continue;
    }
    DailyRecord copy = filled.back();
    copy.day = d;
    copy.synthetic = true;
    for (auto& [id, s] : copy.per_source) {
      s.doc_count = 0;
      s.class_counts = {};
    }
    filled.push_back(std::move(copy));
  }
  return filled;
}

bool RecordStore::covers(std::string_view keyword, Date from, Date to) const {
  const fs::path dir = keyword_dir(keyword);
  for (Date d = from; d <= to; ++d) {
    if (!fs::exists(dir / (d.to_string() + ".json"))) return false;
  }
  return true;
}

SeriesField series_field_from_string(std::string_view s) {
  if (s == "score" || s == "combined_score") return SeriesField::CombinedScore;
  if (s == "polarity" || s == "combined_polarity") return SeriesField::CombinedPolarity;
  if (s == "subjectivity" || s == "combined_subjectivity") return SeriesField::CombinedSubjectivity;
  throw Error(ErrorCode::BadArgument, "unknown series field '" + std::string(s) + "'");
}

Series to_series(const std::vector<DailyRecord>& records, SeriesField field) {
  Series s;
  if (records.empty()) return s;
  s.start = records.front().day;
  s.name = records.front().keyword;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].day != s.start + static_cast<int>(i)) {
      throw Error(ErrorCode::NonContiguous, "records jump to " + records[i].day.to_string());
    }
    switch (field) {
      case SeriesField::CombinedScore: s.values.push_back(records[i].combined.score); break;
      case SeriesField::CombinedPolarity: s.values.push_back(records[i].combined.polarity); break;
      case SeriesField::CombinedSubjectivity: s.values.push_back(records[i].combined.subjectivity); break;
    }
  }
  return s;
}

}  // namespace oracleloom
