#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "oracleloom/daily_record.hpp"
#include "oracleloom/forecasting.hpp"

namespace oracleloom {

/// Case-folded, whitespace-collapsed keyword.
std::string fold_keyword(std::string_view keyword);
/// Case-fold, then every run of non-alphanumeric ASCII becomes one `-`
/// (edges trimmed). UTF-8 bytes are kept.
std::string keyword_slug(std::string_view keyword);

struct RecordKey {
  std::string keyword;
  Date day;
  auto operator<=>(const RecordKey&) const = default;
};

enum class FillMode { None, CarryForward };
FillMode fill_mode_from_string(std::string_view s);

/// File-backed daily archive: `<root>/records/<slug>/<YYYY-MM-DD>.json`, one
/// canonical JSON document per file. Writes go to a temp file and are renamed
/// into place; writes to the same key are serialized.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path data_dir);

  /// Validates and upserts (last writer wins). Throws InvalidRecord or
  /// StorageFailure.
  RecordKey put_record(const DailyRecord& record);

  std::optional<DailyRecord> get(std::string_view keyword, Date day) const;

  /// Records for [from, to] in day order. With CarryForward, gaps after the
  /// first stored record are filled with synthetic copies of the previous day.
  std::vector<DailyRecord> get_range(std::string_view keyword, Date from, Date to, FillMode fill) const;

  /// True when every day of [from, to] has a stored record.
  bool covers(std::string_view keyword, Date from, Date to) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path keyword_dir(std::string_view keyword) const;
  std::shared_ptr<std::shared_mutex> lock_for(const std::string& path) const;

  std::filesystem::path root_;
  mutable std::mutex locks_mutex_;
  mutable std::map<std::string, std::shared_ptr<std::shared_mutex>> locks_;
};

enum class SeriesField { CombinedScore, CombinedPolarity, CombinedSubjectivity };
SeriesField series_field_from_string(std::string_view s);

/// Projects contiguous records onto a series. Throws NonContiguous.
Series to_series(const std::vector<DailyRecord>& records, SeriesField field);

}  // namespace oracleloom
