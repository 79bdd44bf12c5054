#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "oracleloom/error.hpp"
#include "oracleloom/report.hpp"

namespace oracleloom {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;

// Slots 0-2 are positive / neutral / negative; the rest cycle through bars.
constexpr std::array<const char*, 12> kPalette = {"#2ca02c", "#7f7f7f", "#d62728", "#1f77b4",
                                                  "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                                  "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", std::fabs(v) < 5e-4 ? 0.0 : v);
  return buf;
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string open_svg(std::string_view title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) + "\" height=\"" +
         std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " + std::to_string(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
         "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         std::string(title) + "</text>\n";
}

std::string pie_svg(const SentimentDistribution& d) {
  std::string svg = open_svg("Sentiment distribution");
  const double cx = 260, cy = 210, r = 150;
  const std::array<std::pair<const char*, double>, 3> slices = {
      std::pair{"positive", d.positive}, std::pair{"neutral", d.neutral}, std::pair{"negative", d.negative}};
  const double total = d.positive + d.neutral + d.negative;
  if (!(total > 0.0)) {
    svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
           "\" fill=\"#eeeeee\" stroke=\"#999999\"/>\n<text x=\"" + num(cx) + "\" y=\"" + num(cy) +
           "\" text-anchor=\"middle\">No data</text>\n";
  } else {
    double angle = -std::numbers::pi / 2;
    for (size_t i = 0; i < slices.size(); ++i) {
      const double f = slices[i].second;
      if (f <= 0.0) continue;
      const std::string fill = kPalette[i];
      if (f >= 1.0 - 1e-12) {
        svg += "<circle class=\"slice-" + std::string(slices[i].first) + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
               "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
        continue;
      }
      const double sweep = f * 2 * std::numbers::pi;
      const double x0 = cx + r * std::cos(angle), y0 = cy + r * std::sin(angle);
      const double x1 = cx + r * std::cos(angle + sweep), y1 = cy + r * std::sin(angle + sweep);
      svg += "<path class=\"slice-" + std::string(slices[i].first) + "\" d=\"M " + num(cx) + " " + num(cy) + " L " +
             num(x0) + " " + num(y0) + " A " + num(r) + " " + num(r) + " 0 " + (sweep > std::numbers::pi ? "1" : "0") +
             " 1 " + num(x1) + " " + num(y1) + " Z\" fill=\"" + fill + "\" stroke=\"#ffffff\"/>\n";
      angle += sweep;
    }
  }
  for (size_t i = 0; i < slices.size(); ++i) {
    const double y = 160 + 30.0 * static_cast<double>(i);
    svg += "<rect x=\"450\" y=\"" + num(y - 11) + "\" width=\"14\" height=\"14\" fill=\"" + kPalette[i] + "\"/>\n";
    svg += "<text x=\"472\" y=\"" + num(y) + "\">" + slices[i].first + " " + pct(slices[i].second) + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::string trend_svg(const std::vector<std::pair<Date, double>>& trend) {
  std::string svg = open_svg("Daily combined score");
  const double left = 70, right = 600, top = 50, bottom = 350;
  const double mid = (top + bottom) / 2, half = (bottom - top) / 2;
  auto y_of = [&](double score) { return mid - std::clamp(score, -1.0, 1.0) * half; };
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(bottom) +
         "\" stroke=\"#333333\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(mid) + "\" x2=\"" + num(right) + "\" y2=\"" + num(mid) +
         "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";
  for (double tick : {1.0, 0.5, 0.0, -0.5, -1.0}) {
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y_of(tick) + 4) + "\" text-anchor=\"end\">" + num(tick) +
           "</text>\n";
  }
  if (trend.empty()) {
    svg += "<text x=\"335\" y=\"" + num(mid - 12) + "\" text-anchor=\"middle\">No data</text>\n";
    return svg + "</svg>\n";
  }
  const double step = trend.size() > 1 ? (right - left - 20) / static_cast<double>(trend.size() - 1) : 0.0;
  auto x_of = [&](size_t i) { return trend.size() > 1 ? left + 10 + step * static_cast<double>(i) : (left + right) / 2; };
  std::string points;
  for (size_t i = 0; i < trend.size(); ++i) {
    if (i) points += " ";
    points += num(x_of(i)) + "," + num(y_of(trend[i].second));
  }
  svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + kPalette[3] + "\" stroke-width=\"2\"/>\n";
  for (size_t i = 0; i < trend.size(); ++i) {
    svg += "<circle cx=\"" + num(x_of(i)) + "\" cy=\"" + num(y_of(trend[i].second)) + "\" r=\"3\" fill=\"" +
           kPalette[3] + "\"/>\n";
  }
  svg += "<text x=\"" + num(x_of(0)) + "\" y=\"" + num(bottom + 20) + "\" text-anchor=\"middle\">" +
         trend.front().first.to_string() + "</text>\n";
  if (trend.size() > 1) {
    svg += "<text x=\"" + num(x_of(trend.size() - 1)) + "\" y=\"" + num(bottom + 20) + "\" text-anchor=\"middle\">" +
           trend.back().first.to_string() + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::string bars_svg(const std::vector<TermCount>& bars) {
  std::string svg = open_svg("Associated terms");
  if (bars.empty()) {
    svg += "<text x=\"320\" y=\"200\" text-anchor=\"middle\">No data</text>\n";
    return svg + "</svg>\n";
  }
  int max_freq = 1;
  for (const auto& b : bars) max_freq = std::max(max_freq, b.frequency);
  const double top = 50, avail = 320, left = 170, width = 400;
  const double slot = std::min(28.0, avail / static_cast<double>(bars.size()));
  for (size_t i = 0; i < bars.size(); ++i) {
    const double y = top + slot * static_cast<double>(i);
    const double w = width * bars[i].frequency / max_freq;
    const char* color = kPalette[3 + i % (kPalette.size() - 3)];
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + slot * 0.65) + "\" text-anchor=\"end\">" +
           xml_escape(bars[i].term) + "</text>\n";
    svg += "<rect x=\"" + num(left) + "\" y=\"" + num(y + slot * 0.1) + "\" width=\"" + num(w) + "\" height=\"" +
           num(slot * 0.8) + "\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + num(left + w + 6) + "\" y=\"" + num(y + slot * 0.65) + "\">" +
           std::to_string(bars[i].frequency) + "</text>\n";
  }
  return svg + "</svg>\n";
}

}  // namespace

Json ChartData::to_json() const {
  Json trend_json = Json::array();
  for (const auto& [day, score] : trend) trend_json.push_back({day.to_string(), score});
  Json bars = Json::array();
  for (const auto& t : term_bars) bars.push_back({t.term, t.frequency});
  return {{"sentiment_distribution",
           {{"positive", sentiment_distribution.positive},
            {"neutral", sentiment_distribution.neutral},
            {"negative", sentiment_distribution.negative}}},
          {"trend", trend_json},
          {"term_bars", bars}};
}

ChartData ChartData::from_json(const Json& j) {
  ChartData c;
  try {
    const auto& d = j.at("sentiment_distribution");
    c.sentiment_distribution = {d.at("positive").get<double>(), d.at("neutral").get<double>(),
                                d.at("negative").get<double>()};
    for (const auto& p : j.at("trend")) {
      auto day = Date::parse(p.at(0).get<std::string>());
      if (!day) throw Error(ErrorCode::MalformedMarkers, "chart trend day is not a date");
      c.trend.emplace_back(*day, p.at(1).get<double>());
    }
    for (const auto& b : j.at("term_bars")) c.term_bars.push_back({b.at(0).get<std::string>(), b.at(1).get<int>()});
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedMarkers, std::string("chart_data is not chart JSON: ") + e.what());
  }
  return c;
}

ChartData build_chart_data(std::span<const DailyRecord> records, std::span<const ScoredDocument> docs, int k,
                           const StopwordSet& stopwords, const std::unordered_set<std::string>& excluded,
                           const Thresholds& thresholds) {
  ChartData c;
  ClassCounts counts;
  if (!docs.empty()) {
    for (const auto& d : docs) {
      switch (classify(d.sentiment.score, thresholds)) {
        case SentimentClass::Positive: ++counts.positive; break;
        case SentimentClass::Neutral: ++counts.neutral; break;
        case SentimentClass::Negative: ++counts.negative; break;
      }
    }
  } else {
    for (const auto& r : records) {
      if (r.synthetic) continue;
      for (const auto& [id, s] : r.per_source) {
        counts.positive += s.class_counts.positive;
        counts.neutral += s.class_counts.neutral;
        counts.negative += s.class_counts.negative;
      }
    }
  }
  if (const int n = counts.total(); n > 0) {
    c.sentiment_distribution = {static_cast<double>(counts.positive) / n, static_cast<double>(counts.neutral) / n,
                                static_cast<double>(counts.negative) / n};
  }
  for (const auto& r : records) c.trend.emplace_back(r.day, r.combined.score);
  if (!docs.empty()) {
    c.term_bars = top_terms(docs, stopwords, k, excluded);
  } else {
    std::map<std::string, int> merged;
    for (const auto& r : records) {
      if (r.synthetic) continue;
      for (const auto& t : r.top_terms) merged[t.term] += t.frequency;
    }
    for (const auto& [term, f] : merged) c.term_bars.push_back({term, f});
    std::stable_sort(c.term_bars.begin(), c.term_bars.end(),
                     [](const TermCount& a, const TermCount& b) { return a.frequency > b.frequency; });
    if (c.term_bars.size() > static_cast<size_t>(std::max(k, 0))) c.term_bars.resize(std::max(k, 0));
  }
  return c;
}

ChartSvgs render_charts_svg(const ChartData& charts) {
  return {pie_svg(charts.sentiment_distribution), trend_svg(charts.trend), bars_svg(charts.term_bars)};
}

}  // namespace oracleloom
