// Offline provider. Reads the marker envelope written by the prompt engine
// and answers with template prose built only from what the prompt quotes.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracleloom/canonical_json.hpp"
#include "oracleloom/llm_gateway.hpp"

namespace oracleloom {

namespace {

struct QuotedDoc {
  std::string url;
  std::string source;
  std::string confidence;
  double score = 0.0;
  std::string text;
};

struct RecordLine {
  std::string day;
  double score = 0.0;
  std::vector<std::string> terms;
};

struct Envelope {
  int step = 0;
  std::string task;
  std::vector<std::string> expected;
  std::string keyword;
  std::string synonyms;
  std::string window;
  std::string kind;
  std::string message;
  std::vector<QuotedDoc> docs;
  std::vector<RecordLine> records;  // newest first, as quoted
  std::map<std::string, std::string> prior;
};

std::string attr(const std::string& line, const std::string& name) {
  const std::string key = name + "=\"";
  size_t pos = line.find(key);
  if (pos == std::string::npos) return {};
  pos += key.size();
  size_t end = line.find('"', pos);
  return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::string marker_value(const std::string& line, const std::string& name) {
  const std::string open = "<<" + name + ":";
  if (line.rfind(open, 0) != 0 || line.size() < open.size() + 2 || line.substr(line.size() - 2) != ">>") return {};
  return line.substr(open.size(), line.size() - open.size() - 2);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

Envelope parse_envelope(std::string_view prompt) {
  Envelope env;
  std::istringstream in{std::string(prompt)};
  std::string line;
  enum class Block { None, Doc, Records, Prior } block = Block::None;
  std::string prior_id;
  std::string buffer;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    switch (block) {
      case Block::Doc:
        if (line == "<<ENDDOC>>") {
          env.docs.back().text = buffer;
          buffer.clear();
          block = Block::None;
        } else {
          buffer += buffer.empty() ? line : " " + line;
        }
        continue;
      case Block::Records:
        if (line == "<<ENDRECORDS>>") {
          block = Block::None;
        } else {
          auto parts = split(line, '|');
          if (parts.size() >= 2) {
            RecordLine r;
            r.day = parts[0];
            r.score = std::atof(parts[1].c_str());
            if (parts.size() >= 5) r.terms = split(parts[4], ',');
            env.records.push_back(std::move(r));
          }
        }
        continue;
      case Block::Prior:
        if (line == "<<ENDPRIOR>>") {
          env.prior[prior_id] = buffer;
          buffer.clear();
          block = Block::None;
        } else {
          buffer += buffer.empty() ? line : "\n" + line;
        }
        continue;
      case Block::None:
        break;
    }
    if (auto v = marker_value(line, "STEP"); !v.empty()) {
      env.step = std::atoi(v.c_str());
    } else if (auto t = marker_value(line, "TASK"); !t.empty()) {
      env.task = t;
    } else if (auto e = marker_value(line, "EXPECT"); !e.empty()) {
      env.expected = split(e, ',');
    } else if (auto k = marker_value(line, "KEYWORD"); !k.empty()) {
      env.keyword = k;
    } else if (auto s = marker_value(line, "SYNONYMS"); !s.empty()) {
      env.synonyms = s;
    } else if (auto w = marker_value(line, "WINDOW"); !w.empty()) {
      env.window = w;
    } else if (auto kd = marker_value(line, "KIND"); !kd.empty()) {
      env.kind = kd;
    } else if (auto p = marker_value(line, "PRIOR"); !p.empty()) {
      prior_id = p;
      block = Block::Prior;
    } else if (line == "<<RECORDS>>") {
      block = Block::Records;
    } else if (line.rfind("<<DOC ", 0) == 0) {
      QuotedDoc d;
      d.url = attr(line, "url");
      d.source = attr(line, "source");
      d.confidence = attr(line, "confidence");
      d.score = std::atof(attr(line, "score").c_str());
      env.docs.push_back(std::move(d));
      block = Block::Doc;
    } else if (line.rfind("Message: ", 0) == 0) {
      env.message = line.substr(9);
    }
  }
  return env;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string snippet(const std::string& text, size_t max_words) {
  std::istringstream in(text);
  std::string word, out;
  size_t n = 0;
  while (in >> word) {
    if (n == max_words) return out + " ...";
    out += (n++ ? " " : "") + word;
  }
  return out;
}

const char* kNoData = "No documents were available for this analysis.";

class Writer {
 public:
  explicit Writer(const Envelope& env) : env_(env) {
    for (const auto& d : env.docs) {
      if (d.score > 0.05) ++pos_;
      else if (d.score < -0.05) ++neg_;
      else ++neu_;
    }
    // Daily records cover the whole window; quoted documents are a sample.
    if (!env.records.empty()) {
      for (const auto& r : env.records) mean_ += r.score;
      mean_ /= static_cast<double>(env.records.size());
    } else if (!env.docs.empty()) {
      for (const auto& d : env.docs) mean_ += d.score;
      mean_ /= static_cast<double>(env.docs.size());
    }
  }

  std::string section(const std::string& id) const {
    if (env_.step == 8 || env_.step == 0) {
      if (auto it = env_.prior.find(id); it != env_.prior.end()) return it->second;
    }
    if (id == "chart_data") return chart_data();
    if (env_.docs.empty() && env_.records.empty()) return kNoData;
    if (id == "introduction") return introduction();
    if (id == "summary") return summary();
    if (id == "cause_analysis") return env_.step == 5 ? cause_revision() : causes();
    if (id == "risk_assessment") return risk();
    if (id == "policy_suggestions") return policy();
    if (id == "associated_words") return associated();
    if (id == "conclusion") return conclusion();
    return kNoData;
  }

 private:
  std::string tone() const {
    if (mean_ > 0.05) return "positive";
    if (mean_ < -0.05) return "negative";
    return "mixed";
  }

  std::string subject() const { return "\"" + env_.keyword + "\""; }

  const QuotedDoc* extreme(bool most_positive) const {
    const QuotedDoc* best = nullptr;
    for (const auto& d : env_.docs) {
      if (!best || (most_positive ? d.score > best->score : d.score < best->score)) best = &d;
    }
    return best;
  }

  std::string cite(const QuotedDoc& d) const { return "\"" + snippet(d.text, 14) + "\" (" + d.url + ")"; }

  std::string trend_sentence() const {
    if (env_.records.size() < 2) return "Too few archived days to describe a trend.";
    const auto& newest = env_.records.front();
    const auto& oldest = env_.records.back();
    const double delta = newest.score - oldest.score;
    const std::string dir = delta > 0.02 ? "rising" : (delta < -0.02 ? "falling" : "broadly flat");
    return "The daily combined score moved from " + fixed3(oldest.score) + " on " + oldest.day + " to " +
           fixed3(newest.score) + " on " + newest.day + ", a " + dir + " trend.";
  }

  std::string introduction() const {
    std::string out = "This report reviews public opinion on " + subject();
    if (!env_.synonyms.empty()) out += " (also searched as: " + env_.synonyms + ")";
    if (!env_.window.empty()) out += " for " + env_.window;
    out += ".";
    if (env_.docs.empty()) {
      return out + " It relies on " + std::to_string(env_.records.size()) + " archived daily records.";
    }
    std::set<std::string> sources;
    for (const auto& d : env_.docs) sources.insert(d.source);
    out += " It draws on " + std::to_string(env_.docs.size()) + " documents from " +
           std::to_string(sources.size()) + " sources. Key reports:";
    for (const auto& d : env_.docs) out += "\n- " + cite(d);
    return out;
  }

  std::string summary() const {
    std::string out = "Overall evaluation: sentiment toward " + subject() + " is " + tone() +
                      " (mean combined score " + fixed3(mean_) + ").";
    if (!env_.docs.empty()) {
      out += " Of " + std::to_string(env_.docs.size()) + " quoted documents, " + std::to_string(pos_) +
             " read positive, " + std::to_string(neu_) + " neutral and " + std::to_string(neg_) + " negative.";
      const auto* hi = extreme(true);
      const auto* lo = extreme(false);
      out += " Most favourable: " + hi->url + " (" + fixed3(hi->score) + "). Most critical: " + lo->url + " (" +
             fixed3(lo->score) + ").";
    }
    if (!env_.records.empty()) out += " " + trend_sentence();
    return out;
  }

  std::string causes() const {
    if (env_.docs.empty()) return "Causes cannot be traced without source documents. " + trend_sentence();
    const auto* hi = extreme(true);
    const auto* lo = extreme(false);
    std::string out;
    if (hi->score > 0.05) out += "Positive sentiment is driven by coverage such as " + cite(*hi) + ". ";
    if (lo->score < -0.05) out += "Negative sentiment stems from reports such as " + cite(*lo) + ". ";
    if (out.empty()) out = "Coverage is largely factual, for example " + cite(*hi) + ". ";
    out += "Potential impact: if the " + tone() + " tone persists it will shape how consumers judge " + subject() +
           ".";
    return out;
  }

  std::string cause_revision() const {
    return "Causes\n" + causes() + "\n\nTrends\n" + trend_sentence();
  }

  std::string risk() const {
    const double share = env_.docs.empty() ? 0.0 : static_cast<double>(neg_) / static_cast<double>(env_.docs.size());
    std::string out = "Risk warning: ";
    out += share > 0.3 ? "elevated" : "low";
    out += ". " + std::to_string(neg_) + " of " + std::to_string(env_.docs.size()) + " quoted documents are negative.";
    if (const auto* lo = extreme(false); lo && lo->score < -0.05) {
      out += " The most critical item is " + lo->url + ".";
    }
    return out;
  }

  std::string policy() const {
    std::string out;
    const auto* lo = extreme(false);
    const auto* hi = extreme(true);
    int n = 1;
    if (lo && lo->score < -0.05) out += std::to_string(n++) + ". Respond to the complaints raised in " + lo->url + ".\n";
    if (hi && hi->score > 0.05) out += std::to_string(n++) + ". Reinforce what readers praise in " + hi->url + ".\n";
    out += std::to_string(n) + ". Keep monitoring " + subject() + " daily for shifts in tone.";
    return out;
  }

  std::string associated() const {
    std::map<std::string, int> counts;
    for (const auto& r : env_.records) {
      for (const auto& t : r.terms) ++counts[t];
    }
    if (counts.empty()) return "No associated words were recorded.";
    std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out = "Associated words:";
    for (size_t i = 0; i < ranked.size() && i < 10; ++i) {
      out += (i ? ", " : " ") + ranked[i].first + " (" + std::to_string(ranked[i].second) + ")";
    }
    return out + ".";
  }

  std::string conclusion() const {
    std::string out = "Conclusion: public opinion on " + subject() + " is " + tone();
    if (!env_.docs.empty()) out += ", based on " + std::to_string(env_.docs.size()) + " documents";
    return out + ". See the cited sources for details.";
  }

  std::string chart_data() const {
    const double n = static_cast<double>(env_.docs.size());
    Json dist = {{"positive", n > 0 ? pos_ / n : 0.0},
                 {"neutral", n > 0 ? neu_ / n : 0.0},
                 {"negative", n > 0 ? neg_ / n : 0.0}};
    Json trend = Json::array();
    for (auto it = env_.records.rbegin(); it != env_.records.rend(); ++it) trend.push_back({it->day, it->score});
    return canonical_dump({{"sentiment_distribution", dist}, {"trend", trend}, {"term_bars", Json::array()}});
  }

  const Envelope& env_;
  int pos_ = 0, neu_ = 0, neg_ = 0;
  double mean_ = 0.0;
};

std::string extract_request(const Envelope& env) {
  static const std::set<std::string> skip = {"please", "about", "would", "could", "report", "analysis",
                                             "predict", "trend", "what", "with", "from", "that", "this"};
  std::string best;
  std::string word;
  auto consider = [&] {
    std::string lower = word;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower.size() >= 4 && lower.size() > best.size() && !skip.contains(lower)) best = lower;
    word.clear();
  };
  for (char c : env.message) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(c);
    } else {
      consider();
    }
  }
  consider();
  if (best.empty()) return "{}";
  return canonical_dump({{"keyword", best}, {"kind", "present"}});
}

}  // namespace

std::string stub_completion(std::string_view system_prompt, std::string_view user_prompt) {
  (void)system_prompt;
  const Envelope env = parse_envelope(user_prompt);
  if (env.task == "extract_request") return extract_request(env);
  if (env.expected.empty()) {
    return "stub reply " + sha256_hex(user_prompt, 8) + ": " + snippet(std::string(user_prompt), 24);
  }
  const Writer writer(env);
  std::string out;
  for (const auto& id : env.expected) {
    out += "<<SECTION:" + id + ">>\n" + writer.section(id) + "\n<<END>>\n";
  }
  return out;
}

}  // namespace oracleloom
