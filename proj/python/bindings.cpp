// Thin pybind11 layer. Structured results cross the boundary as canonical
// JSON strings; the Python package decodes them.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "oracleloom/cli.hpp"
#include "oracleloom/config.hpp"
#include "oracleloom/forecasting.hpp"
#include "oracleloom/record_store.hpp"
#include "oracleloom/report.hpp"
#include "oracleloom/sentiment.hpp"

namespace py = pybind11;
using namespace oracleloom;

namespace {

Date parse_day(const std::string& s) {
  auto d = Date::parse(s);
  if (!d) throw Error(ErrorCode::BadDate, "expected YYYY-MM-DD, got '" + s + "'");
  return *d;
}

Series make_series(const std::vector<double>& values, const std::string& start) {
  return Series{.start = parse_day(start), .values = values, .name = "series"};
}

ModelChoice choice_for(const std::string& model, size_t n) {
  if (model == "auto") return select_default_model(n);
  ModelChoice c;
  c.id = model_id_from_string(model);
  return c;
}

Clock clock_for(const std::optional<std::string>& now) {
  if (!now) return system_clock();
  if (auto ts = parse_rfc3339(*now)) return fixed_clock(*ts);
  return fixed_clock(start_of(parse_day(*now)));
}

ServiceConfig config_for(const std::optional<std::string>& config, const std::optional<std::string>& data_dir,
                         const std::optional<std::string>& fixtures, const std::optional<std::string>& lexicon,
                         const std::optional<std::string>& stopwords) {
  ServiceConfig c = ServiceConfig::resolve(config ? std::optional<std::filesystem::path>(*config) : std::nullopt);
  if (data_dir) c.data_dir = *data_dir;
  if (fixtures) c.use_fixture_dir(*fixtures);
  if (lexicon) c.lexicon_path = *lexicon;
  if (stopwords) c.stopwords_path = *stopwords;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "oracleloom native core";

  // Leaked on purpose: the type must outlive interpreter teardown.
  static auto* error_type = new py::object(py::exception<Error>(m, "OracleError", PyExc_RuntimeError));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = (*error_type)(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type->ptr(), exc.ptr());
    }
  });

  m.def("combine_score", [](double p, double s, double w_p, double w_s) {
    return combine_score(p, s, ScoreWeights(w_p, w_s));
  }, py::arg("polarity"), py::arg("subjectivity"), py::arg("w_p") = 0.7, py::arg("w_s") = 0.3);

  m.def("classify", [](double score, double neg_max, double pos_min) {
    return std::string(to_string(classify(score, Thresholds{neg_max, pos_min})));
  }, py::arg("score"), py::arg("neg_max") = -0.05, py::arg("pos_min") = 0.05);

  m.def("tokenize", [](const std::string& text) { return tokenize(text); });

  py::class_<Lexicon>(m, "Lexicon")
      .def_static("load", [](const std::string& path) { return Lexicon::load(path); })
      .def_static("parse", [](const std::string& tsv) { return Lexicon::parse(tsv); })
      .def("__len__", &Lexicon::size);

  m.def("score_text", [](const std::string& text, const Lexicon& lexicon, double w_p, double w_s) {
    const SentimentScore s = score_text(text, lexicon, ScoreWeights(w_p, w_s));
    return py::dict(py::arg("polarity") = s.polarity, py::arg("subjectivity") = s.subjectivity,
                    py::arg("score") = s.score, py::arg("matched_terms") = s.matched_terms);
  }, py::arg("text"), py::arg("lexicon"), py::arg("w_p") = 0.7, py::arg("w_s") = 0.3);

  m.def("forecast_json", [](const std::vector<double>& values, const std::string& model, int horizon,
                            const std::string& start) {
    const Series s = make_series(values, start);
    return canonical_dump(forecast_with(choice_for(model, s.size()), s, horizon).to_json());
  }, py::arg("values"), py::arg("model") = "auto", py::arg("horizon") = kDefaultHorizon,
     py::arg("start") = "2000-01-01");

  m.def("compare_models_json", [](const std::vector<double>& values, int holdout, const std::string& start) {
    Json out = Json::array();
    for (const auto& r : compare_models(make_series(values, start), holdout)) out.push_back(r.to_json());
    return canonical_dump(out);
  }, py::arg("values"), py::arg("holdout"), py::arg("start") = "2000-01-01");

  m.def("records_json", [](const std::string& data_dir, const std::string& keyword, const std::string& start,
                           const std::string& end, const std::string& fill) {
    RecordStore store(data_dir);
    Json out = Json::array();
    for (const auto& r : store.get_range(keyword, parse_day(start), parse_day(end), fill_mode_from_string(fill))) {
      out.push_back(r.to_json());
    }
    return canonical_dump(out);
  }, py::arg("data_dir"), py::arg("keyword"), py::arg("start"), py::arg("end"), py::arg("fill") = "none");

  m.def("generate_report_json",
        [](const std::string& keyword, const std::string& kind, const std::optional<std::string>& start,
           const std::optional<std::string>& end, const std::optional<std::string>& url,
           const std::optional<std::string>& now, const std::optional<std::string>& config,
           const std::optional<std::string>& data_dir, const std::optional<std::string>& fixtures,
           const std::optional<std::string>& lexicon, const std::optional<std::string>& stopwords,
           const std::optional<std::string>& provider) {
          const ServiceConfig cfg = config_for(config, data_dir, fixtures, lexicon, stopwords);
          const Clock clock = clock_for(now);
          RequestFields f = cfg.request_defaults(day_of(clock()));
          f.keyword = keyword;
          f.kind = report_kind_from_string(kind);
          if (start) f.window.start = parse_day(*start);
          if (end) f.window.end = parse_day(*end);
          if (url) f.url = *url;
          const AnalysisRequest request = AnalysisRequest::create(std::move(f));

          py::gil_scoped_release release;
          const Lexicon lex = Lexicon::load(cfg.lexicon_path);
          const StopwordSet stop = load_stopwords(cfg.stopwords_path);
          RecordStore store(cfg.data_dir);
          LlmGateway gateway(cfg.providers, cfg.token_budget, real_sleeper());
          PipelineDeps deps;
          deps.sources = cfg.adapters;
          deps.lexicon = &lex;
          deps.stopwords = &stop;
          deps.store = &store;
          deps.gateway = &gateway;
          deps.provider_id = provider.value_or(cfg.default_provider);
          deps.clock = clock;
          const Report report = run_pipeline(request, deps);
          const auto dir = write_report_artifacts(report, cfg.data_dir);
          return canonical_dump({{"dir", dir.string()}, {"report", report.to_json()}});
        },
        py::arg("keyword"), py::arg("kind") = "present", py::arg("start") = py::none(), py::arg("end") = py::none(),
        py::arg("url") = py::none(), py::arg("now") = py::none(), py::arg("config") = py::none(),
        py::arg("data_dir") = py::none(), py::arg("fixtures") = py::none(), py::arg("lexicon") = py::none(),
        py::arg("stopwords") = py::none(), py::arg("provider") = py::none());

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "oracleloom");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}
