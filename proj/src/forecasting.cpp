#include "oracleloom/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oracleloom/error.hpp"

namespace oracleloom {

namespace {

void require_horizon(int horizon) {
  if (horizon < 1) throw Error(ErrorCode::BadArgument, "forecast horizon must be >= 1");
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::vector<double> difference(std::span<const double> v) {
  std::vector<double> out;
  if (v.size() < 2) return out;
  out.reserve(v.size() - 1);
  for (size_t i = 1; i < v.size(); ++i) out.push_back(v[i] - v[i - 1]);
  return out;
}

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (!(std::abs(a[pivot][col]) > 1e-300)) {
      throw Error(ErrorCode::SingularDesign, "normal equations are singular");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SingularDesign, "normal equations produced a non-finite solution");
  }
  return x;
}

/// Least squares of v[t] on [1?, v[t-1] .. v[t-p]] for t = p .. n-1, ridge on
/// the diagonal. Returns [intercept?, coef_1 .. coef_p].
std::vector<double> ols_lagged(std::span<const double> v, int p, bool with_intercept) {
  const size_t k = static_cast<size_t>(p) + (with_intercept ? 1 : 0);
  std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
  std::vector<double> xty(k, 0.0);
  std::vector<double> row(k);
  for (size_t t = static_cast<size_t>(p); t < v.size(); ++t) {
    size_t c = 0;
    if (with_intercept) row[c++] = 1.0;
    for (int i = 1; i <= p; ++i) row[c++] = v[t - static_cast<size_t>(i)];
    for (size_t r = 0; r < k; ++r) {
      xty[r] += row[r] * v[t];
      for (size_t s = 0; s < k; ++s) xtx[r][s] += row[r] * row[s];
    }
  }
  for (size_t r = 0; r < k; ++r) xtx[r][r] += kArRidge;
  return solve_linear(std::move(xtx), std::move(xty));
}

struct ArmaParams {
  double intercept = 0.0;
  std::vector<double> ar;
  std::vector<double> ma;
};

/// In-sample innovations conditional on the first p observations, with
/// innovations before index p taken as zero.
std::vector<double> arma_residuals(std::span<const double> w, const ArmaParams& m) {
  const size_t p = m.ar.size();
  const size_t q = m.ma.size();
  std::vector<double> e(w.size(), 0.0);
  for (size_t t = p; t < w.size(); ++t) {
    double pred = m.intercept;
    for (size_t i = 1; i <= p; ++i) pred += m.ar[i - 1] * w[t - i];
    for (size_t j = 1; j <= q; ++j) {
      if (t >= j + p) pred += m.ma[j - 1] * e[t - j];
    }
    e[t] = w[t] - pred;
  }
  return e;
}

double conditional_sum_of_squares(std::span<const double> w, const ArmaParams& m) {
  const auto e = arma_residuals(w, m);
  double css = 0.0;
  for (size_t t = m.ar.size(); t < e.size(); ++t) css += e[t] * e[t];
  return std::isfinite(css) ? css : std::numeric_limits<double>::max();
}

ArmaParams unpack(std::span<const double> x, bool with_intercept, int p, int q) {
  ArmaParams m;
  size_t i = 0;
  if (with_intercept) m.intercept = x[i++];
  m.ar.assign(x.begin() + static_cast<long>(i), x.begin() + static_cast<long>(i + static_cast<size_t>(p)));
  i += static_cast<size_t>(p);
  m.ma.assign(x.begin() + static_cast<long>(i), x.begin() + static_cast<long>(i + static_cast<size_t>(q)));
  return m;
}

Json vec_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

std::string_view to_string(ModelId id) {
  switch (id) {
    case ModelId::MA: return "ma";
    case ModelId::AR: return "ar";
    case ModelId::ARIMA: return "arima";
  }
  return "ma";
}

ModelId model_id_from_string(std::string_view s) {
  if (s == "ma") return ModelId::MA;
  if (s == "ar") return ModelId::AR;
  if (s == "arima") return ModelId::ARIMA;
  throw Error(ErrorCode::BadArgument, "unknown model '" + std::string(s) + "'");
}

Json ForecastResult::to_json() const {
  Json params_json;
  if (const auto* ma = std::get_if<MAModel>(&params)) {
    params_json = {{"window", ma->window}};
  } else if (const auto* ar = std::get_if<ARModel>(&params)) {
    params_json = {{"p", ar->p},
                   {"intercept", ar->intercept},
                   {"with_intercept", ar->with_intercept},
                   {"coefficients", vec_json(ar->coefficients)},
                   {"fitted_on", ar->fitted_on}};
  } else if (const auto* arima = std::get_if<ARIMAModel>(&params)) {
    params_json = {{"p", arima->p},
                   {"d", arima->d},
                   {"q", arima->q},
                   {"ar_coefficients", vec_json(arima->ar_coefficients)},
                   {"ma_coefficients", vec_json(arima->ma_coefficients)},
                   {"intercept", arima->intercept},
                   {"css", arima->css},
                   {"iterations", arima->iterations},
                   {"converged", arima->converged}};
  }
  Json j = {{"model_id", std::string(oracleloom::to_string(model_id))},
            {"params", params_json},
            {"horizon", horizon},
            {"predictions", vec_json(predictions)}};
  if (mse) j["mse"] = *mse;
  return j;
}

ForecastResult moving_average_forecast(const Series& series, int window, int horizon) {
  require_horizon(horizon);
  if (window < 1) throw Error(ErrorCode::BadArgument, "moving average window must be >= 1");
  if (series.size() < static_cast<size_t>(window)) {
    throw Error(ErrorCode::TooShort, "series has " + std::to_string(series.size()) + " points, window needs " +
                                         std::to_string(window));
  }
  std::vector<double> history = series.values;
  ForecastResult out{ModelId::MA, MAModel{window}, horizon, {}, std::nullopt};
  for (int step = 0; step < horizon; ++step) {
    double sum = 0.0;
    for (size_t i = history.size() - static_cast<size_t>(window); i < history.size(); ++i) sum += history[i];
    double next = sum / window;
    // The mean of identical values is that value; keep it exact.
    if (is_constant(std::span<const double>(history).last(static_cast<size_t>(window)))) next = history.back();
    history.push_back(next);
    out.predictions.push_back(next);
  }
  return out;
}

ARModel fit_ar(const Series& series, int p, bool with_intercept) {
  if (p < 1) throw Error(ErrorCode::BadArgument, "AR order must be >= 1");
  const size_t needed = static_cast<size_t>(p) + 2 + (with_intercept ? 1 : 0);
  if (series.size() < needed) {
    throw Error(ErrorCode::TooShort, "AR(" + std::to_string(p) + ") needs at least " + std::to_string(needed) +
                                         " points, got " + std::to_string(series.size()));
  }
  ARModel m;
  m.p = p;
  m.with_intercept = with_intercept;
  m.fitted_on = static_cast<int>(series.size());
  m.coefficients.assign(static_cast<size_t>(p), 0.0);
  if (is_constant(series.values)) {
    if (with_intercept) {
      m.intercept = series.values.front();
    } else {
      m.coefficients[0] = 1.0;
    }
    return m;
  }
  auto beta = ols_lagged(series.values, p, with_intercept);
  size_t i = 0;
  if (with_intercept) m.intercept = beta[i++];
  for (int k = 0; k < p; ++k) m.coefficients[static_cast<size_t>(k)] = beta[i++];
  return m;
}

ForecastResult forecast_ar(const ARModel& model, const Series& series, int horizon) {
  require_horizon(horizon);
  if (series.size() < static_cast<size_t>(model.p)) {
    throw Error(ErrorCode::TooShort, "forecast needs at least p observations");
  }
  std::vector<double> history = series.values;
  ForecastResult out{ModelId::AR, model, horizon, {}, std::nullopt};
  for (int step = 0; step < horizon; ++step) {
    double next = model.intercept;
    for (int i = 1; i <= model.p; ++i) {
      next += model.coefficients[static_cast<size_t>(i - 1)] * history[history.size() - static_cast<size_t>(i)];
    }
    history.push_back(next);
    out.predictions.push_back(next);
  }
  return out;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                             int max_iterations, double tolerance) {
  const size_t n = start.size();
  NelderMeadResult result;
  if (n == 0) {
    result.value = f(start);
    result.converged = true;
    return result;
  }
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] = start[i] != 0.0 ? start[i] * 1.05 : 0.1;
  }
  std::vector<double> fv(n + 1);
  for (size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  std::vector<size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (size_t i : order) {
      s2.push_back(simplex[i]);
      f2.push_back(fv[i]);
    }
    simplex = std::move(s2);
    fv = std::move(f2);
  };

  auto point = [&](const std::vector<double>& centroid, double t) {
    std::vector<double> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex[n][i] - centroid[i]);
    return x;
  };

  int iter = 0;
  sort_simplex();
  while (true) {
    double xspread = 0.0, fspread = 0.0;
    for (size_t k = 1; k <= n; ++k) {
      for (size_t i = 0; i < n; ++i) xspread = std::max(xspread, std::abs(simplex[k][i] - simplex[0][i]));
      fspread = std::max(fspread, std::abs(fv[k] - fv[0]));
    }
    if (xspread <= tolerance && fspread <= tolerance) {
      result.converged = true;
      break;
    }
    if (iter >= max_iterations) break;
    ++iter;

    std::vector<double> centroid(n, 0.0);
    for (size_t k = 0; k < n; ++k) {
      for (size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
    }
    auto xr = point(centroid, -1.0);
    double fr = f(xr);
    if (fr < fv[0]) {
      auto xe = point(centroid, -2.0);
      double fe = f(xe);
      if (fe < fr) {
        simplex[n] = std::move(xe);
        fv[n] = fe;
      } else {
        simplex[n] = std::move(xr);
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = std::move(xr);
      fv[n] = fr;
    } else {
      bool shrink = false;
      if (fr < fv[n]) {
        auto xc = point(centroid, -0.5);
        double fc = f(xc);
        if (fc <= fr) {
          simplex[n] = std::move(xc);
          fv[n] = fc;
        } else {
          shrink = true;
        }
      } else {
        auto xcc = point(centroid, 0.5);
        double fcc = f(xcc);
        if (fcc < fv[n]) {
          simplex[n] = std::move(xcc);
          fv[n] = fcc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (size_t k = 1; k <= n; ++k) {
          for (size_t i = 0; i < n; ++i) simplex[k][i] = simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]);
          fv[k] = f(simplex[k]);
        }
      }
    }
    sort_simplex();
  }
  result.x = simplex[0];
  result.value = fv[0];
  result.iterations = iter;
  return result;
}

ARIMAModel fit_arima(const Series& series, int p, int d, int q) {
  if (p < 0 || q < 0 || d < 0 || d > 2) throw Error(ErrorCode::BadArgument, "ARIMA orders need p,q >= 0, 0 <= d <= 2");
  std::vector<double> w = series.values;
  for (int k = 0; k < d; ++k) w = difference(w);
  const size_t needed = static_cast<size_t>(p + q + 2);
  if (w.size() < needed) {
    throw Error(ErrorCode::TooShort, "differenced series has " + std::to_string(w.size()) + " points, ARIMA needs " +
                                         std::to_string(needed));
  }
  const bool with_intercept = d == 0;
  ARIMAModel m;
  m.p = p;
  m.d = d;
  m.q = q;
  m.ar_coefficients.assign(static_cast<size_t>(p), 0.0);
  m.ma_coefficients.assign(static_cast<size_t>(q), 0.0);

  if (is_constant(w) && (with_intercept || w.front() == 0.0)) {
    // Every parameterization with zero lags reproduces the series exactly.
    m.intercept = with_intercept ? w.front() : 0.0;
    m.css = 0.0;
    return m;
  }

  std::vector<double> start;
  if (p > 0) {
    start = ols_lagged(w, p, with_intercept);
  } else if (with_intercept) {
    start = {std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size())};
  }
  start.resize(start.size() + static_cast<size_t>(q), 0.0);

  auto objective = [&](std::span<const double> x) {
    return conditional_sum_of_squares(w, unpack(x, with_intercept, p, q));
  };
  const auto nm = nelder_mead(objective, start);
  const auto params = unpack(nm.x, with_intercept, p, q);
  m.intercept = params.intercept;
  m.ar_coefficients = params.ar;
  m.ma_coefficients = params.ma;
  m.css = nm.value;
  m.iterations = nm.iterations;
  m.converged = nm.converged;
  return m;
}

ForecastResult forecast_arima(const ARIMAModel& model, const Series& series, int horizon) {
  require_horizon(horizon);
  std::vector<std::vector<double>> levels{series.values};
  for (int k = 0; k < model.d; ++k) levels.push_back(difference(levels.back()));
  auto& w = levels.back();
  if (w.size() < static_cast<size_t>(std::max(model.p, 0)) || series.values.empty() || levels[model.d].empty()) {
    throw Error(ErrorCode::TooShort, "series too short to forecast ARIMA");
  }
  const ArmaParams params{model.intercept, model.ar_coefficients, model.ma_coefficients};
  auto e = arma_residuals(w, params);
  const size_t p = model.ar_coefficients.size();
  const size_t q = model.ma_coefficients.size();

  ForecastResult out{ModelId::ARIMA, model, horizon, {}, std::nullopt};
  for (int step = 0; step < horizon; ++step) {
    const size_t t = w.size();
    double next = params.intercept;
    for (size_t i = 1; i <= p; ++i) next += params.ar[i - 1] * w[t - i];
    for (size_t j = 1; j <= q; ++j) {
      if (t >= j) next += params.ma[j - 1] * e[t - j];
    }
    w.push_back(next);
    e.push_back(0.0);
    // Integrate back up through each differencing level.
    for (int k = model.d - 1; k >= 0; --k) {
      auto& lvl = levels[static_cast<size_t>(k)];
      lvl.push_back(lvl.back() + levels[static_cast<size_t>(k + 1)].back());
    }
    out.predictions.push_back(levels.front().back());
  }
  return out;
}

Series weighted_truth(const std::map<std::string, Series>& per_source, const std::map<std::string, double>& weights) {
  if (per_source.empty()) throw Error(ErrorCode::BadArgument, "weighted_truth needs at least one series");
  const Series& first = per_source.begin()->second;
  for (const auto& [id, s] : per_source) {
    if (s.size() != first.size() || s.start != first.start) {
      throw Error(ErrorCode::LengthMismatch, "series '" + id + "' does not share start and length");
    }
  }
  double total = 0.0;
  for (const auto& [id, s] : per_source) {
    auto it = weights.find(id);
    if (it != weights.end()) total += it->second;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::AllZero, "no weight on the supplied sources");
  Series out{first.start, std::vector<double>(first.size(), 0.0), "weighted_truth"};
  for (const auto& [id, s] : per_source) {
    auto it = weights.find(id);
    if (it == weights.end() || it->second == 0.0) continue;
    const double w = it->second / total;
    for (size_t i = 0; i < s.size(); ++i) out.values[i] += w * s.values[i];
  }
  return out;
}

double mse(std::span<const double> predictions, std::span<const double> actual) {
  if (predictions.size() != actual.size() || predictions.empty()) {
    throw Error(ErrorCode::LengthMismatch, "mse needs two equal-length, non-empty lists");
  }
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double diff = predictions[i] - actual[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(predictions.size());
}

ModelChoice select_default_model(size_t series_length) {
  ModelChoice c;
  if (series_length < 5) {
    c.id = ModelId::MA;
    c.ma_window = static_cast<int>(std::clamp<size_t>(series_length, 1, 3));
  } else if (series_length < 30) {
    c.id = ModelId::AR;
  } else {
    c.id = ModelId::ARIMA;
  }
  return c;
}

ForecastResult forecast_with(const ModelChoice& choice, const Series& series, int horizon) {
  switch (choice.id) {
    case ModelId::MA: return moving_average_forecast(series, choice.ma_window, horizon);
    case ModelId::AR: return forecast_ar(fit_ar(series, choice.ar_order, true), series, horizon);
    case ModelId::ARIMA:
      return forecast_arima(fit_arima(series, choice.arima_p, choice.arima_d, choice.arima_q), series, horizon);
  }
  throw Error(ErrorCode::BadArgument, "unknown model");
}

std::vector<ForecastResult> compare_models(const Series& series, int holdout) {
  if (holdout < 1) throw Error(ErrorCode::BadArgument, "holdout must be >= 1");
  if (series.size() < static_cast<size_t>(holdout) + 6) {
    throw Error(ErrorCode::TooShort, "compare_models needs at least holdout + 6 points");
  }
  const size_t fit_len = series.size() - static_cast<size_t>(holdout);
  Series prefix{series.start, {series.values.begin(), series.values.begin() + static_cast<long>(fit_len)}, series.name};
  std::span<const double> truth(series.values.data() + fit_len, static_cast<size_t>(holdout));

  std::vector<ForecastResult> results;
  for (ModelId id : {ModelId::MA, ModelId::AR, ModelId::ARIMA}) {
    ModelChoice choice;
    choice.id = id;
    auto r = forecast_with(choice, prefix, holdout);
    r.mse = mse(r.predictions, truth);
    results.push_back(std::move(r));
  }
  // MSEs are compared on a grid of kMseTieTolerance times the held-out scale,
  // so rounding noise between two exact fits counts as a tie.
  double scale = 1.0;
  for (double v : truth) scale = std::max(scale, v * v);
  const double grid = kMseTieTolerance * scale;
  std::stable_sort(results.begin(), results.end(), [grid](const ForecastResult& a, const ForecastResult& b) {
    return std::floor(*a.mse / grid) < std::floor(*b.mse / grid);
  });
  return results;
}

}  // namespace oracleloom
