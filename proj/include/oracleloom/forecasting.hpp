#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oracleloom/canonical_json.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom {

/// One value per consecutive day starting at `start`; gapless.
struct Series {
  Date start;
  std::vector<double> values;
  std::string name;

  size_t size() const { return values.size(); }
};

struct MAModel {
  int window = 3;
};

struct ARModel {
  int p = 0;
  double intercept = 0.0;
  bool with_intercept = false;
  std::vector<double> coefficients;
  int fitted_on = 0;
};

struct ARIMAModel {
  int p = 0;
  int d = 0;
  int q = 0;
  std::vector<double> ar_coefficients;
  std::vector<double> ma_coefficients;
  double intercept = 0.0;
  double css = 0.0;
  int iterations = 0;
  bool converged = true;
};

enum class ModelId { MA, AR, ARIMA };
std::string_view to_string(ModelId id);
ModelId model_id_from_string(std::string_view s);

using ModelParams = std::variant<MAModel, ARModel, ARIMAModel>;

struct ForecastResult {
  ModelId model_id = ModelId::MA;
  ModelParams params;
  int horizon = 0;
  std::vector<double> predictions;
  std::optional<double> mse;

  Json to_json() const;
};

/// Ridge added to the normal-equation diagonal when fitting AR models.
inline constexpr double kArRidge = 1e-10;
inline constexpr int kNelderMeadMaxIterations = 500;
inline constexpr double kNelderMeadTolerance = 1e-8;
inline constexpr int kDefaultHorizon = 3;

ForecastResult moving_average_forecast(const Series& series, int window, int horizon);

/// Ordinary least squares on the lagged design, normal equations with a
/// kArRidge diagonal. A constant series is rank-deficient; it is fit exactly
/// as the fixed point (intercept = c, or unit first lag without intercept).
ARModel fit_ar(const Series& series, int p, bool with_intercept);
ForecastResult forecast_ar(const ARModel& model, const Series& series, int horizon);

/// Differences `d` times, then fits ARMA(p, q) by conditional sum of squares
/// (pre-sample innovations zero) with Nelder-Mead started from the AR OLS
/// solution. An intercept is estimated only when d == 0.
ARIMAModel fit_arima(const Series& series, int p, int d, int q);
ForecastResult forecast_arima(const ARIMAModel& model, const Series& series, int horizon);

/// Element-wise source-weighted mean. Sources in `weights` that are absent
/// from `per_source` are dropped and the rest renormalized.
Series weighted_truth(const std::map<std::string, Series>& per_source, const std::map<std::string, double>& weights);

double mse(std::span<const double> predictions, std::span<const double> actual);

struct ModelChoice {
  ModelId id = ModelId::MA;
  int ma_window = 3;
  int ar_order = 2;
  int arima_p = 1, arima_d = 1, arima_q = 1;
};

/// < 5 points: MA(min(3, n)); < 30: AR(2); otherwise ARIMA(1,1,1).
ModelChoice select_default_model(size_t series_length);

/// Fits and forecasts with the chosen model (AR always with intercept).
ForecastResult forecast_with(const ModelChoice& choice, const Series& series, int horizon);

/// Relative MSE difference below which two models rank as tied.
inline constexpr double kMseTieTolerance = 1e-12;

/// Fits MA(3), AR(2), ARIMA(1,1,1) on all but the last `holdout` points and
/// scores each on the held-out suffix. Sorted by MSE, ties MA < AR < ARIMA;
/// MSEs within kMseTieTolerance x max(1, max actual^2) are ties.
std::vector<ForecastResult> compare_models(const Series& series, int holdout);

/// Minimizes `f` from `start`. Exposed for tests.
struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                             int max_iterations = kNelderMeadMaxIterations, double tolerance = kNelderMeadTolerance);

}  // namespace oracleloom
