#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracleloom/error.hpp"
#include "oracleloom/forecasting.hpp"

using namespace oracleloom;

namespace {

Series make(std::vector<double> v) { return Series{Date(2024, 1, 1), std::move(v), "s"}; }

Series linear(int n) {
  std::vector<double> v;
  for (int t = 1; t <= n; ++t) v.push_back(t);
  return make(v);
}

Series ar1_noise(std::mt19937_64& rng, int n, double phi, double c) {
  std::normal_distribution<double> eps(0.0, 0.1);
  std::vector<double> v{c / (1 - phi)};
  while (static_cast<int>(v.size()) < n) v.push_back(c + phi * v.back() + eps(rng));
  return make(v);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::BadArgument;
}

// Least squares by modified Gram-Schmidt QR, independent of the normal
// equations used by fit_ar.
std::vector<double> qr_least_squares(std::vector<std::vector<double>> cols, std::vector<double> y) {
  const size_t k = cols.size();
  std::vector<std::vector<double>> r(k, std::vector<double>(k, 0.0));
  for (size_t j = 0; j < k; ++j) {
    for (size_t i = 0; i < j; ++i) {
      r[i][j] = std::inner_product(cols[i].begin(), cols[i].end(), cols[j].begin(), 0.0);
      for (size_t n = 0; n < y.size(); ++n) cols[j][n] -= r[i][j] * cols[i][n];
    }
    r[j][j] = std::sqrt(std::inner_product(cols[j].begin(), cols[j].end(), cols[j].begin(), 0.0));
    for (auto& x : cols[j]) x /= r[j][j];
  }
  std::vector<double> qty(k);
  for (size_t j = 0; j < k; ++j) qty[j] = std::inner_product(cols[j].begin(), cols[j].end(), y.begin(), 0.0);
  std::vector<double> beta(k);
  for (size_t j = k; j-- > 0;) {
    double s = qty[j];
    for (size_t i = j + 1; i < k; ++i) s -= r[j][i] * beta[i];
    beta[j] = s / r[j][j];
  }
  return beta;
}

}  // namespace

TEST_CASE("moving average examples") {
  auto r = moving_average_forecast(make(std::vector<double>(10, 0.3)), 3, 2);
  CHECK(r.predictions.size() == 2);
  CHECK(r.predictions[0] == doctest::Approx(0.3));
  CHECK(r.predictions[1] == doctest::Approx(0.3));
  CHECK(moving_average_forecast(make({1, 2, 3}), 3, 1).predictions == std::vector<double>{2.0});
  CHECK(code_of([] { moving_average_forecast(make({1, 2}), 3, 1); }) == ErrorCode::TooShort);
}

TEST_CASE("moving average is recursive") {
  const auto r = moving_average_forecast(make({0, 3, 6}), 2, 3);
  CHECK(r.predictions[0] == doctest::Approx(4.5));
  CHECK(r.predictions[1] == doctest::Approx(5.25));
  CHECK(r.predictions[2] == doctest::Approx(4.875));
}

TEST_CASE("fit_ar recovers the affine identity") {
  const auto m = fit_ar(linear(20), 2, false);
  REQUIRE(m.coefficients.size() == 2);
  CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(m.coefficients[1] == doctest::Approx(-1.0).epsilon(1e-6));
  const auto f = forecast_ar(m, linear(20), 3);
  CHECK(f.predictions[0] == doctest::Approx(21).epsilon(1e-6));
  CHECK(f.predictions[1] == doctest::Approx(22).epsilon(1e-6));
  CHECK(f.predictions[2] == doctest::Approx(23).epsilon(1e-6));
}

TEST_CASE("fit_ar on a constant series forecasts the constant") {
  const auto s = make(std::vector<double>(10, 0.42));
  const auto f = forecast_ar(fit_ar(s, 1, true), s, 1);
  CHECK(std::abs(f.predictions[0] - 0.42) <= 1e-9);
  CHECK(code_of([] { fit_ar(make({1, 2}), 2, false); }) == ErrorCode::TooShort);
}

TEST_CASE("fit_ar agrees with a QR least-squares oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Series s = ar1_noise(rng, 25 + trial, 0.6, 0.05);
    const int p = 1 + trial % 3;
    std::vector<std::vector<double>> cols(p + 1);
    std::vector<double> y;
    for (size_t t = p; t < s.size(); ++t) {
      cols[0].push_back(1.0);
      for (int i = 1; i <= p; ++i) cols[i].push_back(s.values[t - i]);
      y.push_back(s.values[t]);
    }
    const auto beta = qr_least_squares(cols, y);
    const auto m = fit_ar(s, p, true);
    CHECK(m.intercept == doctest::Approx(beta[0]).epsilon(1e-6));
    for (int i = 0; i < p; ++i) CHECK(m.coefficients[i] == doctest::Approx(beta[i + 1]).epsilon(1e-6));
  }
}

TEST_CASE("forecast_ar trivial models") {
  ARModel flat{.p = 1, .intercept = 0.4, .with_intercept = true, .coefficients = {0.0}, .fitted_on = 5};
  CHECK(forecast_ar(flat, make({9, 8, 7}), 2).predictions == std::vector<double>{0.4, 0.4});
  ARModel walk{.p = 1, .intercept = 0.0, .with_intercept = false, .coefficients = {1.0}, .fitted_on = 5};
  CHECK(forecast_ar(walk, make({1, 5, -0.25}), 3).predictions == std::vector<double>{-0.25, -0.25, -0.25});
}

TEST_CASE("fit_arima examples") {
  const Series s = make({0.1, -0.2, 0.35, 0.3, 0.05, 0.2, -0.1});
  const auto rw = fit_arima(s, 0, 1, 0);
  CHECK(rw.ar_coefficients.empty());
  CHECK(rw.ma_coefficients.empty());
  CHECK(forecast_arima(rw, s, 2).predictions == std::vector<double>{-0.1, -0.1});

  const auto line = linear(15);
  const auto f = forecast_arima(fit_arima(line, 1, 1, 0), line, 1);
  CHECK(std::abs(f.predictions[0] - 16.0) <= 1e-3);

  CHECK(code_of([] { fit_arima(make({1, 2, 3}), 1, 1, 1); }) == ErrorCode::TooShort);
}

TEST_CASE("ARIMA(p,0,0) agrees with OLS AR") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const Series s = ar1_noise(rng, 20 + 3 * trial, 0.2 + 0.04 * trial, 0.1);
    const auto a = fit_arima(s, 1, 0, 0);
    const auto o = fit_ar(s, 1, true);
    CHECK(std::abs(a.ar_coefficients[0] - o.coefficients[0]) <= 1e-4);
    CHECK(std::abs(a.intercept - o.intercept) <= 1e-4);
  }
}

TEST_CASE("ARIMA(0,1,0) repeats the last observation exactly") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Series s = ar1_noise(rng, 6 + trial, 0.5, 0.0);
    const auto f = forecast_arima(fit_arima(s, 0, 1, 0), s, 4);
    for (double x : f.predictions) CHECK(x == s.values.back());
  }
}

TEST_CASE("nelder_mead minimizes a quadratic") {
  const auto r = nelder_mead(
      [](std::span<const double> x) { return (x[0] - 1.5) * (x[0] - 1.5) + 2 * (x[1] + 0.5) * (x[1] + 0.5); },
      {0.0, 0.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-3));
}

TEST_CASE("weighted_truth") {
  const Series a = make({0.4, 0.4});
  const Series b = make({0.0, 0.0});
  CHECK(weighted_truth({{"a", a}}, {{"a", 1.0}}).values == a.values);

  const auto sym = weighted_truth({{"a", make({0.3, -0.2})}, {"b", make({-0.3, 0.2})}}, {{"a", 0.5}, {"b", 0.5}});
  CHECK(sym.values[0] == doctest::Approx(0.0));
  CHECK(sym.values[1] == doctest::Approx(0.0));

  const auto w = weighted_truth({{"a", a}, {"b", b}}, {{"a", 0.25}, {"b", 0.75}});
  CHECK(w.values[0] == doctest::Approx(0.1));
  CHECK(w.values[1] == doctest::Approx(0.1));

  const auto missing = weighted_truth({{"a", a}}, {{"a", 0.25}, {"b", 0.75}});
  CHECK(missing.values[0] == doctest::Approx(0.4));

  CHECK(code_of([&] { weighted_truth({{"a", a}, {"b", make({1.0})}}, {{"a", 0.5}, {"b", 0.5}}); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("mse") {
  const std::vector<double> x = {0.1, 0.2};
  CHECK(mse(x, x) == 0.0);
  CHECK(mse(std::vector<double>{1}, std::vector<double>{0}) == 1.0);
  CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{0, 0}) == 2.5);
  CHECK(code_of([] { mse(std::vector<double>{1}, std::vector<double>{1, 2}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("mse is non-negative and zero only on equal lists") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> a(1 + i % 7), b;
    for (auto& x : a) x = u(rng);
    b = a;
    CHECK(mse(a, b) == 0.0);
    b[i % b.size()] += 1e-3;
    CHECK(mse(a, b) > 0.0);
  }
}

TEST_CASE("select_default_model") {
  CHECK(select_default_model(3).id == ModelId::MA);
  CHECK(select_default_model(3).ma_window == 3);
  CHECK(select_default_model(2).ma_window == 2);
  CHECK(select_default_model(14).id == ModelId::AR);
  CHECK(select_default_model(60).id == ModelId::ARIMA);
  CHECK(select_default_model(4).id == ModelId::MA);
  CHECK(select_default_model(5).id == ModelId::AR);
  CHECK(select_default_model(29).id == ModelId::AR);
  CHECK(select_default_model(30).id == ModelId::ARIMA);
}

TEST_CASE("compare_models examples") {
  const auto ranked = compare_models(linear(20), 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].model_id == ModelId::AR);
  CHECK(*ranked[0].mse < 1e-6);
  double ma_mse = 0, ar_mse = 0;
  for (const auto& r : ranked) {
    if (r.model_id == ModelId::MA) ma_mse = *r.mse;
    if (r.model_id == ModelId::AR) ar_mse = *r.mse;
  }
  CHECK(ar_mse < ma_mse);

  const auto flat = compare_models(make(std::vector<double>(12, 0.25)), 3);
  REQUIRE(flat.size() == 3);
  CHECK(flat[0].model_id == ModelId::MA);
  CHECK(flat[1].model_id == ModelId::AR);
  CHECK(flat[2].model_id == ModelId::ARIMA);
  for (const auto& r : flat) CHECK(*r.mse == 0.0);

  CHECK(code_of([] { compare_models(linear(5), 3); }) == ErrorCode::TooShort);
}

TEST_CASE("forecasts shift with the series") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> shift(-2, 2);
  for (int trial = 0; trial < 30; ++trial) {
    const Series s = ar1_noise(rng, 14, 0.5, 0.02);
    const double c = shift(rng);
    Series moved = s;
    for (auto& x : moved.values) x += c;

    const auto ma = moving_average_forecast(s, 3, 3).predictions;
    const auto ma2 = moving_average_forecast(moved, 3, 3).predictions;
    for (size_t i = 0; i < ma.size(); ++i) CHECK(std::abs(ma2[i] - (ma[i] + c)) <= 1e-12);

    const auto ar = forecast_ar(fit_ar(s, 2, true), s, 3).predictions;
    const auto ar2 = forecast_ar(fit_ar(moved, 2, true), moved, 3).predictions;
    for (size_t i = 0; i < ar.size(); ++i) CHECK(std::abs(ar2[i] - (ar[i] + c)) <= 1e-6);
  }
}

TEST_CASE("forecast results carry the requested horizon") {
  const Series s = linear(40);
  for (int h = 1; h <= 5; ++h) {
    for (auto id : {ModelId::MA, ModelId::AR, ModelId::ARIMA}) {
      ModelChoice c;
      c.id = id;
      const auto r = forecast_with(c, s, h);
      CHECK(r.horizon == h);
      CHECK(static_cast<int>(r.predictions.size()) == h);
    }
  }
}
