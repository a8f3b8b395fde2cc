#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "supervisim/core.hpp"

namespace supervisim {

struct IncidentSeries {
  std::vector<std::string> months;  // labels, strictly increasing
  std::vector<double> counts;

  std::size_t size() const noexcept { return counts.size(); }
};

inline void validate_series(const IncidentSeries& s) {
  if (s.months.size() != s.counts.size()) throw ValidationError("series", "label/count length mismatch");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s.counts[i] >= 0.0)) throw ValidationError("series", "count at " + s.months[i] + " is negative");
    if (i > 0 && !(s.months[i - 1] < s.months[i]))
      throw ValidationError("series", "months not strictly increasing at " + s.months[i]);
  }
}

/// Holt linear-trend exponential smoothing.
struct HoltModel {
  double alpha = 0.5;
  double beta = 0.5;
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> one_step_errors;  // y_t - (l_{t-1} + b_{t-1}), t >= 2
  std::vector<std::string> months;

  double forecast(int h) const { return level + h * trend; }
};

inline HoltModel fit_holt(const IncidentSeries& series, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha", "must lie in (0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta", "must lie in [0, 1]");
  validate_series(series);
  if (series.size() < 2) throw ValidationError("series", "need at least two observations");

  HoltModel m;
  m.alpha = alpha;
  m.beta = beta;
  m.months = series.months;
  const auto& y = series.counts;
  m.level = y[0];
  m.trend = y[1] - y[0];
  for (std::size_t t = 1; t < y.size(); ++t) {
    // Error-correction form of l = a*y + (1-a)(l+b), b = c*(l-l') + (1-c)*b;
    // a constant series then stays exactly constant.
    const double predicted = m.level + m.trend;
    const double error = y[t] - predicted;
    m.one_step_errors.push_back(error);
    const double prev_level = m.level;
    m.level = predicted + alpha * error;
    m.trend += beta * (m.level - prev_level - m.trend);
  }
  return m;
}

struct ScenarioMultipliers {
  double worst = 2.0;
  double average = 1.0;
  double best = -0.5;
};

struct ScenarioForecast {
  std::vector<std::string> months;
  std::vector<double> worst, average, best;
};

namespace detail {

/// "YYYY-MM" labels advance by calendar month; anything else gets "+h".
inline std::string month_label_after(const std::string& last, int h) {
  int y = 0, m = 0;
  char tail = 0;
  if (last.size() == 7 && std::sscanf(last.c_str(), "%4d-%2d%c", &y, &m, &tail) == 2 && m >= 1 && m <= 12) {
    const int idx = y * 12 + (m - 1) + h;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", idx / 12, idx % 12 + 1);
    return buf;
  }
  return last + "+" + std::to_string(h);
}

}  // namespace detail

/// Forecast h = 1..horizon as level + h * multiplier * trend, floored at 0.
inline ScenarioForecast project_scenarios(const HoltModel& model, int horizon,
                                          const ScenarioMultipliers& mult = {}) {
  if (horizon < 1) throw ValidationError("horizon", "must be >= 1");
  ScenarioForecast f;
  const std::string last = model.months.empty() ? std::string("t") : model.months.back();
  for (int h = 1; h <= horizon; ++h) {
    f.months.push_back(detail::month_label_after(last, h));
    f.worst.push_back(std::max(0.0, model.level + h * mult.worst * model.trend));
    f.average.push_back(std::max(0.0, model.level + h * mult.average * model.trend));
    f.best.push_back(std::max(0.0, model.level + h * mult.best * model.trend));
  }
  return f;
}

}  // namespace supervisim
