#include "supcbi/estimation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "supcbi/errors.hpp"
#include "supcbi/optim.hpp"

namespace supcbi {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool read_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return r.ec == std::errc();
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Lags used by the ACF fits: s >= 1 up to the last lag before the first non-positive value.
std::vector<AcfPoint> positive_prefix(std::span<const AcfPoint> acf) {
  std::vector<AcfPoint> pts(acf.begin(), acf.end());
  std::sort(pts.begin(), pts.end(), [](const AcfPoint& a, const AcfPoint& b) { return a.lag_h < b.lag_h; });
  std::vector<AcfPoint> out;
  for (const auto& p : pts) {
    if (p.lag_h < 1) continue;
    if (!(p.value > 0.0)) break;
    out.push_back(p);
  }
  return out;
}

constexpr double kBetaSpan = 199.0;  // beta in (1, 200]

}  // namespace

std::size_t DischargeSeries::gap_count() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), false));
}

void DischargeSeries::validate() const {
  if (!(interval_h > 0.0)) throw DataError("series: interval must be > 0");
  if (values.size() < 2) throw DataError("series: needs at least 2 rows");
  if (present.size() != values.size()) throw DataError("series: gap mask size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (present[i] && !(values[i] >= 0.0)) throw DataError("series: negative or invalid discharge", i + 2);
}

DischargeSeries series_from_values(std::vector<double> values, double interval_h) {
  DischargeSeries s;
  s.interval_h = interval_h;
  s.present.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s.present[i] = std::isfinite(values[i]);
  s.values = std::move(values);
  return s;
}

std::int64_t parse_iso8601(const std::string& raw) {
  std::string s = trim(raw);
  int y, mo, d, h, mi, sec = 0;
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
      !read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d) || !read_int(s, 11, 2, h) ||
      !read_int(s, 14, 2, mi))
    throw DataError("malformed timestamp '" + raw + "'");
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_int(s, pos + 1, 2, sec)) throw DataError("malformed timestamp '" + raw + "'");
    pos += 3;
  }
  int offset_min = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      ++pos;
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      int oh, om;
      if (!read_int(s, pos + 1, 2, oh) || !read_int(s, pos + 4, 2, om))
        throw DataError("malformed timestamp '" + raw + "'");
      offset_min = (s[pos] == '+' ? 1 : -1) * (oh * 60 + om);
      pos = s.size();
    } else {
      throw DataError("malformed timestamp '" + raw + "'");
    }
  }
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 24 || mi > 59 || sec > 60 || (h == 24 && (mi || sec)))
    throw DataError("timestamp out of range '" + raw + "'");
  std::int64_t days = sys_days(ymd).time_since_epoch().count();
  return days * 86400 + h * 3600 + mi * 60 + sec - offset_min * 60;
}

DischargeSeries read_discharge_csv(std::istream& in, double interval_h) {
  if (!(interval_h > 0.0)) throw InvalidArgument("interval must be > 0");
  const std::int64_t step_s = std::llround(interval_h * 3600.0);
  DischargeSeries out;
  out.interval_h = interval_h;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::int64_t last_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
    if (trim(line).empty()) continue;
    if (!header) {
      std::string h = trim(line);
      h.erase(std::remove(h.begin(), h.end(), ' '), h.end());
      if (h != "timestamp,discharge_m3s") throw DataError("expected header 'timestamp,discharge_m3s'", lineno);
      header = true;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw DataError("expected 2 fields", lineno);
    std::int64_t t;
    try {
      t = parse_iso8601(line.substr(0, comma));
    } catch (const DataError& e) {
      throw DataError(e.what(), lineno);
    }
    std::string v = trim(line.substr(comma + 1));
    double value = kNaN;
    bool have = !v.empty();
    if (have) {
      auto r = std::from_chars(v.data(), v.data() + v.size(), value);
      if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(value))
        throw DataError("malformed discharge '" + v + "'", lineno);
      if (value < 0.0) throw DataError("negative discharge", lineno);
    }
    if (last_index < 0) {
      out.start_epoch_s = t;
      last_index = -1;
    }
    std::int64_t off = t - out.start_epoch_s;
    if (off % step_s != 0) throw DataError("timestamp off the sampling grid", lineno);
    std::int64_t idx = off / step_s;
    if (idx <= last_index) throw DataError("timestamps must be strictly increasing", lineno);
    while (last_index + 1 < idx) {
      out.values.push_back(kNaN);
      out.present.push_back(false);
      ++last_index;
    }
    out.values.push_back(have ? value : kNaN);
    out.present.push_back(have);
    last_index = idx;
  }
  if (!header) throw DataError("empty input: missing header");
  if (out.values.size() < 2) throw DataError("series: needs at least 2 rows");
  return out;
}

DischargeSeries read_discharge_csv_file(const std::string& path, double interval_h) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_discharge_csv(in, interval_h);
}

StreamingStats empirical_accumulator(const DischargeSeries& series) {
  StreamingStats acc;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.present[i]) acc.push(series.values[i]);
  return acc;
}

SummaryStats empirical_stats(const DischargeSeries& series) {
  StreamingStats acc = empirical_accumulator(series);
  if (acc.count() < 4) throw InsufficientData("stats", "needs at least 4 non-gap values");
  if (acc.variance() == 0.0) throw InsufficientData("std", "degenerate (constant) series");
  return acc.summary();
}

std::vector<AcfPoint> empirical_acf(const DischargeSeries& series, int max_lag_h) {
  const double ih = series.interval_h;
  const int max_k = static_cast<int>(std::floor(max_lag_h / ih + 1e-9));
  if (max_lag_h < 1 || !(2.0 * max_k < static_cast<double>(series.size())))
    throw InvalidArgument("empirical_acf: need 1 <= max lag < length/2");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.present[i]) {
      sum += series.values[i];
      ++n;
    }
  if (n < 2) throw InsufficientData("acf", "needs at least 2 non-gap values");
  const double mu = sum / static_cast<double>(n);
  std::vector<double> dev(series.size(), 0.0);
  double den = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.present[i]) {
      dev[i] = series.values[i] - mu;
      den += dev[i] * dev[i];
    }
  if (!(den > 0.0)) throw InsufficientData("acf", "zero variance");

  std::vector<double> num(static_cast<std::size_t>(max_k) + 1, 0.0);
  std::vector<std::int64_t> pairs(num.size(), 0);
  std::size_t i = 0;
  while (i < series.size()) {
    if (!series.present[i]) {
      ++i;
      continue;
    }
    std::size_t a = i;
    while (i < series.size() && series.present[i]) ++i;
    std::size_t b = i;  // segment [a, b)
    for (int k = 1; k <= max_k; ++k) {
      if (a + static_cast<std::size_t>(k) >= b) break;
      double acc = 0.0;
      for (std::size_t t = a; t + k < b; ++t) acc += dev[t] * dev[t + k];
      num[k] += acc;
      pairs[k] += static_cast<std::int64_t>(b - a - k);
    }
  }
  std::vector<AcfPoint> out;
  out.push_back({0, 1.0});
  for (int k = 1; k <= max_k; ++k)
    if (pairs[k] > 0) out.push_back({static_cast<int>(std::lround(k * ih)), num[k] / den});
  return out;
}

AcfFit fit_acf(std::span<const AcfPoint> acf) {
  auto pts = positive_prefix(acf);
  if (pts.size() < 5) throw InsufficientData("acf", "fewer than 5 usable positive lags");
  auto sse = [&](double U, double beta) {
    double s = 0.0;
    for (const auto& p : pts) {
      double r = p.value - std::pow(1.0 + U * p.lag_h, 1.0 - beta);
      s += r * r;
    }
    return s;
  };
  auto decode = [](const std::vector<double>& t) {
    return std::pair<double, double>{std::exp(t[0]), 1.0 + kBetaSpan * sigmoid(t[1])};
  };
  Objective obj = [&](const std::vector<double>& t) {
    auto [U, beta] = decode(t);
    return sse(U, beta);
  };

  struct Start {
    double f;
    std::vector<double> t;
  };
  std::vector<Start> grid;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      double U = std::pow(10.0, -4.0 + 0.5 * i);
      double bm1 = std::pow(10.0, -2.0 + 0.4 * j);
      if (bm1 >= kBetaSpan) bm1 = 0.99 * kBetaSpan;
      std::vector<double> t = {std::log(U), logit(bm1 / kBetaSpan)};
      grid.push_back({obj(t), t});
    }
  std::stable_sort(grid.begin(), grid.end(), [](const Start& a, const Start& b) { return a.f < b.f; });

  NelderMeadOptions nm;
  nm.initial_step = 0.3;
  nm.ftol = 1e-14;
  nm.xtol = 1e-11;
  nm.max_evals = 20000;
  NelderMeadResult best;
  bool have = false;
  for (std::size_t k = 0; k < std::min<std::size_t>(5, grid.size()); ++k) {
    auto r = nelder_mead(obj, grid[k].t, nm);
    if (!have) {
      best = r;
      have = true;
      continue;
    }
    double tie = 1e-12 * std::max(best.fx, 1e-300) + 1e-300;
    bool better = r.fx < best.fx - tie;
    bool tied = std::abs(r.fx - best.fx) <= tie && decode(r.x).second < decode(best.x).second;
    if (better || tied) best = r;
  }
  auto [U, beta] = decode(best.x);
  if (!best.converged) throw OptimizerError("fit_acf: Nelder-Mead did not converge", {U, beta}, best.fx);
  return {U, beta, best.fx, pts.back().lag_h, static_cast<int>(pts.size())};
}

ExpAcfFit fit_exponential_acf(std::span<const AcfPoint> acf) {
  auto pts = positive_prefix(acf);
  if (pts.size() < 5) throw InsufficientData("acf", "fewer than 5 usable positive lags");
  Objective obj = [&](const std::vector<double>& t) {
    double g = std::exp(t[0]), s = 0.0;
    for (const auto& p : pts) {
      double r = p.value - std::exp(-g * p.lag_h);
      s += r * r;
    }
    return s;
  };
  // start from the first-lag decay
  double g0 = -std::log(std::min(pts.front().value, 0.999)) / pts.front().lag_h;
  NelderMeadOptions nm;
  nm.initial_step = 0.5;
  auto r = nelder_mead(obj, {std::log(g0)}, nm);
  if (!r.converged) throw OptimizerError("fit_exponential_acf: did not converge", {std::exp(r.x[0])}, r.fx);
  return {std::exp(r.x[0]), r.fx, pts.back().lag_h};
}

RelativeErrors relative_error_metric(const SummaryStats& model, const SummaryStats& data, bool include_kurt) {
  static const char* names[4] = {"ave", "std", "skew", "kurt"};
  const double mv[4] = {model.ave, model.std, model.skew, model.kurt};
  const double dv[4] = {data.ave, data.std, data.skew, data.kurt};
  RelativeErrors out;
  out.include_kurt = include_kurt;
  int terms = include_kurt ? 4 : 3;
  for (int i = 0; i < 4; ++i) {
    if (i >= terms) {
      out.re[i] = dv[i] != 0.0 ? std::abs((mv[i] - dv[i]) / dv[i]) : kNaN;
      continue;
    }
    if (dv[i] == 0.0 || !std::isfinite(dv[i]))
      throw InvalidArgument(std::string("relative_error_metric: data ") + names[i] + " is zero or not finite");
    double r = (mv[i] - dv[i]) / dv[i];
    out.re[i] = std::abs(r);
    out.er2 += r * r;
  }
  return out;
}

double default_xmin(const DischargeSeries& series) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.present[i]) m = std::min(m, series.values[i]);
  if (!std::isfinite(m)) throw InsufficientData("xmin", "no present values");
  return std::floor(m * 100.0 + 1e-9) / 100.0;
}

MomentFit fit_moments(const SummaryStats& data, double D, const AcfFit& acf, double xmin,
                      const MomentFitOptions& opt) {
  if (!(D > 0.0 && D <= 1.0)) throw InvalidArgument("D: must lie in (0, 1]");
  if (!(acf.U > 0.0) || !(acf.beta > 1.0)) throw InvalidArgument("acf fit: need U > 0 and beta > 1");
  if (!(xmin >= 0.0)) throw InvalidArgument("xmin: must be >= 0");
  if (!(data.ave > xmin)) throw InvalidArgument("data: average must exceed xmin");
  if (!(data.std > 0.0)) throw InvalidArgument("data: std must be > 0");
  relative_error_metric(data, data, true);  // rejects zero denominators up front

  const GammaMixing mix(acf.U / D, acf.beta);
  const double R = inverse_mean(mix);
  constexpr double alo = -2.0, aspan = 2.99;
  auto decode = [&](const std::vector<double>& t) {
    double alpha = alo + aspan * sigmoid(t[2]);
    return std::array<double, 3>{std::exp(t[0]), std::exp(t[1]), alpha};
  };
  auto model_stats = [&](double A, double b, double alpha) {
    TemperedStableMeasure m(b, alpha);
    double B = (1.0 - D) / levy_moment(m, 1);
    return stats_from_cumulants(stationary_cumulants(A, B, m, R, xmin));
  };
  int evals = 0;
  Objective obj = [&](const std::vector<double>& t) {
    ++evals;
    try {
      auto [A, b, alpha] = decode(t);
      if (!(alpha < 1.0)) return std::numeric_limits<double>::infinity();
      SummaryStats s = model_stats(A, b, alpha);
      double e = 0.0;
      const double mv[4] = {s.ave, s.std, s.skew, s.kurt};
      const double dv[4] = {data.ave, data.std, data.skew, data.kurt};
      for (int i = 0; i < 4; ++i) {
        double r = (mv[i] - dv[i]) / dv[i];
        e += r * r;
      }
      return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  struct Start {
    double f;
    std::vector<double> t;
  };
  std::vector<Start> grid;
  const int G = std::max(opt.grid, 2);
  const double y = data.ave - xmin, var = data.std * data.std;
  for (int ia = 0; ia < G; ++ia) {
    double alpha = -1.5 + 2.4 * ia / (G - 1);
    double b0 = (1.0 - alpha) * y / (2.0 * D * var);
    for (int ib = 0; ib < G; ++ib) {
      double b = b0 * std::pow(10.0, -1.5 + 3.0 * ib / (G - 1));
      double m1;
      try {
        m1 = levy_moment(TemperedStableMeasure(b, alpha), 1);
      } catch (const Error&) {
        continue;
      }
      double A0 = y * D / (m1 * R);
      for (int iA = 0; iA < G; ++iA) {
        double A = A0 * std::pow(10.0, -0.5 + 1.0 * iA / (G - 1));
        std::vector<double> t = {std::log(A), std::log(b), logit((alpha - alo) / aspan)};
        double f = obj(t);
        if (std::isfinite(f)) grid.push_back({f, t});
      }
    }
  }
  if (grid.empty()) throw OptimizerError("fit_moments: no feasible start", {}, std::numeric_limits<double>::infinity());
  std::stable_sort(grid.begin(), grid.end(), [](const Start& a, const Start& b) { return a.f < b.f; });

  NelderMeadOptions nm;
  nm.initial_step = 0.2;
  nm.ftol = 1e-14;
  nm.fatol = 1e-24;
  nm.xtol = 1e-10;
  nm.max_evals = 8000;
  NelderMeadResult best;
  bool have = false;
  for (std::size_t k = 0; k < std::min<std::size_t>(static_cast<std::size_t>(opt.starts), grid.size()); ++k) {
    auto r = nelder_mead(obj, grid[k].t, nm);
    if (!have || r.fx < best.fx) {
      best = r;
      have = true;
    }
  }

  auto [A, b, alpha] = decode(best.x);
  TemperedStableMeasure m(b, alpha);
  MomentFit out{SupCbiParams{A, (1.0 - D) / levy_moment(m, 1), m, mix, xmin}, {}, {}, best.converged, evals, {}};
  out.fitted = model_stats(A, b, alpha);
  out.errors = relative_error_metric(out.fitted, data, true);
  if (alpha > 0.98) out.warnings.push_back("alpha at the upper boundary (clamped below 0.99)");
  if (alpha < -1.98) out.warnings.push_back("alpha at the lower boundary (-2)");
  if (!best.converged) out.warnings.push_back("Nelder-Mead stopped before meeting its tolerances");
  return out;
}

}  // namespace supcbi
