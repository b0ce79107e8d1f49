#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "supcbi/moments.hpp"
#include "supcbi/simulator.hpp"

namespace supcbi {

struct DischargeSeries {
  std::int64_t start_epoch_s = 0;  // UTC
  double interval_h = 1.0;
  std::vector<double> values;  // m^3/s, NaN where missing
  std::vector<bool> present;

  std::size_t size() const { return values.size(); }
  std::size_t gap_count() const;
  void validate() const;
};

DischargeSeries series_from_values(std::vector<double> values, double interval_h = 1.0);

// ISO-8601 date-time ("YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM]", a space may replace T) to UTC epoch seconds.
std::int64_t parse_iso8601(const std::string& s);

// Header "timestamp,discharge_m3s". Blank discharge is a gap, missing rows on the
// interval grid are gaps as well. Errors carry the 1-based line number.
DischargeSeries read_discharge_csv(std::istream& in, double interval_h = 1.0);
DischargeSeries read_discharge_csv_file(const std::string& path, double interval_h = 1.0);

SummaryStats empirical_stats(const DischargeSeries& series);
// Accumulator fed with the present values in order (shared with the simulator's statistics).
StreamingStats empirical_accumulator(const DischargeSeries& series);

// Lags 0..max_lag_h; pairs only inside gap-free segments.
std::vector<AcfPoint> empirical_acf(const DischargeSeries& series, int max_lag_h);

struct AcfFit {
  double U = 0;
  double beta = 0;
  double sse = 0;
  int lag_cutoff = 0;  // largest lag used
  int n_lags = 0;
};

// Power-law fit (1 + U s)^(1 - beta) over the positive prefix of the ACF, beta in (1, 200].
AcfFit fit_acf(std::span<const AcfPoint> acf);

struct ExpAcfFit {
  double rate = 0;
  double sse = 0;
  int lag_cutoff = 0;
};

// exp(-rate s) over the same lags as fit_acf.
ExpAcfFit fit_exponential_acf(std::span<const AcfPoint> acf);

struct RelativeErrors {
  std::array<double, 4> re{};  // |model - data| / |data| for ave, std, skew, kurt
  double er2 = 0;
  bool include_kurt = true;
};

RelativeErrors relative_error_metric(const SummaryStats& model, const SummaryStats& data, bool include_kurt = true);

struct MomentFit {
  SupCbiParams params;
  SummaryStats fitted;
  RelativeErrors errors;
  bool converged = false;
  int evaluations = 0;
  std::vector<std::string> warnings;
};

struct MomentFitOptions {
  int grid = 8;     // points per (b, alpha, A) axis
  int starts = 8;   // local searches from the best grid points
};

MomentFit fit_moments(const SummaryStats& data, double D, const AcfFit& acf, double xmin,
                      const MomentFitOptions& opt = {});

// Default minimum discharge: smallest present value floored to two decimals.
double default_xmin(const DischargeSeries& series);

}  // namespace supcbi
