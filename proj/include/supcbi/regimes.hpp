#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supcbi/estimation.hpp"
#include "supcbi/moments.hpp"
#include "supcbi/simulator.hpp"

namespace supcbi {

struct WaitingTimes {
  std::vector<double> high;  // hours
  std::vector<double> low;
  double threshold = 0;
  double dt = 0;
};

// Streaming classifier: high iff x > threshold, low iff x < threshold, ties keep the
// current regime. Run lengths are counted in steps; the first and the unfinished last
// run are kept aside as boundary runs.
class RegimeTracker {
 public:
  explicit RegimeTracker(double threshold);

  void push(double x);

  const std::vector<std::int64_t>& high_runs() const { return high_; }
  const std::vector<std::int64_t>& low_runs() const { return low_; }
  std::int64_t leading_run() const { return leading_; }
  std::int64_t trailing_run() const { return run_; }
  std::int64_t total_steps() const { return total_; }
  double threshold() const { return threshold_; }

  WaitingTimes waiting_times(double dt) const;

 private:
  double threshold_;
  bool started_ = false;
  bool high_now_ = false;
  bool first_closed_ = false;
  std::int64_t run_ = 0;
  std::int64_t leading_ = 0;
  std::int64_t total_ = 0;
  std::vector<std::int64_t> high_, low_;
};

WaitingTimes extract_waiting_times(std::span<const double> samples, double dt, double threshold);

struct MixExpModel {
  double w1 = 1;
  double w2 = 0;
  double lambda1 = 1;  // lambda1 >= lambda2
  double lambda2 = 1;

  void validate() const;
};

SummaryStats mixexp_stats(const MixExpModel& m);
double mixexp_density(const MixExpModel& m, double z);

struct MixExpFit {
  MixExpModel model;
  SummaryStats stats;
  double er2 = 0;  // mean, std, skew terms
  bool converged = false;
  bool collapsed = false;      // identifiability guard merged the two phases
  bool near_singular = false;  // some rate above 1e3 per hour
};

MixExpFit fit_mixexp(const SummaryStats& target);

struct RegimeReport {
  std::string regime;  // "high" or "low"
  std::size_t sojourns = 0;
  std::optional<SummaryStats> waiting;  // population statistics of the sojourn durations
  std::optional<MixExpFit> fit;
  std::vector<std::string> warnings;
};

struct ThresholdReport {
  double threshold = 0;
  RegimeReport high;
  RegimeReport low;
};

// Simulates `replicates` independent paths (stream r for replicate r) and reduces each
// threshold's sojourns to a two-phase mixture per regime.
std::vector<ThresholdReport> reduce_model(const SupCbiParams& p, const PathConfig& cfg,
                                          const std::vector<double>& thresholds, int replicates = 1,
                                          int workers = 1);

// The reduction step alone, for waiting times gathered elsewhere.
ThresholdReport reduce_waiting_times(const WaitingTimes& wt);

}  // namespace supcbi
