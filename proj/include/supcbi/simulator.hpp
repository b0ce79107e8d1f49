#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "supcbi/mixing.hpp"
#include "supcbi/moments.hpp"

namespace supcbi {

inline constexpr double kHoursPerYear = 8760.0;

struct PathConfig {
  double dt = 0.01;  // hours
  std::int64_t n_steps = 1;
  std::int64_t burn_in_steps = 0;
  std::uint64_t seed = 0;
  std::optional<double> y0;  // initial fluctuation X - xmin; default is its stationary mean
  std::uint64_t stream = 0;  // replicate index, selects an independent random stream
  std::vector<int> acf_lags_h;

  void validate() const;
};

std::int64_t steps_for_hours(double hours, double dt);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void merge(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct AcfPoint {
  int lag_h;
  double value;
};

// One-pass moments and lag correlations on an hourly sub-grid. Power sums are kept
// for x - K with K the first sample seen, which keeps the central moments accurate
// when the mean is large against the spread.
class StreamingStats {
 public:
  StreamingStats() = default;
  // Every hourly_stride-th pushed sample enters the correlation accumulators.
  StreamingStats(std::vector<int> lags_h, std::int64_t hourly_stride);

  void push(double x);
  // Starts a new contiguous segment: no lag pairs straddle the break.
  void break_segment();
  // Adds the sums of another accumulator with the same lags and stride.
  void merge(const StreamingStats& o);

  std::int64_t count() const { return n_; }
  double mean() const;
  double variance() const;
  double std() const;
  double skewness() const;
  double excess_kurtosis() const;
  SummaryStats summary() const;

  const std::vector<int>& lags() const { return lags_; }
  std::int64_t hourly_count() const { return hn_; }
  std::vector<AcfPoint> acf() const;

 private:
  void push_hourly(double x);
  std::array<double, 4> central() const;

  std::int64_t n_ = 0;
  double shift_ = 0.0;
  CompensatedSum s_[4];
  bool shifted_ = false;

  std::vector<int> lags_;
  int max_lag_ = 0;
  std::int64_t stride_ = 1;
  std::int64_t phase_ = 0;
  std::vector<double> ring_;
  std::int64_t seg_n_ = 0;
  std::int64_t hn_ = 0;
  CompensatedSum h1_, h2_;
  std::vector<CompensatedSum> sxy_, shead_, stail_;
  std::vector<std::int64_t> npairs_;
};

struct FinalizedStats {
  SummaryStats stats;
  std::vector<AcfPoint> acf;
};

FinalizedStats finalize_stats(const StreamingStats& acc);

// step is 1-based after burn-in, time_h = step * dt.
using SampleSink = std::function<void(std::int64_t step, double time_h, double x)>;

StreamingStats make_accumulator(const PathConfig& cfg);

StreamingStats simulate_supcbi(const SupCbiParams& p, const PathConfig& cfg, const SampleSink& sink = {});

StreamingStats simulate_embedding(double A, double B, const TemperedStableMeasure& m, const DiscretePartition& part,
                                  double xmin, const PathConfig& cfg, const SampleSink& sink = {});

// Coarse path at cfg.dt and fine path at cfg.dt/2 driven by shared stable noise and
// shared speeds. Each path has exactly the law of simulate_supcbi at its step size.
// Requires alpha in (0,1).
struct CoupledPair {
  StreamingStats coarse;
  StreamingStats fine;
};
CoupledPair simulate_supcbi_coupled(const SupCbiParams& p, const PathConfig& cfg);

// Runs job(0..replicates-1) on up to `workers` threads; results are kept in replicate order.
template <class T>
std::vector<T> run_replicates(int replicates, int workers, const std::function<T(int)>& job);

struct ReplicateRun {
  StreamingStats pooled;
  std::vector<StreamingStats> replicates;
};

// Replicate r uses stream r and cfg.n_steps steps; pooled statistics merge in replicate order.
ReplicateRun simulate_replicates(const SupCbiParams& p, const PathConfig& cfg, int replicates, int workers,
                                 const SampleSink& replicate0_sink = {});

}  // namespace supcbi

#include "supcbi/detail/replicates.hpp"
