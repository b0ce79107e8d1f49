#include "supcbi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "supcbi/errors.hpp"
#include "supcbi/levy.hpp"

namespace supcbi {

namespace {

// (1 - exp(-x)) / x
double avg_factor(double x) { return x > 0.0 ? -std::expm1(-x) / x : 1.0; }

void check_model(double A, double B, const TemperedStableMeasure& m) {
  if (!(A >= 0.0) || !std::isfinite(A)) throw InvalidArgument("A: must be finite and >= 0");
  if (!(B >= 0.0) || !std::isfinite(B)) throw InvalidArgument("B: must be finite and >= 0");
  if (!(1.0 - B * levy_moment(m, 1) > 0.0)) throw InvalidArgument("stationarity violated: D <= 0");
}

std::int64_t hourly_stride(double dt) { return static_cast<std::int64_t>(std::ceil(1.0 / dt - 1e-9)); }

}  // namespace

void PathConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt: must be > 0");
  if (n_steps < 1) throw InvalidArgument("n_steps: must be >= 1");
  if (burn_in_steps < 0) throw InvalidArgument("burn_in_steps: must be >= 0");
  if (y0 && !(*y0 >= 0.0)) throw InvalidArgument("y0: must be >= 0");
  for (int l : acf_lags_h)
    if (l < 0) throw InvalidArgument("acf lags: must be >= 0");
}

std::int64_t steps_for_hours(double hours, double dt) {
  return static_cast<std::int64_t>(std::llround(hours / dt));
}

// ---------------------------------------------------------------------------

StreamingStats::StreamingStats(std::vector<int> lags_h, std::int64_t hourly_stride)
    : lags_(std::move(lags_h)), stride_(std::max<std::int64_t>(hourly_stride, 1)) {
  std::sort(lags_.begin(), lags_.end());
  lags_.erase(std::unique(lags_.begin(), lags_.end()), lags_.end());
  for (int l : lags_)
    if (l < 0) throw InvalidArgument("acf lags: must be >= 0");
  max_lag_ = lags_.empty() ? 0 : lags_.back();
  ring_.assign(static_cast<std::size_t>(max_lag_ + 1), 0.0);
  sxy_.resize(lags_.size());
  shead_.resize(lags_.size());
  stail_.resize(lags_.size());
  npairs_.assign(lags_.size(), 0);
}

void StreamingStats::push(double x) {
  if (!shifted_) {
    shift_ = x;
    shifted_ = true;
  }
  ++n_;
  double d = x - shift_;
  double d2 = d * d;
  s_[0].add(d);
  s_[1].add(d2);
  s_[2].add(d2 * d);
  s_[3].add(d2 * d2);
  if (!lags_.empty() && ++phase_ == stride_) {
    phase_ = 0;
    push_hourly(x);
  }
}

void StreamingStats::push_hourly(double x) {
  const std::int64_t cap = max_lag_ + 1;
  for (std::size_t k = 0; k < lags_.size(); ++k) {
    int l = lags_[k];
    if (l == 0 || l > seg_n_) continue;
    double prev = ring_[static_cast<std::size_t>((seg_n_ - l) % cap)];
    sxy_[k].add(prev * x);
    shead_[k].add(prev);
    stail_[k].add(x);
    ++npairs_[k];
  }
  ring_[static_cast<std::size_t>(seg_n_ % cap)] = x;
  ++seg_n_;
  ++hn_;
  h1_.add(x);
  h2_.add(x * x);
}

void StreamingStats::break_segment() {
  seg_n_ = 0;
  phase_ = 0;
}

void StreamingStats::merge(const StreamingStats& o) {
  if (o.lags_ != lags_ || o.stride_ != stride_)
    throw InvalidArgument("StreamingStats::merge: incompatible accumulators");
  if (o.n_ > 0 && n_ == 0) {
    shift_ = o.shift_;
    shifted_ = true;
    for (int i = 0; i < 4; ++i) s_[i] = o.s_[i];
  } else if (o.n_ > 0) {
    // rebase the other sums onto this shift: x - K = (x - K') + d
    const double d = o.shift_ - shift_, n = static_cast<double>(o.n_);
    const double t1 = o.s_[0].value(), t2 = o.s_[1].value(), t3 = o.s_[2].value();
    s_[0].merge(o.s_[0]);
    s_[0].add(n * d);
    s_[1].merge(o.s_[1]);
    s_[1].add(2 * d * t1 + n * d * d);
    s_[2].merge(o.s_[2]);
    s_[2].add(3 * d * t2 + 3 * d * d * t1 + n * d * d * d);
    s_[3].merge(o.s_[3]);
    s_[3].add(4 * d * t3 + 6 * d * d * t2 + 4 * d * d * d * t1 + n * d * d * d * d);
  }
  n_ += o.n_;
  hn_ += o.hn_;
  h1_.merge(o.h1_);
  h2_.merge(o.h2_);
  for (std::size_t k = 0; k < lags_.size(); ++k) {
    sxy_[k].merge(o.sxy_[k]);
    shead_[k].merge(o.shead_[k]);
    stail_[k].merge(o.stail_[k]);
    npairs_[k] += o.npairs_[k];
  }
}

std::array<double, 4> StreamingStats::central() const {
  // mean offset from shift, then central moments 2..4 from shifted raw moments
  double n = static_cast<double>(n_);
  double r1 = s_[0].value() / n, r2 = s_[1].value() / n, r3 = s_[2].value() / n, r4 = s_[3].value() / n;
  double c2 = r2 - r1 * r1;
  double c3 = r3 - 3 * r1 * r2 + 2 * r1 * r1 * r1;
  double c4 = r4 - 4 * r1 * r3 + 6 * r1 * r1 * r2 - 3 * r1 * r1 * r1 * r1;
  // differences this small are rounding noise of a constant sample
  if (c2 <= 1e-14 * r2) c2 = 0.0;
  return {r1 + shift_, c2, c3, c4};
}

double StreamingStats::mean() const {
  if (n_ < 1) throw InsufficientData("ave", "no samples");
  return central()[0];
}

double StreamingStats::variance() const {
  if (n_ < 2) throw InsufficientData("std", "needs at least 2 samples");
  return central()[1];
}

double StreamingStats::std() const { return std::sqrt(variance()); }

double StreamingStats::skewness() const {
  if (n_ < 3) throw InsufficientData("skew", "needs at least 3 samples");
  auto c = central();
  if (c[1] == 0.0) throw InsufficientData("skew", "zero variance");
  return c[2] / std::pow(c[1], 1.5);
}

double StreamingStats::excess_kurtosis() const {
  if (n_ < 4) throw InsufficientData("kurt", "needs at least 4 samples");
  auto c = central();
  if (c[1] == 0.0) throw InsufficientData("kurt", "zero variance");
  return c[3] / (c[1] * c[1]) - 3.0;
}

SummaryStats StreamingStats::summary() const {
  return {mean(), std(), skewness(), excess_kurtosis()};
}

std::vector<AcfPoint> StreamingStats::acf() const {
  std::vector<AcfPoint> out;
  if (hn_ < 2) return out;
  double n = static_cast<double>(hn_);
  double mu = h1_.value() / n;
  double den = h2_.value() - n * mu * mu;
  if (!(den > 0.0)) return out;
  for (std::size_t k = 0; k < lags_.size(); ++k) {
    if (lags_[k] == 0) {
      out.push_back({0, 1.0});
      continue;
    }
    if (npairs_[k] == 0) continue;
    double num = sxy_[k].value() - mu * (shead_[k].value() + stail_[k].value()) +
                 static_cast<double>(npairs_[k]) * mu * mu;
    out.push_back({lags_[k], num / den});
  }
  return out;
}

FinalizedStats finalize_stats(const StreamingStats& acc) { return {acc.summary(), acc.acf()}; }

StreamingStats make_accumulator(const PathConfig& cfg) {
  return StreamingStats(cfg.acf_lags_h, hourly_stride(cfg.dt));
}

// ---------------------------------------------------------------------------

StreamingStats simulate_supcbi(const SupCbiParams& p, const PathConfig& cfg, const SampleSink& sink) {
  cfg.validate();
  check_model(p.A, p.B, p.measure);
  const double m1 = levy_moment(p.measure, 1);
  const double D = p.D();
  const double R = p.R();
  const double ymean = p.A * m1 * R / D;
  const double dt = cfg.dt, A = p.A, B = p.B, xmin = p.xmin;
  const double shape = p.mixing.beta - 1.0, eta = p.mixing.eta;

  IncrementSampler sampler(p.measure);
  RandomStream rng(cfg.seed, cfg.stream);
  StreamingStats acc = make_accumulator(cfg);

  double y = cfg.y0.value_or(ymean);
  const std::int64_t total = cfg.burn_in_steps + cfg.n_steps;
  for (std::int64_t i = 0; i < total; ++i) {
    double rho = rng.gamma(shape, eta);
    double x = rho * dt;
    double lam = A + rho * B * y;
    double dl = lam > 0.0 ? sampler(lam, dt, rng) : 0.0;
    y = std::exp(-x) * y + avg_factor(x) * dl;
    if (!std::isfinite(y)) throw NumericError("simulate_supcbi: non-finite state", i);
    if (i >= cfg.burn_in_steps) {
      double v = xmin + y;
      acc.push(v);
      if (sink) {
        std::int64_t step = i - cfg.burn_in_steps + 1;
        sink(step, static_cast<double>(step) * dt, v);
      }
    }
  }
  return acc;
}

StreamingStats simulate_embedding(double A, double B, const TemperedStableMeasure& m, const DiscretePartition& part,
                                  double xmin, const PathConfig& cfg, const SampleSink& sink) {
  cfg.validate();
  check_model(A, B, m);
  validate_partition(part);
  const double m1 = levy_moment(m, 1);
  const double D = 1.0 - B * m1;
  const std::size_t n = part.size();
  const double dt = cfg.dt;

  std::vector<double> y(n), decay(n), avg(n), base(n), excite(n);
  double ymean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double rho = part.speeds[i];
    y[i] = part.weights[i] * A * m1 / (rho * D);
    ymean += y[i];
    decay[i] = std::exp(-rho * dt);
    avg[i] = avg_factor(rho * dt);
    base[i] = part.weights[i] * A;
    excite[i] = rho * B;
  }
  if (cfg.y0) {
    double scale = ymean > 0.0 ? *cfg.y0 / ymean : 0.0;
    for (std::size_t i = 0; i < n; ++i) y[i] = ymean > 0.0 ? y[i] * scale : *cfg.y0 / static_cast<double>(n);
  }

  IncrementSampler sampler(m);
  RandomStream rng(cfg.seed, cfg.stream);
  StreamingStats acc = make_accumulator(cfg);

  const std::int64_t total = cfg.burn_in_steps + cfg.n_steps;
  for (std::int64_t k = 0; k < total; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double lam = base[i] + excite[i] * y[i];
      double dl = lam > 0.0 ? sampler(lam, dt, rng) : 0.0;
      y[i] = decay[i] * y[i] + avg[i] * dl;
      sum += y[i];
    }
    if (!std::isfinite(sum)) throw NumericError("simulate_embedding: non-finite state", k);
    if (k >= cfg.burn_in_steps) {
      double v = xmin + sum;
      acc.push(v);
      if (sink) {
        std::int64_t step = k - cfg.burn_in_steps + 1;
        sink(step, static_cast<double>(step) * dt, v);
      }
    }
  }
  return acc;
}

CoupledPair simulate_supcbi_coupled(const SupCbiParams& p, const PathConfig& cfg) {
  cfg.validate();
  check_model(p.A, p.B, p.measure);
  if (!(p.measure.alpha > 0.0)) throw InvalidArgument("simulate_supcbi_coupled: alpha must lie in (0,1)");
  const double m1 = levy_moment(p.measure, 1);
  const double ymean = p.A * m1 * p.R() / p.D();
  const double dt = cfg.dt, h = 0.5 * cfg.dt, A = p.A, B = p.B, b = p.measure.b;
  const double shape = p.mixing.beta - 1.0, eta = p.mixing.eta;

  IncrementSampler sampler(p.measure);
  RandomStream rng(cfg.seed, cfg.stream);
  PathConfig fine_cfg = cfg;
  fine_cfg.dt = h;
  CoupledPair out{make_accumulator(cfg), make_accumulator(fine_cfg)};

  // A proposal scale * s is kept when u < exp(-b * proposal); otherwise, or when the
  // clock is too large for efficient tilting, an independent exact draw replaces it.
  auto tilted = [&](double clock, double s, double u) {
    if (clock <= 0.0) return 0.0;
    if (sampler.acceptance(clock) < 0.1) return sampler(clock, 1.0, rng);
    double prop = sampler.stable_scale(clock) * s;
    if (u < std::exp(-b * prop)) return prop;
    return sampler(clock, 1.0, rng);
  };

  double yc = cfg.y0.value_or(ymean);
  double yf = yc;
  const std::int64_t total = cfg.burn_in_steps + cfg.n_steps;
  for (std::int64_t i = 0; i < total; ++i) {
    double rho_a = rng.gamma(shape, eta);
    double rho_b = rng.gamma(shape, eta);
    double sa = sampler.unit_stable(rng), sb = sampler.unit_stable(rng);
    double ua = rng.uniform_open(), ub = rng.uniform_open();

    // coarse: one step with rho_a; its stable variate is the sum of the two fine ones
    double lc = A + rho_a * B * yc;
    double dlc = 0.0;
    if (lc > 0.0) {
      double half = lc * h;
      if (sampler.acceptance(lc * dt) < 0.1) {
        dlc = sampler(lc, dt, rng);
      } else {
        double prop = sampler.stable_scale(half) * (sa + sb);
        dlc = ua < std::exp(-b * prop) ? prop : sampler(lc, dt, rng);
      }
    }
    yc = std::exp(-rho_a * dt) * yc + avg_factor(rho_a * dt) * dlc;

    double l1 = A + rho_a * B * yf;
    double d1 = tilted(l1 * h, sa, ua);
    yf = std::exp(-rho_a * h) * yf + avg_factor(rho_a * h) * d1;
    double l2 = A + rho_b * B * yf;
    double d2 = tilted(l2 * h, sb, ub);
    double yf_mid = yf;
    yf = std::exp(-rho_b * h) * yf + avg_factor(rho_b * h) * d2;

    if (!std::isfinite(yc) || !std::isfinite(yf)) throw NumericError("simulate_supcbi_coupled: non-finite state", i);
    if (i >= cfg.burn_in_steps) {
      out.coarse.push(p.xmin + yc);
      out.fine.push(p.xmin + yf_mid);
      out.fine.push(p.xmin + yf);
    }
  }
  return out;
}

ReplicateRun simulate_replicates(const SupCbiParams& p, const PathConfig& cfg, int replicates, int workers,
                                 const SampleSink& replicate0_sink) {
  if (replicates < 1) throw InvalidArgument("replicates: must be >= 1");
  std::function<StreamingStats(int)> job = [&](int r) {
    PathConfig c = cfg;
    c.stream = static_cast<std::uint64_t>(r);
    return simulate_supcbi(p, c, r == 0 ? replicate0_sink : SampleSink{});
  };
  ReplicateRun run;
  run.replicates = run_replicates<StreamingStats>(replicates, workers, job);
  run.pooled = run.replicates.front();
  for (std::size_t r = 1; r < run.replicates.size(); ++r) run.pooled.merge(run.replicates[r]);
  return run;
}

}  // namespace supcbi
