#include "supcbi/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "supcbi/errors.hpp"
#include "supcbi/optim.hpp"

namespace supcbi {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

constexpr double kInf = std::numeric_limits<double>::infinity();

double er2_three(const SummaryStats& m, const SummaryStats& d) {
  double a = (m.ave - d.ave) / d.ave, b = (m.std - d.std) / d.std, c = (m.skew - d.skew) / d.skew;
  return a * a + b * b + c * c;
}

MixExpModel ordered(double w1, double l1, double l2) {
  if (l1 < l2) {
    std::swap(l1, l2);
    w1 = 1.0 - w1;
  }
  return {w1, 1.0 - w1, l1, l2};
}

std::optional<SummaryStats> population_stats(const std::vector<double>& v) {
  if (v.size() < 4) return std::nullopt;
  StreamingStats acc;
  for (double x : v) acc.push(x);
  if (acc.variance() == 0.0) return std::nullopt;
  return acc.summary();
}

}  // namespace

RegimeTracker::RegimeTracker(double threshold) : threshold_(threshold) {
  if (!std::isfinite(threshold)) throw InvalidArgument("threshold: must be finite");
}

void RegimeTracker::push(double x) {
  ++total_;
  if (!started_) {
    started_ = true;
    high_now_ = x > threshold_;
    run_ = 1;
    return;
  }
  bool cls = x > threshold_ ? true : (x < threshold_ ? false : high_now_);
  if (cls == high_now_) {
    ++run_;
    return;
  }
  if (!first_closed_) {
    leading_ = run_;
    first_closed_ = true;
  } else {
    (high_now_ ? high_ : low_).push_back(run_);
  }
  high_now_ = cls;
  run_ = 1;
}

WaitingTimes RegimeTracker::waiting_times(double dt) const {
  WaitingTimes w;
  w.threshold = threshold_;
  w.dt = dt;
  for (auto r : high_) w.high.push_back(static_cast<double>(r) * dt);
  for (auto r : low_) w.low.push_back(static_cast<double>(r) * dt);
  return w;
}

WaitingTimes extract_waiting_times(std::span<const double> samples, double dt, double threshold) {
  if (!(dt > 0.0)) throw InvalidArgument("dt: must be > 0");
  RegimeTracker t(threshold);
  for (double x : samples) t.push(x);
  if (t.high_runs().empty() && t.low_runs().empty())
    throw InsufficientData("waiting_times", "no completed sojourn at threshold " + std::to_string(threshold));
  return t.waiting_times(dt);
}

void MixExpModel::validate() const {
  if (!(w1 >= 0.0 && w2 >= 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12)
    throw InvalidArgument("MixExpModel: weights must be >= 0 and sum to 1");
  if (!(lambda2 > 0.0) || !(lambda1 >= lambda2)) throw InvalidArgument("MixExpModel: need lambda1 >= lambda2 > 0");
}

SummaryStats mixexp_stats(const MixExpModel& m) {
  double mom[5] = {1, 0, 0, 0, 0};
  double fact = 1.0;
  for (int k = 1; k <= 4; ++k) {
    fact *= k;
    mom[k] = fact * (m.w1 * std::pow(m.lambda1, -k) + m.w2 * std::pow(m.lambda2, -k));
  }
  double m1 = mom[1];
  double c2 = mom[2] - m1 * m1;
  double c3 = mom[3] - 3 * m1 * mom[2] + 2 * m1 * m1 * m1;
  double c4 = mom[4] - 4 * m1 * mom[3] + 6 * m1 * m1 * mom[2] - 3 * m1 * m1 * m1 * m1;
  return {m1, std::sqrt(std::max(c2, 0.0)), c3 / std::pow(c2, 1.5), c4 / (c2 * c2) - 3.0};
}

double mixexp_density(const MixExpModel& m, double z) {
  if (z < 0.0) return 0.0;
  return m.w1 * m.lambda1 * std::exp(-m.lambda1 * z) + m.w2 * m.lambda2 * std::exp(-m.lambda2 * z);
}

MixExpFit fit_mixexp(const SummaryStats& target) {
  if (!(target.ave > 0.0) || !(target.std > 0.0))
    throw InvalidArgument("fit_mixexp: target needs positive mean and std");
  if (!std::isfinite(target.skew) || target.skew == 0.0)
    throw InvalidArgument("fit_mixexp: target skew must be finite and nonzero");

  Objective obj = [&](const std::vector<double>& t) {
    MixExpModel m{sigmoid(t[0]), 1.0 - sigmoid(t[0]), std::exp(t[1]), std::exp(t[2])};
    double e = er2_three(mixexp_stats(m), target);
    return std::isfinite(e) ? e : kInf;
  };

  struct Start {
    double f;
    std::vector<double> t;
  };
  std::vector<Start> starts;
  auto add = [&](double w1, double l1, double l2) {
    w1 = std::clamp(w1, 1e-9, 1.0 - 1e-9);
    std::vector<double> t = {logit(w1), std::log(l1), std::log(l2)};
    double f = obj(t);
    if (std::isfinite(f)) starts.push_back({f, t});
  };

  // two-point moment match on the scaled moments a_k = m_k / k!
  const double mu = target.ave, s = target.std;
  double m2 = s * s + mu * mu;
  double m3 = target.skew * s * s * s + 3 * mu * s * s + mu * mu * mu;
  double a1 = mu, a2 = m2 / 2, a3 = m3 / 6;
  double den = a2 - a1 * a1;
  if (den > 0.0) {
    double pp = (a3 - a1 * a2) / den, qq = pp * a1 - a2;
    double disc = pp * pp - 4 * qq;
    if (disc > 0.0) {
      double x1 = 0.5 * (pp - std::sqrt(disc)), x2 = 0.5 * (pp + std::sqrt(disc));
      if (x1 > 0.0 && x2 > x1) {
        double w = (a1 - x2) / (x1 - x2);
        if (w > 0.0 && w < 1.0) add(w, 1.0 / x1, 1.0 / x2);
      }
    }
  }
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        add(sigmoid(-4.0 + 8.0 * i / 6), std::pow(10.0, j) / mu, std::pow(10.0, -2.0 + 2.0 * k / 3) / mu);
  if (starts.empty()) throw OptimizerError("fit_mixexp: no feasible start", {}, kInf);
  std::stable_sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.f < b.f; });

  NelderMeadOptions nm;
  nm.initial_step = 0.3;
  nm.ftol = 1e-14;
  nm.fatol = 1e-26;
  nm.xtol = 1e-10;
  nm.max_evals = 8000;
  NelderMeadResult best;
  bool have = false;
  for (std::size_t k = 0; k < std::min<std::size_t>(6, starts.size()); ++k) {
    auto r = nelder_mead(obj, starts[k].t, nm);
    if (!have || r.fx < best.fx) {
      best = r;
      have = true;
    }
  }

  MixExpFit out;
  out.converged = best.converged;
  out.model = ordered(sigmoid(best.x[0]), std::exp(best.x[1]), std::exp(best.x[2]));
  if (out.model.lambda1 / out.model.lambda2 < 1.05) {
    // best single exponential for the mean and std terms; the skew term is fixed at 2
    double inv = (1.0 / mu + 1.0 / s) / (1.0 / (mu * mu) + 1.0 / (s * s));
    out.model = {1.0, 0.0, 1.0 / inv, 1.0 / inv};
    out.collapsed = true;
  }
  out.stats = mixexp_stats(out.model);
  out.er2 = er2_three(out.stats, target);
  out.near_singular = out.model.lambda1 > 1e3 || out.model.lambda2 > 1e3;
  return out;
}

ThresholdReport reduce_waiting_times(const WaitingTimes& wt) {
  ThresholdReport rep;
  rep.threshold = wt.threshold;
  auto one = [](const std::vector<double>& v, const char* name) {
    RegimeReport r;
    r.regime = name;
    r.sojourns = v.size();
    r.waiting = population_stats(v);
    if (!r.waiting) {
      r.warnings.push_back("fewer than 4 sojourns or constant durations; no statistics or fit");
      return r;
    }
    try {
      r.fit = fit_mixexp(*r.waiting);
      if (!r.fit->converged) r.warnings.push_back("mixture fit stopped before meeting its tolerances");
      if (r.fit->near_singular) r.warnings.push_back("near-singular rate above 1e3 per hour");
      if (r.fit->collapsed) r.warnings.push_back("phases collapsed to a single exponential");
    } catch (const Error& e) {
      r.warnings.push_back(std::string("mixture fit failed: ") + e.what());
    }
    return r;
  };
  rep.high = one(wt.high, "high");
  rep.low = one(wt.low, "low");
  return rep;
}

std::vector<ThresholdReport> reduce_model(const SupCbiParams& p, const PathConfig& cfg,
                                          const std::vector<double>& thresholds, int replicates, int workers) {
  for (double t : thresholds)
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("thresholds: must be positive");
  if (thresholds.empty()) return {};
  if (replicates < 1) throw InvalidArgument("replicates: must be >= 1");

  std::function<std::vector<RegimeTracker>(int)> job = [&](int r) {
    std::vector<RegimeTracker> trackers;
    for (double t : thresholds) trackers.emplace_back(t);
    PathConfig c = cfg;
    c.stream = static_cast<std::uint64_t>(r);
    c.acf_lags_h.clear();
    simulate_supcbi(p, c, [&](std::int64_t, double, double x) {
      for (auto& tr : trackers) tr.push(x);
    });
    return trackers;
  };
  auto per_rep = run_replicates<std::vector<RegimeTracker>>(replicates, workers, job);

  std::vector<ThresholdReport> out;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    WaitingTimes all;
    all.threshold = thresholds[k];
    all.dt = cfg.dt;
    for (const auto& rep : per_rep) {
      auto w = rep[k].waiting_times(cfg.dt);
      all.high.insert(all.high.end(), w.high.begin(), w.high.end());
      all.low.insert(all.low.end(), w.low.begin(), w.low.end());
    }
    out.push_back(reduce_waiting_times(all));
  }
  return out;
}

}  // namespace supcbi
