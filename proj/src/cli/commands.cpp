#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "supcbi/charfn.hpp"
#include "supcbi/cli.hpp"
#include "supcbi/errors.hpp"
#include "supcbi/estimation.hpp"
#include "supcbi/regimes.hpp"
#include "supcbi/simulator.hpp"

namespace supcbi::cli {

namespace {

const char* const kCommands[] = {"stats", "fit", "moments", "simulate", "validate", "reduce"};

std::string num(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

Json stats_json(const SummaryStats& s) { return Json{{"ave", s.ave}, {"std", s.std}, {"skew", s.skew}, {"kurt", s.kurt}}; }

// Whatever the sample count supports; missing statistics become null with a warning.
Json partial_stats_json(const StreamingStats& acc, std::vector<std::string>& warnings) {
  Json j;
  auto put = [&](const char* key, auto getter) {
    try {
      j[key] = getter();
    } catch (const InsufficientData& e) {
      j[key] = nullptr;
      warnings.push_back(std::string("insufficient data: ") + e.what());
    }
  };
  put("ave", [&] { return acc.mean(); });
  put("std", [&] { return acc.std(); });
  put("skew", [&] { return acc.skewness(); });
  put("kurt", [&] { return acc.excess_kurtosis(); });
  return j;
}

Json relative_errors_json(const Json& mc, const SummaryStats& cf) {
  Json j;
  const double ref[4] = {cf.ave, cf.std, cf.skew, cf.kurt};
  const char* keys[4] = {"ave", "std", "skew", "kurt"};
  for (int k = 0; k < 4; ++k) {
    if (mc[keys[k]].is_null() || ref[k] == 0.0)
      j[keys[k]] = nullptr;
    else
      j[keys[k]] = std::abs(mc[keys[k]].get<double>() - ref[k]) / std::abs(ref[k]);
  }
  return j;
}

std::string strip_step_suffix(const std::string& s) {
  auto pos = s.rfind(" (step ");
  return pos == std::string::npos ? s : s.substr(0, pos);
}

// Runs one pipeline stage, prefixing any error with the stage label and keeping its type.
template <class F>
auto staged(const std::string& label, F&& f) -> decltype(f()) {
  const std::string pre = label + " stage: ";
  try {
    return f();
  } catch (const InsufficientData& e) {
    std::string w = e.what(), head = e.statistic() + ": ";
    if (w.rfind(head, 0) == 0) w = w.substr(head.size());
    throw InsufficientData(e.statistic(), pre + w);
  } catch (const DataError& e) {
    throw DataError(pre + e.what());
  } catch (const OptimizerError& e) {
    throw OptimizerError(pre + e.what(), e.best(), e.best_value());
  } catch (const NumericError& e) {
    throw NumericError(pre + strip_step_suffix(e.what()), e.step());
  } catch (const DomainError& e) {
    throw DomainError(pre + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(pre + e.what());
  }
}

PathConfig path_config(const RunConfig& cfg) {
  PathConfig pc;
  pc.dt = cfg.dt_h;
  pc.n_steps = steps_for_hours(cfg.years * kHoursPerYear / cfg.replicates, cfg.dt_h);
  pc.burn_in_steps = steps_for_hours(cfg.burn_in_years * kHoursPerYear, cfg.dt_h);
  pc.seed = *cfg.seed;
  if (pc.n_steps < 1) throw ConfigError("years: shorter than one time step per replicate");
  return pc;
}

std::vector<int> simulate_lags(int max_lag_h) {
  std::vector<int> out;
  for (int s : {1, 2, 5, 10, 20, 50, 100, 200})
    if (s <= max_lag_h) out.push_back(s);
  return out;
}

// Largest lag the series can support: 2 * (lag in samples) < length.
int clamp_lag(const DischargeSeries& s, int max_lag_h) {
  if (s.size() < 3) return 0;
  double max_k = std::floor((static_cast<double>(s.size()) - 1.0) / 2.0);
  return std::min(max_lag_h, static_cast<int>(std::floor(max_k * s.interval_h + 1e-9)));
}

Json base_report(const RunConfig& cfg) {
  Json j;
  j["command"] = cfg.command;
  j["config"] = cfg.to_json();
  return j;
}

void write_text(const RunConfig& cfg, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(cfg.out_dir);
  auto path = std::filesystem::path(cfg.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out-dir: cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << "\n";
}

void write_json(const RunConfig& cfg, const std::string& name, const Json& j) { write_text(cfg, name, j.dump(2) + "\n"); }

std::string acf_csv(const Json& rows, const std::vector<std::string>& cols) {
  std::ostringstream os;
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Json& v = r[cols[c]];
      os << (c ? "," : "") << (v.is_number() ? num(v.get<double>()) : "");
    }
    os << "\n";
  }
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

void RunConfig::validate() const {
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands))
    throw ConfigError("command: unknown '" + command + "'");
  if (!(interval_h > 0.0) || !std::isfinite(interval_h)) throw ConfigError("interval-h: must be > 0");
  if (D && !(*D > 0.0 && *D <= 1.0)) throw ConfigError("D: must lie in (0, 1]");
  if (xmin && !(*xmin >= 0.0)) throw ConfigError("xmin: must be >= 0");
  if (!(dt_h > 0.0) || !std::isfinite(dt_h)) throw ConfigError("dt-h: must be > 0");
  if (!(years > 0.0) || !std::isfinite(years)) throw ConfigError("years: must be > 0");
  if (!(burn_in_years >= 0.0) || !std::isfinite(burn_in_years)) throw ConfigError("burn-in-years: must be >= 0");
  if (max_lag_h < 1) throw ConfigError("max-lag-h: must be >= 1");
  if (replicates < 1) throw ConfigError("replicates: must be >= 1");
  if (dump_stride < 0) throw ConfigError("dump-stride: must be >= 0");
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  for (double t : thresholds)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("thresholds: must be positive, got " + num(t));

  if ((command == "stats" || command == "fit") && input.empty()) throw ConfigError("input: required for " + command);
  if (command == "fit" && !D) throw ConfigError("D: required for fit");
  if ((command == "moments" || command == "simulate" || command == "validate" || command == "reduce") && !params)
    throw ConfigError("params: required for " + command);
  if ((command == "simulate" || command == "reduce") && !seed) throw ConfigError("seed: required for " + command);
  if (params) params->model();
}

Json RunConfig::to_json() const {
  Json j;
  j["input"] = input.empty() ? Json(nullptr) : Json(input);
  j["interval_h"] = interval_h;
  j["params"] = params ? params_to_json(*params) : Json(nullptr);
  j["D"] = D ? Json(*D) : Json(nullptr);
  j["xmin_m3_per_s"] = xmin ? Json(*xmin) : Json(nullptr);
  j["dt_h"] = dt_h;
  j["years"] = years;
  j["burn_in_years"] = burn_in_years;
  j["seed"] = seed ? Json(*seed) : Json(nullptr);
  j["thresholds_m3_per_s"] = thresholds;
  j["max_lag_h"] = max_lag_h;
  j["replicates"] = replicates;
  j["dump_stride"] = dump_stride;
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  auto need = [&](const char* key) -> const Json& {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing ") + key);
    return j.at(key);
  };
  RunConfig c;
  try {
    auto in = need("input");
    c.input = in.is_null() ? "" : in.get<std::string>();
    c.interval_h = need("interval_h").get<double>();
    if (!need("params").is_null()) c.params = params_from_json(need("params"));
    if (!need("D").is_null()) c.D = need("D").get<double>();
    if (!need("xmin_m3_per_s").is_null()) c.xmin = need("xmin_m3_per_s").get<double>();
    c.dt_h = need("dt_h").get<double>();
    c.years = need("years").get<double>();
    c.burn_in_years = need("burn_in_years").get<double>();
    if (!need("seed").is_null()) c.seed = need("seed").get<std::uint64_t>();
    c.thresholds = need("thresholds_m3_per_s").get<std::vector<double>>();
    c.max_lag_h = need("max_lag_h").get<int>();
    c.replicates = need("replicates").get<int>();
    c.dump_stride = need("dump_stride").get<std::int64_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

CommandResult cmd_stats(const RunConfig& cfg) {
  auto series = read_discharge_csv_file(cfg.input, cfg.interval_h);
  Json rep = base_report(cfg);
  std::vector<std::string> warnings;
  std::size_t gaps = series.gap_count();
  rep["samples"] = {{"rows", series.size()}, {"present", series.size() - gaps}, {"gaps", gaps}};
  rep["stats"] = partial_stats_json(empirical_accumulator(series), warnings);

  Json acf = Json::array();
  int lag = clamp_lag(series, cfg.max_lag_h);
  if (lag < cfg.max_lag_h) warnings.push_back("max lag clamped to " + std::to_string(lag) + " h by the series length");
  if (lag >= 1) {
    try {
      for (auto pt : empirical_acf(series, lag)) acf.push_back({{"lag_h", pt.lag_h}, {"acf", pt.value}});
    } catch (const InsufficientData& e) {
      warnings.push_back(std::string("insufficient data: ") + e.what());
    }
  }
  rep["max_lag_h"] = lag;
  rep["acf"] = acf;
  rep["warnings"] = warnings;
  write_json(cfg, "stats.json", rep);
  write_text(cfg, "acf.csv", acf_csv(acf, {"lag_h", "acf"}));
  return {rep, 0};
}

CommandResult cmd_fit(const RunConfig& cfg) {
  auto series = read_discharge_csv_file(cfg.input, cfg.interval_h);
  const double D = *cfg.D;
  int lag = clamp_lag(series, cfg.max_lag_h);

  auto acf_fit = staged("acf", [&] {
    if (lag < 1) throw InsufficientData("acf", "series too short for any lag");
    auto acf = empirical_acf(series, lag);
    return fit_acf(acf);
  });
  SummaryStats data;
  double xmin = 0.0;
  auto fit = staged("moments", [&] {
    data = empirical_stats(series);
    xmin = cfg.xmin ? *cfg.xmin : default_xmin(series);
    return fit_moments(data, D, acf_fit, xmin);
  });

  ParamsFile out = params_file_from(fit.params, D);
  Json rep = base_report(cfg);
  rep["params"] = params_to_json(out);
  rep["acf_fit"] = {{"U_per_h", acf_fit.U},     {"beta", acf_fit.beta},       {"sse", acf_fit.sse},
                    {"lag_cutoff_h", acf_fit.lag_cutoff}, {"lags_used", acf_fit.n_lags}};
  rep["data"] = stats_json(data);
  rep["fitted"] = stats_json(fit.fitted);
  rep["relative_errors"] = {{"ave", fit.errors.re[0]},
                            {"std", fit.errors.re[1]},
                            {"skew", fit.errors.re[2]},
                            {"kurt", fit.errors.re[3]}};
  rep["er2"] = fit.errors.er2;
  rep["optimizer"] = {{"converged", fit.converged}, {"evaluations", fit.evaluations}};
  rep["defaults"] = {{"xmin_m3_per_s", xmin},
                     {"xmin_source", cfg.xmin ? "given" : "minimum observed, floored to 0.01"},
                     {"max_lag_h", lag},
                     {"gaps", series.gap_count()}};
  std::vector<std::string> warnings = fit.warnings;
  if (lag < cfg.max_lag_h) warnings.push_back("max lag clamped to " + std::to_string(lag) + " h by the series length");
  rep["warnings"] = warnings;
  write_json(cfg, "fit.json", rep);
  write_json(cfg, "params.json", rep["params"]);
  return {rep, 0};
}

CommandResult cmd_moments(const RunConfig& cfg) {
  auto p = cfg.params->model();
  Json rep = base_report(cfg);
  rep["stats"] = stats_json(supcbi_stats(p));
  auto c = supcbi_cumulants(p);
  rep["cumulants"] = {c.k1, c.k2, c.k3, c.k4};
  rep["R_h"] = p.R();
  Json acf = Json::array();
  for (int s = 0; s <= cfg.max_lag_h; ++s) acf.push_back({{"lag_h", s}, {"acf", supcbi_acf(p, s)}});
  rep["acf"] = acf;
  write_json(cfg, "moments.json", rep);
  write_text(cfg, "moments_acf.csv", acf_csv(acf, {"lag_h", "acf"}));
  return {rep, 0};
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  auto p = cfg.params->model();
  PathConfig pc = path_config(cfg);
  pc.acf_lags_h = simulate_lags(cfg.max_lag_h);
  pc.validate();

  std::ostringstream dump;
  SampleSink sink;
  if (cfg.dump_stride > 0) {
    dump << "step,time_h,discharge_m3_per_s\n";
    sink = [&](std::int64_t step, double t, double x) {
      if (step % cfg.dump_stride == 0) dump << step << "," << num(t) << "," << num(x) << "\n";
    };
  }
  auto run = simulate_replicates(p, pc, cfg.replicates, cfg.workers, sink);

  Json rep = base_report(cfg);
  std::vector<std::string> warnings;
  SummaryStats cf = supcbi_stats(p);
  Json mc = partial_stats_json(run.pooled, warnings);
  double span_h = static_cast<double>(pc.n_steps) * pc.dt;
  if (span_h < kHoursPerYear)
    for (const char* s : {"skew", "kurt"})
      if (!mc[s].is_null())
        warnings.push_back(std::string("insufficient data: ") + s + ": under one simulated year per replicate");

  rep["steps_per_replicate"] = pc.n_steps;
  rep["burn_in_steps"] = pc.burn_in_steps;
  rep["samples"] = run.pooled.count();
  Json table = Json::array();
  table.push_back({{"row", "closed_form"}, {"stats", stats_json(cf)}});
  table.push_back({{"row", "monte_carlo"}, {"stats", mc}});
  table.push_back({{"row", "relative_error"}, {"stats", relative_errors_json(mc, cf)}});
  rep["table"] = table;

  if (cfg.replicates >= 2) {
    // spread of the replicate means and standard deviations
    Json se;
    for (int which = 0; which < 2; ++which) {
      StreamingStats spread;
      for (const auto& r : run.replicates) spread.push(which == 0 ? r.mean() : r.std());
      se[which == 0 ? "ave" : "std"] = spread.std() / std::sqrt(static_cast<double>(cfg.replicates));
    }
    rep["replicate_standard_error"] = se;
  } else {
    rep["replicate_standard_error"] = nullptr;
  }

  Json acf = Json::array();
  for (auto pt : run.pooled.acf()) {
    double s = pt.lag_h;
    acf.push_back({{"lag_h", pt.lag_h},
                   {"monte_carlo", pt.value},
                   {"closed_form", supcbi_acf(p, s)},
                   {"redraw_scheme", std::exp(-p.D() * s / p.R())}});
  }
  rep["acf"] = acf;
  rep["warnings"] = warnings;
  write_json(cfg, "simulate.json", rep);
  if (cfg.dump_stride > 0) write_text(cfg, "path.csv", dump.str());
  return {rep, 0};
}

CommandResult cmd_validate(const RunConfig& cfg) {
  auto p = cfg.params->model();
  Json checks = Json::array();
  std::vector<std::string> failed;
  auto check = [&](const std::string& name, double value, double tol) {
    bool ok = std::isfinite(value) && value < tol;
    checks.push_back({{"check", name}, {"value", value}, {"tolerance", tol}, {"pass", ok}});
    if (!ok) failed.push_back(name);
  };
  auto flag = [&](const std::string& name, bool ok) {
    checks.push_back({{"check", name}, {"value", nullptr}, {"tolerance", nullptr}, {"pass", ok}});
    if (!ok) failed.push_back(name);
  };

  // Log C derivatives at 0 against the closed-form cumulants
  auto fd = charfn_cumulants(p);
  auto cf = supcbi_cumulants(p);
  check("cumulant k1 relative error", rel(fd.k1, cf.k1), 1e-2);
  check("cumulant k2 relative error", rel(fd.k2, cf.k2), 1e-2);
  check("cumulant k3 relative error", rel(fd.k3, cf.k3), 1e-2);
  check("cumulant k4 relative error", rel(fd.k4, cf.k4), 1e-2);

  auto s = supcbi_stats(p);
  {
    const double h = 1e-4;
    using cplx = std::complex<double>;
    cplx cp = stationary_charfn(p, h), cm = stationary_charfn(p, -h), c0 = stationary_charfn(p, 0.0);
    double mean = (cplx(0, -1) * (cp - cm) / (2 * h)).real();
    double second = (-(cp - 2.0 * c0 + cm) / (h * h)).real();
    check("C'(0) mean relative error", rel(mean, s.ave), 1e-3);
    check("C''(0) second moment relative error", rel(second, s.std * s.std + s.ave * s.ave), 1e-2);
  }
  for (double tau : {0.5, 1.0, 2.0})
    check("sensitivity at tau=" + num(tau) + " vs exp(-D tau)",
          std::abs(riccati_sensitivity(p.measure, p.B, tau) - std::exp(-p.D() * tau)), 1e-4);
  {
    double worst = 0.0, modulus = 0.0;
    for (double u : {0.1, 1.0, 5.0}) {
      auto a = stationary_charfn(p, u), b = stationary_charfn(p, -u);
      worst = std::max(worst, std::abs(b - std::conj(a)));
    }
    for (double u : {1e-3, 0.1, 1.0, 5.0, 20.0}) modulus = std::max(modulus, std::abs(stationary_charfn(p, u)));
    check("Hermitian symmetry |C(-u) - conj C(u)|", worst, 1e-12);
    check("max |C(u)| for u != 0", modulus, 1.0);
  }

  // embedding convergence
  Json table = Json::array();
  double prev_d = INFINITY, prev_g = INFINITY;
  bool d_dec = true, g_dec = true;
  const auto logc = log_stationary_charfn(p, 1.0);
  for (int n : {10, 100, 1000}) {
    auto part = build_partition(p.mixing, n);
    double d = embedding_gap(p.mixing, part);
    double g = std::abs(log_discrete_charfn(p.A, p.B, p.measure, part, p.xmin, 1.0) - logc);
    d_dec = d_dec && d < prev_d;
    g_dec = g_dec && g < prev_g;
    prev_d = d;
    prev_g = g;
    table.push_back({{"n", n}, {"d_n", d}, {"d_n_relative", d / p.R()}, {"logC_gap_u1", g}});
  }
  flag("d_n strictly decreasing over n = 10, 100, 1000", d_dec);
  flag("|Log C_n(1) - Log C(1)| strictly decreasing", g_dec);
  {
    auto part = build_partition(p.mixing, 1000);
    auto ds = discrete_supcbi_stats(p.A, p.B, p.measure, part, p.xmin);
    check("n=1000 discrete ave relative error", rel(ds.ave, s.ave), 2e-2);
    check("n=1000 discrete std relative error", rel(ds.std, s.std), 2e-2);
    check("n=1000 discrete skew relative error", rel(ds.skew, s.skew), 2e-2);
    check("n=1000 discrete kurt relative error", rel(ds.kurt, s.kurt), 2e-2);
  }
  {
    auto fine = build_partition(p.mixing, 1000, 0.1 * p.mixing.eta, 0.3);
    double worst_disc = 0.0, worst_quad = 0.0;
    for (int lag = 0; lag <= cfg.max_lag_h; ++lag) {
      double c = supcbi_acf(p, lag);
      worst_disc = std::max(worst_disc, std::abs(discrete_supcbi_acf(fine, p.D(), lag) - c));
      worst_quad = std::max(worst_quad, std::abs(supcbi_acf_quadrature(p, lag) - c));
    }
    check("n=1000 discrete ACF (cbar = 0.1 eta) max abs error", worst_disc, 1e-3);
    check("ACF closed form vs mixture quadrature max abs error", worst_quad, 1e-6);
  }

  Json rep = base_report(cfg);
  rep["embedding"] = table;
  rep["checks"] = checks;
  rep["failed"] = failed;
  rep["pass"] = failed.empty();
  write_json(cfg, "validate.json", rep);
  if (!failed.empty()) {
    std::cerr << "validation failed:\n";
    for (const auto& f : failed) std::cerr << "  " << f << "\n";
  }
  return {rep, failed.empty() ? 0 : 4};
}

CommandResult cmd_reduce(const RunConfig& cfg) {
  auto p = cfg.params->model();
  PathConfig pc = path_config(cfg);
  pc.validate();
  auto reports = reduce_model(p, pc, cfg.thresholds, cfg.replicates, cfg.workers);

  Json rep = base_report(cfg);
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "threshold_m3_per_s,regime,source,w1,w2,lambda1_per_h,lambda2_per_h,ave_h,std_h,skew,kurt,er2\n";
  auto regime_json = [&](const RegimeReport& r, double thr) {
    Json j;
    j["sojourns"] = r.sojourns;
    j["supcbi"] = r.waiting ? stats_json(*r.waiting) : Json(nullptr);
    if (r.fit) {
      const auto& f = *r.fit;
      j["mixexp"] = {{"w1", f.model.w1},
                     {"w2", f.model.w2},
                     {"lambda1_per_h", f.model.lambda1},
                     {"lambda2_per_h", f.model.lambda2},
                     {"stats", stats_json(f.stats)},
                     {"er2", f.er2},
                     {"converged", f.converged},
                     {"collapsed", f.collapsed},
                     {"near_singular", f.near_singular}};
    } else {
      j["mixexp"] = nullptr;
    }
    j["warnings"] = r.warnings;
    if (r.waiting) {
      const auto& w = *r.waiting;
      csv << num(thr) << "," << r.regime << ",supCBI,,,,," << num(w.ave) << "," << num(w.std) << "," << num(w.skew)
          << "," << num(w.kurt) << ",\n";
    }
    if (r.fit) {
      const auto& f = *r.fit;
      csv << num(thr) << "," << r.regime << ",MixExp," << num(f.model.w1) << "," << num(f.model.w2) << ","
          << num(f.model.lambda1) << "," << num(f.model.lambda2) << "," << num(f.stats.ave) << "," << num(f.stats.std)
          << "," << num(f.stats.skew) << "," << num(f.stats.kurt) << "," << num(f.er2) << "\n";
    }
    return j;
  };
  for (const auto& t : reports) {
    Json j;
    j["threshold_m3_per_s"] = t.threshold;
    j["high"] = regime_json(t.high, t.threshold);
    j["low"] = regime_json(t.low, t.threshold);
    rows.push_back(j);
  }
  rep["steps_per_replicate"] = pc.n_steps;
  rep["thresholds"] = rows;
  write_json(cfg, "reduce.json", rep);
  write_text(cfg, "reduce.csv", csv.str());
  return {rep, 0};
}

CommandResult run_command(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.command == "stats") return cmd_stats(cfg);
  if (cfg.command == "fit") return cmd_fit(cfg);
  if (cfg.command == "moments") return cmd_moments(cfg);
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "validate") return cmd_validate(cfg);
  return cmd_reduce(cfg);
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ValidationFailure&) {
    return 4;
  } catch (const ConfigError&) {
    return 1;
  } catch (const InvalidArgument&) {
    return 1;
  } catch (const DataError&) {
    return 2;
  } catch (const InsufficientData&) {
    return 2;
  } catch (const NumericError&) {
    return 3;
  } catch (const DomainError&) {
    return 3;
  } catch (const OptimizerError&) {
    return 3;
  } catch (...) {
    return 3;
  }
}

namespace {

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    if (a == std::string::npos) throw ConfigError("thresholds: empty entry in '" + text + "'");
    item = item.substr(a, b - a + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("thresholds: not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"supCBI discharge model: statistics, fitting, simulation and regime reduction"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string params_path, thresholds_text = "5,20,50,100", report_path;
  double D = 0, xmin = 0;
  std::uint64_t seed = 0;

  auto out_opts = [&](CLI::App* c) {
    c->add_option("--out-dir", cfg.out_dir, "Directory for reports")->capture_default_str();
  };
  auto input_opts = [&](CLI::App* c) {
    c->add_option("--input", cfg.input, "Discharge CSV (timestamp,discharge_m3s)")->required();
    c->add_option("--interval-h", cfg.interval_h, "Sampling interval of the CSV in hours")->capture_default_str();
    c->add_option("--max-lag-h", cfg.max_lag_h, "Largest ACF lag in hours")->capture_default_str();
  };
  auto params_opt = [&](CLI::App* c) {
    c->add_option("--params", params_path, "Parameter JSON (bare or inside a report)")->required();
  };
  auto sim_opts = [&](CLI::App* c) {
    c->add_option("--dt-h", cfg.dt_h, "Time step in hours")->capture_default_str();
    c->add_option("--years", cfg.years, "Simulated years after burn-in, split over replicates")->capture_default_str();
    c->add_option("--burn-in-years", cfg.burn_in_years, "Discarded years per replicate")->capture_default_str();
    c->add_option("--seed", seed, "Random seed")->required();
    c->add_option("--replicates", cfg.replicates, "Independent replicates")->capture_default_str();
    c->add_option("--workers", cfg.workers, "Worker threads (does not change results)")->capture_default_str();
  };

  auto* stats = app.add_subcommand("stats", "Empirical statistics and ACF of a discharge record");
  input_opts(stats);
  out_opts(stats);

  auto* fit = app.add_subcommand("fit", "Fit the ACF and then the moments at a given D");
  input_opts(fit);
  auto* d_opt = fit->add_option("--D", D, "Self-excitation gap D = 1 - B M1 in (0, 1]")->required();
  auto* xmin_opt = fit->add_option("--xmin", xmin, "Minimum discharge (default: observed minimum)");
  out_opts(fit);

  auto* moments = app.add_subcommand("moments", "Closed-form statistics and ACF");
  params_opt(moments);
  moments->add_option("--max-lag-h", cfg.max_lag_h, "Largest ACF lag in hours")->capture_default_str();
  out_opts(moments);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo statistics against the closed form");
  params_opt(simulate);
  sim_opts(simulate);
  simulate->add_option("--max-lag-h", cfg.max_lag_h, "Largest ACF lag in hours")->capture_default_str();
  simulate->add_option("--dump-stride", cfg.dump_stride, "Write every k-th step of replicate 0 to path.csv");
  out_opts(simulate);

  auto* validate = app.add_subcommand("validate", "Characteristic-function and embedding checks");
  params_opt(validate);
  validate->add_option("--max-lag-h", cfg.max_lag_h, "Largest ACF lag in hours")->capture_default_str();
  out_opts(validate);

  auto* reduce = app.add_subcommand("reduce", "Regime waiting times reduced to two-phase mixtures");
  params_opt(reduce);
  sim_opts(reduce);
  reduce->add_option("--thresholds", thresholds_text, "Comma-separated thresholds in m^3/s")->capture_default_str();
  out_opts(reduce);

  auto* rerun = app.add_subcommand("rerun", "Repeat a run from the configuration embedded in a report");
  rerun->add_option("--report", report_path, "Report JSON")->required();
  rerun->add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
  out_opts(rerun);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (rerun->parsed()) {
      std::ifstream in(report_path);
      if (!in) throw ConfigError("report: cannot open " + report_path);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw ConfigError("report: " + std::string(e.what()));
      }
      if (!j.contains("command") || !j.contains("config")) throw ConfigError("report: no embedded configuration");
      RunConfig again = RunConfig::from_json(j.at("config"));
      again.command = j.at("command").get<std::string>();
      again.out_dir = cfg.out_dir;
      again.workers = cfg.workers;
      return run_command(again).exit_code;
    }
    CLI::App* chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    if (!params_path.empty()) cfg.params = load_params_file(params_path);
    if (fit->parsed()) {
      if (d_opt->count()) cfg.D = D;
      if (xmin_opt->count()) cfg.xmin = xmin;
    }
    if (simulate->parsed() || reduce->parsed()) cfg.seed = seed;
    if (reduce->parsed()) cfg.thresholds = parse_thresholds(thresholds_text);
    return run_command(cfg).exit_code;
  } catch (const std::exception& e) {
    int code = exit_code_for_current_exception();
    std::cerr << "error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace supcbi::cli
