// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <thread>

#include "cli_helpers.hpp"
#include "fixtures.hpp"
#include "supcbi/charfn.hpp"
#include "supcbi/errors.hpp"
#include "supcbi/estimation.hpp"
#include "supcbi/regimes.hpp"
#include "supcbi/simulator.hpp"

using namespace supcbi;
using namespace cli_helpers;
using cli::Json;
using fixtures::rel;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Json params_json(const SupCbiParams& p, double D) { return cli::params_to_json(cli::params_file_from(p, D)); }

Outcome closed_form_moments() {
  Outcome o;
  auto dir = scratch("acc1");
  struct Row {
    const char* name;
    const char* file;
    double s[4];
  };
  for (const Row& r : {Row{"station 2", "tools/params/station2.json", {2.485, 7.310, 9.790, 166.3}},
                       Row{"station 1", "tools/params/station1.json", {2.578, 7.878, 14.87, 417.6}}}) {
    int code = run({"moments", "--params", source_path(r.file), "--out-dir", dir.string()});
    o.require(code == 0, std::string(r.name) + " exit " + std::to_string(code));
    auto s = load_json(dir / "moments.json")["stats"];
    double worst = 0.0;
    const char* keys[4] = {"ave", "std", "skew", "kurt"};
    for (int k = 0; k < 4; ++k) worst = std::max(worst, rel(s[keys[k]].get<double>(), r.s[k]));
    o.require(worst < 5e-3, std::string(r.name) + fmt(" worst RE %.2e", worst));
  }
  return o;
}

Outcome d_consistency() {
  Outcome o;
  double worst = 0.0;
  for (const auto& c : fixtures::kDSweep) {
    double bm = c.B * levy_moment(TemperedStableMeasure(c.b, c.alpha), 1);
    double target = 1.0 - c.D;
    double err = target == 0.0 ? std::abs(bm) : rel(bm, target);
    worst = std::max(worst, err);
  }
  o.require(worst < 1e-2, fmt("worst |B M1 - (1-D)|/(1-D) %.2e over 6 columns", worst));
  return o;
}

Outcome er2_identity() {
  Outcome o;
  auto data = fixtures::station2_empirical();
  double worst = 0.0;
  for (const auto& c : fixtures::kDSweep) {
    SummaryStats model{data.ave * (1 + c.re[0]), data.std * (1 + c.re[1]), data.skew * (1 + c.re[2]),
                       data.kurt * (1 + c.re[3])};
    worst = std::max(worst, rel(relative_error_metric(model, data).er2, c.er2));
  }
  o.require(worst < 2e-2, fmt("worst Er2 recomposition RE %.2e", worst));
  return o;
}

Outcome mixexp_rows() {
  Outcome o;
  auto low = mixexp_stats({0.2743, 0.7257, 0.2371, 0.002335});
  double w = std::max({rel(low.ave, 311.9), rel(low.std, 410.9), rel(low.skew, 2.213), rel(low.kurt, 7.031)});
  o.require(w < 5e-3, fmt("low row (%.1f h, ...) worst RE %.2e", low.ave, w));
  auto high = mixexp_stats({0.4672, 0.5328, 0.1416, 0.1416});
  double h = std::max(rel(high.ave, 7.060), rel(high.skew, 2.0));
  o.require(h < 5e-3, fmt("high row mean %.3f h, worst RE %.2e", high.ave, h));
  return o;
}

Outcome mcm_convergence() {
  Outcome o;
  auto dir = scratch("acc5");
  int code = run({"simulate", "--params", source_path("tools/params/station2.json"), "--dt-h", "0.01", "--years", "200",
                  "--seed", std::to_string(kSeed), "--out-dir", dir.string()});
  o.require(code == 0, "simulate exit " + std::to_string(code));
  auto re = load_json(dir / "simulate.json")["table"][2]["stats"];
  double r[4] = {re["ave"].get<double>(), re["std"].get<double>(), re["skew"].get<double>(), re["kurt"].get<double>()};
  o.require(r[0] < 0.02 && r[1] < 0.05, fmt("200 y RE ave %.4f std %.4f", r[0], r[1]));
  o.require(r[2] < 0.10 && r[3] < 0.25, fmt("skew %.4f kurt %.4f", r[2], r[3]));

  // dt and dt/2 driven by shared noise, 4 replicates of 50 years
  auto p = fixtures::station2();
  PathConfig pc;
  pc.dt = 0.01;
  pc.n_steps = steps_for_hours(50 * kHoursPerYear, pc.dt);
  pc.burn_in_steps = steps_for_hours(5 * kHoursPerYear, pc.dt);
  pc.seed = kSeed + 1;
  std::function<CoupledPair(int)> job = [&](int r) {
    PathConfig c = pc;
    c.stream = static_cast<std::uint64_t>(r);
    return simulate_supcbi_coupled(p, c);
  };
  const int reps = 4;
  auto pairs = run_replicates<CoupledPair>(reps, workers(), job);
  StreamingStats coarse = pairs[0].coarse, fine = pairs[0].fine, means, stds;
  for (int r = 1; r < reps; ++r) {
    coarse.merge(pairs[r].coarse);
    fine.merge(pairs[r].fine);
  }
  for (const auto& pr : pairs) {
    means.push(pr.coarse.mean());
    stds.push(pr.coarse.std());
  }
  double se_ave = means.std() / std::sqrt(double(reps)), se_std = stds.std() / std::sqrt(double(reps));
  double d_ave = std::abs(fine.mean() - coarse.mean()), d_std = std::abs(fine.std() - coarse.std());
  o.require(d_ave < se_ave, fmt("halving dt moves ave %.2e (SE %.2e)", d_ave, se_ave));
  o.require(d_std < se_std, fmt("std %.2e (SE %.2e)", d_std, se_std));
  return o;
}

Outcome charfn_cross_validation() {
  Outcome o;
  for (auto p : {fixtures::station2(), fixtures::station1()}) {
    auto fd = charfn_cumulants(p);
    auto cf = supcbi_cumulants(p);
    double w = std::max({rel(fd.k1, cf.k1), rel(fd.k2, cf.k2), rel(fd.k3, cf.k3), rel(fd.k4, cf.k4)});
    o.require(w < 1e-2, fmt("cumulants worst RE %.2e", w));
  }
  auto p = fixtures::station2();
  double worst = 0.0;
  for (double tau : {0.25, 0.5, 1.0, 2.0, 5.0})
    worst = std::max(worst, std::abs(riccati_sensitivity(p.measure, p.B, tau) - std::exp(-p.D() * tau)));
  o.require(worst < 1e-4, fmt("sensitivity vs exp(-D tau) worst %.2e", worst));
  return o;
}

Outcome embedding_convergence() {
  Outcome o;
  auto p = fixtures::station2();
  auto logc = log_stationary_charfn(p, 1.0);
  double pd = INFINITY, pg = INFINITY;
  bool dec_d = true, dec_g = true;
  std::string seq;
  for (int n : {10, 100, 1000}) {
    auto part = build_partition(p.mixing, n);
    double d = embedding_gap(p.mixing, part);
    double g = std::abs(log_discrete_charfn(p.A, p.B, p.measure, part, p.xmin, 1.0) - logc);
    dec_d = dec_d && d < pd;
    dec_g = dec_g && g < pg;
    pd = d;
    pg = g;
    seq += fmt(" %.2e/%.2e", d, g);
  }
  o.require(dec_d && dec_g, "d_n / LogC gap at n=10,100,1000:" + seq);
  auto ds = discrete_supcbi_stats(p.A, p.B, p.measure, build_partition(p.mixing, 1000), p.xmin);
  auto s = supcbi_stats(p);
  double w = std::max({rel(ds.ave, s.ave), rel(ds.std, s.std), rel(ds.skew, s.skew), rel(ds.kurt, s.kurt)});
  o.require(w < 2e-2, fmt("n=1000 stats worst RE %.2e", w));
  return o;
}

Outcome fitting_round_trip() {
  Outcome o;
  AcfFit acf;
  acf.U = 0.0676;
  acf.beta = 2.04;
  double worst = 0.0;
  for (const auto& c : fixtures::kDSweep) {
    auto truth = fixtures::station2_at(c);
    auto fit = fit_moments(supcbi_stats(truth), c.D, acf, truth.xmin);
    worst = std::max(worst, fit.errors.er2);
  }
  o.require(worst < 1e-8, fmt("noiseless worst Er2 %.1e", worst));

  // 200 simulated years of the n = 20 embedding, sampled hourly, through the fit command
  auto p = fixtures::station2();
  auto part = build_partition(p.mixing, 20, p.mixing.eta / 4, 0.3);
  PathConfig pc;
  pc.dt = 0.25;
  pc.n_steps = steps_for_hours(200 * kHoursPerYear, pc.dt);
  pc.burn_in_steps = steps_for_hours(5 * kHoursPerYear, pc.dt);
  pc.seed = kSeed;
  std::vector<double> hourly;
  hourly.reserve(static_cast<std::size_t>(200 * kHoursPerYear));
  simulate_embedding(p.A, p.B, p.measure, part, p.xmin, pc, [&](std::int64_t step, double, double x) {
    if (step % 4 == 0) hourly.push_back(x);
  });
  auto dir = scratch("acc8");
  write_hourly_csv(dir / "series.csv", hourly);
  int code = run({"fit", "--input", (dir / "series.csv").string(), "--D", "0.7", "--out-dir", dir.string()});
  o.require(code == 0, "fit exit " + std::to_string(code));
  auto j = load_json(dir / "fit.json");
  double U = j["acf_fit"]["U_per_h"].get<double>(), beta = j["acf_fit"]["beta"].get<double>();
  o.require(rel(U, 0.0676) < 0.15, fmt("U %.4f (RE %.3f)", U, rel(U, 0.0676)));
  o.require(rel(beta, 2.04) < 0.10, fmt("beta %.3f (RE %.3f)", beta, rel(beta, 2.04)));
  double er2 = j["er2"].get<double>();
  o.require(er2 < 5e-2, fmt("refit Er2 %.2e", er2));
  return o;
}

Outcome regime_reduction() {
  Outcome o;
  auto dir = scratch("acc9");
  std::vector<double> er2;
  for (double D : {1.0, 0.7, 0.5}) {
    const fixtures::DColumn* col = nullptr;
    for (const auto& c : fixtures::kDSweep)
      if (c.D == D) col = &c;
    auto file = dir / ("params_D" + fmt("%.1f", D) + ".json");
    write_params(file, params_json(fixtures::station2_at(*col), D));
    auto out = dir / ("D" + fmt("%.1f", D));
    int code = run({"reduce", "--params", file.string(), "--thresholds", "20", "--seed", std::to_string(kSeed),
                    "--workers", std::to_string(workers()), "--out-dir", out.string()});
    o.require(code == 0, "reduce exit " + std::to_string(code));
    auto high = load_json(out / "reduce.json")["thresholds"][0]["high"];
    if (!high["mixexp"].is_object() || !high["supcbi"].is_object()) {
      o.require(false, fmt("D=%.1f: no high-regime fit", D));
      er2.push_back(NAN);
      continue;
    }
    auto emp = high["supcbi"];
    auto fit = high["mixexp"]["stats"];
    er2.push_back(high["mixexp"]["er2"].get<double>());
    if (D == 0.7) {
      double mean = emp["ave"].get<double>();
      o.require(mean >= 5.0 && mean <= 10.0, fmt("D=0.7 high mean %.3f h", mean));
      double w = std::max({rel(fit["ave"].get<double>(), mean), rel(fit["std"].get<double>(), emp["std"].get<double>()),
                           rel(fit["skew"].get<double>(), emp["skew"].get<double>())});
      o.require(w < 1e-2, fmt("mixture vs empirical worst RE %.2e", w) +
                              fmt(" (empirical std %.3f skew %.3f)", emp["std"].get<double>(), emp["skew"].get<double>()));
    }
  }
  bool dec = er2.size() == 3 && er2[0] > er2[1] && er2[1] > er2[2];
  o.require(dec, "high Er2 at D=1,0.7,0.5:" + fmt(" %.2e", er2[0]) + fmt(" %.2e", er2[1]) + fmt(" %.2e", er2[2]));
  return o;
}

Outcome determinism() {
  Outcome o;
  auto dir = scratch("acc10");
  const std::string params = source_path("tools/params/station2.json");
  auto sim = [&](const std::string& out, int w) {
    return run({"simulate", "--params", params, "--years", "2", "--burn-in-years", "0.1", "--seed", "77",
                "--replicates", "4", "--workers", std::to_string(w), "--dump-stride", "1000", "--out-dir",
                (dir / out).string()});
  };
  auto red = [&](const std::string& out, int w) {
    return run({"reduce", "--params", params, "--years", "2", "--burn-in-years", "0.1", "--seed", "77",
                "--thresholds", "5,20", "--replicates", "4", "--workers", std::to_string(w), "--out-dir",
                (dir / out).string()});
  };
  bool ran = sim("s1", 1) == 0 && sim("s2", 1) == 0 && sim("s4", 4) == 0 && red("r1", 1) == 0 && red("r2", 1) == 0 &&
             red("r4", 4) == 0;
  ran = ran && run({"rerun", "--report", (dir / "s1" / "simulate.json").string(), "--workers", "3", "--out-dir",
                    (dir / "s3").string()}) == 0;
  o.require(ran, "runs completed");
  auto same = [&](const char* a, const char* b, const char* f) { return slurp(dir / a / f) == slurp(dir / b / f); };
  o.require(same("s1", "s2", "simulate.json") && same("s1", "s2", "path.csv"), "simulate repeat identical");
  o.require(same("s1", "s4", "simulate.json") && same("s1", "s4", "path.csv"), "simulate workers 1 vs 4 identical");
  o.require(same("s1", "s3", "simulate.json"), "rerun from report identical");
  o.require(same("r1", "r2", "reduce.json") && same("r1", "r4", "reduce.json") && same("r1", "r4", "reduce.csv"),
            "reduce repeat and workers identical");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // runtime limit, 0 for none
    std::function<Outcome()> fn;
  };
  const Criterion all[] = {
      {1, "closed-form moment reproduction", 1.0, closed_form_moments},
      {2, "D-consistency", 1.0, d_consistency},
      {3, "Er2 identity", 0.0, er2_identity},
      {4, "MixExp statistics", 0.0, mixexp_rows},
      {5, "MCM convergence (200 years)", 600.0, mcm_convergence},
      {6, "characteristic-function cross-validation", 30.0, charfn_cross_validation},
      {7, "embedding convergence", 60.0, embedding_convergence},
      {8, "fitting round trip", 0.0, fitting_round_trip},
      {9, "regime reduction (200 years)", 0.0, regime_reduction},
      {10, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0) o.require(secs < c.budget_s, fmt("runtime under %.0f s", c.budget_s));
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
