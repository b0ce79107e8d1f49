#include "supcbi/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace supcbi {

namespace {

struct Run {
  const Objective& f;
  int evals = 0;

  double operator()(const std::vector<double>& x) {
    ++evals;
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }
};

bool simplex_converged(const std::vector<std::vector<double>>& s, const std::vector<double>& fv,
                       const NelderMeadOptions& opt) {
  double fspread = fv.back() - fv.front();
  if (!(fspread <= opt.fatol + opt.ftol * std::abs(fv.front()))) return false;
  double diam = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i)
    for (std::size_t j = 0; j < s[0].size(); ++j) diam = std::max(diam, std::abs(s[i][j] - s[0][j]));
  return diam <= opt.xtol;
}

// One Nelder-Mead descent from a fresh simplex.
bool descend(Run& run, std::vector<double>& best, double& fbest, double step, const NelderMeadOptions& opt) {
  const std::size_t n = best.size();
  std::vector<std::vector<double>> s(n + 1, best);
  std::vector<double> fv(n + 1);
  fv[0] = fbest;
  for (std::size_t i = 0; i < n; ++i) {
    s[i + 1][i] += step;
    fv[i + 1] = run(s[i + 1]);
  }
  std::vector<std::size_t> order(n + 1);
  std::vector<double> c(n), xr(n), xe(n), xc(n);
  bool converged = false;
  while (run.evals < opt.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<std::vector<double>> s2(n + 1);
      std::vector<double> f2(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        s2[i] = s[order[i]];
        f2[i] = fv[order[i]];
      }
      s.swap(s2);
      fv.swap(f2);
    }
    if (simplex_converged(s, fv, opt)) {
      converged = true;
      break;
    }
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c[j] += s[i][j] / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) xr[j] = c[j] + (c[j] - s[n][j]);
    double fr = run(xr);
    if (fr < fv[0]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = c[j] + 2.0 * (c[j] - s[n][j]);
      double fe = run(xe);
      if (fe < fr) {
        s[n] = xe;
        fv[n] = fe;
      } else {
        s[n] = xr;
        fv[n] = fr;
      }
      continue;
    }
    if (fr < fv[n - 1]) {
      s[n] = xr;
      fv[n] = fr;
      continue;
    }
    bool outside = fr < fv[n];
    for (std::size_t j = 0; j < n; ++j)
      xc[j] = outside ? c[j] + 0.5 * (xr[j] - c[j]) : c[j] + 0.5 * (s[n][j] - c[j]);
    double fc = run(xc);
    if (fc < (outside ? fr : fv[n])) {
      s[n] = xc;
      fv[n] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) s[i][j] = s[0][j] + 0.5 * (s[i][j] - s[0][j]);
      fv[i] = run(s[i]);
    }
  }
  std::size_t ib = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  best = s[ib];
  fbest = fv[ib];
  return converged;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt) {
  Run run{f};
  NelderMeadResult res;
  res.x = std::move(x0);
  res.fx = run(res.x);
  double step = opt.initial_step;
  bool converged = descend(run, res.x, res.fx, step, opt);
  for (int r = 0; r < opt.restarts && converged && run.evals < opt.max_evals; ++r) {
    double before = res.fx;
    step = std::max(step * 0.1, 1e3 * opt.xtol);
    converged = descend(run, res.x, res.fx, step, opt);
    if (!(res.fx < before)) break;
  }
  res.converged = converged;
  res.evals = run.evals;
  return res;
}

}  // namespace supcbi
