#include "supcbi/charfn.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "supcbi/errors.hpp"

namespace supcbi {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

// Dormand-Prince 5(4)
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

struct State {
  cplx phi;
  cplx integral;
};

struct Deriv {
  cplx dphi;
  cplx psi;
};

Deriv eval(const TemperedStableMeasure& m, double B, cplx phi) {
  cplx psi = levy_exponent(m, phi);
  return {-phi - I * B * psi, psi};
}

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const Deriv*>> terms) {
  State r = y;
  for (auto& [c, k] : terms) {
    r.phi += h * c * k->dphi;
    r.integral += h * c * k->psi;
  }
  return r;
}

cplx second_derivative(const TemperedStableMeasure& m, double B, cplx phi, cplx dphi) {
  return -dphi - I * B * levy_exponent_derivative(m, phi) * dphi;
}

// quintic Hermite on one interval, t in [0,1]
void hermite5(double t, double h, cplx p0, cplx v0, cplx a0, cplx p1, cplx v1, cplx a1, cplx* p, cplx* dp) {
  double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  double h3 = 0.5 * (t3 - 2 * t4 + t5);
  double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  double h5 = 10 * t3 - 15 * t4 + 6 * t5;
  if (p) *p = h0 * p0 + h * h1 * v0 + h * h * h2 * a0 + h5 * p1 + h * h4 * v1 + h * h * h3 * a1;
  if (dp) {
    double d0 = -30 * t2 + 60 * t3 - 30 * t4;
    double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    double d2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    double d3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    double d4 = -12 * t2 + 28 * t3 - 15 * t4;
    double d5 = 30 * t2 - 60 * t3 + 30 * t4;
    *dp = (d0 * p0 + d5 * p1) / h + d1 * v0 + h * d2 * a0 + d4 * v1 + h * d3 * a1;
  }
}

}  // namespace

cplx riccati_rhs(const TemperedStableMeasure& m, double B, cplx phi) { return eval(m, B, phi).dphi; }

RiccatiTrajectory solve_riccati(const TemperedStableMeasure& m, double B, double u, double tol) {
  RiccatiOptions opt;
  opt.tol = tol;
  return solve_riccati(m, B, u, opt);
}

RiccatiTrajectory solve_riccati(const TemperedStableMeasure& m, double B, double u, const RiccatiOptions& opt) {
  if (!(B >= 0.0)) throw InvalidArgument("solve_riccati: B must be >= 0");
  if (!(opt.tol > 0.0) || !(opt.rtol > 0.0)) throw InvalidArgument("solve_riccati: tolerances must be > 0");
  const double m1 = levy_moment(m, 1);
  const double D = 1.0 - B * m1;
  if (!(D > 0.0)) throw InvalidArgument("solve_riccati: stationarity violated, D <= 0");
  const double atol = opt.tol * 1e-2;

  std::vector<double> land = opt.land;
  std::sort(land.begin(), land.end());
  std::size_t next_land = 0;

  RiccatiTrajectory tr;
  double tau = 0.0;
  State y{cplx(u, 0.0), cplx(0.0, 0.0)};
  Deriv k1 = eval(m, B, y.phi);
  auto record = [&](const State& s, const Deriv& k) {
    tr.taus.push_back(tau);
    tr.f.push_back(s.phi.real());
    tr.g.push_back(s.phi.imag());
    tr.dphi.push_back(k.dphi);
    tr.ddphi.push_back(second_derivative(m, B, s.phi, k.dphi));
  };
  record(y, k1);

  double h = 0.05;
  std::size_t steps = 0;
  while (std::abs(y.phi) >= opt.tol || next_land < land.size()) {
    while (next_land < land.size() && land[next_land] <= tau) ++next_land;
    bool landing = false;
    double hstep = h;
    if (next_land < land.size() && tau + hstep >= land[next_land]) {
      hstep = land[next_land] - tau;
      landing = true;
    }
    if (tau > opt.max_tau || ++steps > 10000000)
      throw NumericError("solve_riccati: phi did not decay", static_cast<std::int64_t>(steps));

    Deriv k2 = eval(m, B, axpy(y, hstep, {{a21, &k1}}).phi);
    Deriv k3 = eval(m, B, axpy(y, hstep, {{a31, &k1}, {a32, &k2}}).phi);
    Deriv k4 = eval(m, B, axpy(y, hstep, {{a41, &k1}, {a42, &k2}, {a43, &k3}}).phi);
    Deriv k5 = eval(m, B, axpy(y, hstep, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}).phi);
    Deriv k6 = eval(m, B, axpy(y, hstep, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}).phi);
    State yn = axpy(y, hstep, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    Deriv k7 = eval(m, B, yn.phi);
    State err = axpy(State{}, hstep, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});

    std::array<double, 4> ev = {err.phi.real(), err.phi.imag(), err.integral.real(), err.integral.imag()};
    std::array<double, 4> y0 = {y.phi.real(), y.phi.imag(), y.integral.real(), y.integral.imag()};
    std::array<double, 4> y1 = {yn.phi.real(), yn.phi.imag(), yn.integral.real(), yn.integral.imag()};
    double en = 0.0;
    for (int i = 0; i < 4; ++i) {
      double sc = atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      en += (ev[i] / sc) * (ev[i] / sc);
    }
    en = std::sqrt(en / 4.0);
    if (!std::isfinite(en)) throw NumericError("solve_riccati: non-finite state", static_cast<std::int64_t>(steps));

    double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    if (en <= 1.0) {
      tau = landing ? land[next_land] : tau + hstep;
      y = yn;
      k1 = k7;
      if (!(y.phi.imag() > -m.b)) throw DomainError("solve_riccati: Im(phi) reached -b");
      record(y, k1);
      if (!landing) h = hstep * fac;
    } else {
      h = hstep * fac;
    }
  }
  // beyond the last node psi(phi) ~ i M1 phi and phi decays like exp(-D tau)
  tr.psi_integral = y.integral + I * m1 * y.phi / D;
  return tr;
}

cplx RiccatiTrajectory::phi(double tau) const {
  if (taus.empty()) return 0.0;
  if (tau >= taus.back()) return cplx(f.back(), g.back());
  auto it = std::upper_bound(taus.begin(), taus.end(), tau);
  std::size_t j = static_cast<std::size_t>(it - taus.begin());
  if (j == 0) return cplx(f.front(), g.front());
  std::size_t i = j - 1;
  double h = taus[j] - taus[i];
  cplx p;
  hermite5((tau - taus[i]) / h, h, cplx(f[i], g[i]), dphi[i], ddphi[i], cplx(f[j], g[j]), dphi[j], ddphi[j], &p,
           nullptr);
  return p;
}

cplx RiccatiTrajectory::dphi_at(double tau) const {
  if (taus.empty()) return 0.0;
  if (tau >= taus.back()) return dphi.back();
  auto it = std::upper_bound(taus.begin(), taus.end(), tau);
  std::size_t j = static_cast<std::size_t>(it - taus.begin());
  if (j == 0) return dphi.front();
  std::size_t i = j - 1;
  double h = taus[j] - taus[i];
  cplx d;
  hermite5((tau - taus[i]) / h, h, cplx(f[i], g[i]), dphi[i], ddphi[i], cplx(f[j], g[j]), dphi[j], ddphi[j],
           nullptr, &d);
  return d;
}

cplx log_stationary_charfn(const SupCbiParams& p, double u, const RiccatiOptions& opt) {
  p.validate();
  auto tr = solve_riccati(p.measure, p.B, u, opt);
  return I * u * p.xmin + p.A * p.R() * tr.psi_integral;
}

cplx stationary_charfn(const SupCbiParams& p, double u, const RiccatiOptions& opt) {
  return std::exp(log_stationary_charfn(p, u, opt));
}

cplx stationary_charfn(const SupCbiParams& p, double u, double tol) {
  RiccatiOptions opt;
  opt.tol = tol;
  return stationary_charfn(p, u, opt);
}

cplx log_discrete_charfn(double A, double B, const TemperedStableMeasure& m, const DiscretePartition& part,
                         double xmin, double u, const RiccatiOptions& opt) {
  // Each component with speed rho_i runs the same trajectory in tau = rho_i t, so its
  // time integral is the shared one divided by rho_i.
  auto tr = solve_riccati(m, B, u, opt);
  cplx acc = 0.0;
  for (std::size_t i = 0; i < part.size(); ++i) acc += part.weights[i] / part.speeds[i] * tr.psi_integral;
  return I * u * xmin + A * acc;
}

cplx discrete_charfn(double A, double B, const TemperedStableMeasure& m, const DiscretePartition& part,
                     double xmin, double u, const RiccatiOptions& opt) {
  return std::exp(log_discrete_charfn(A, B, m, part, xmin, u, opt));
}

Cumulants charfn_cumulants(const SupCbiParams& p, double h) {
  RiccatiOptions opt;
  opt.tol = 1e-14;
  opt.rtol = 1e-13;
  auto L = [&](double u) { return log_stationary_charfn(p, u, opt); };
  auto d1 = [&](double s) { return (L(s) - L(-s)) / (2 * s); };
  auto d2 = [&](double s) { return (L(s) + L(-s)) / (s * s); };  // L(0) = 0
  auto d3 = [&](double s) { return (L(2 * s) - 2.0 * L(s) + 2.0 * L(-s) - L(-2 * s)) / (2 * s * s * s); };
  auto d4 = [&](double s) { return (L(2 * s) - 4.0 * L(s) - 4.0 * L(-s) + L(-2 * s)) / (s * s * s * s); };
  auto rich = [](cplx coarse, cplx fine) { return (4.0 * fine - coarse) / 3.0; };
  Cumulants c;
  c.k1 = rich(d1(h), d1(0.5 * h)).imag();
  c.k2 = -rich(d2(h), d2(0.5 * h)).real();
  c.k3 = -rich(d3(h), d3(0.5 * h)).imag();
  c.k4 = rich(d4(h), d4(0.5 * h)).real();
  return c;
}

double riccati_sensitivity(const TemperedStableMeasure& m, double B, double tau, double h) {
  RiccatiOptions opt;
  opt.land = {tau};
  opt.tol = std::min(1e-10, h * 1e-8);
  auto plus = solve_riccati(m, B, h, opt);
  auto minus = solve_riccati(m, B, -h, opt);
  return (plus.phi(tau) - minus.phi(tau)).real() / (2 * h);
}

}  // namespace supcbi
