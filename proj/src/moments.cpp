#include "supcbi/moments.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "supcbi/errors.hpp"

namespace supcbi {

namespace {

double checked_D(double B, const TemperedStableMeasure& m) {
  double d = 1.0 - B * levy_moment(m, 1);
  if (!(d > 0.0)) throw InvalidArgument("stationarity violated: D = 1 - B*M1 = " + std::to_string(d) + " <= 0");
  return d;
}

}  // namespace

SummaryStats stats_from_cumulants(const Cumulants& c) {
  SummaryStats s;
  s.ave = c.k1;
  s.std = std::sqrt(std::max(c.k2, 0.0));
  if (c.k2 > 0.0) {
    s.skew = c.k3 / std::pow(c.k2, 1.5);
    s.kurt = c.k4 / (c.k2 * c.k2);
  } else {
    s.skew = s.kurt = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

double SupCbiParams::D() const { return 1.0 - B * levy_moment(measure, 1); }
double SupCbiParams::U() const { return D() * mixing.eta; }
double SupCbiParams::R() const { return inverse_mean(mixing); }

void SupCbiParams::validate() const {
  if (!(A >= 0.0) || !std::isfinite(A)) throw InvalidArgument("A: must be finite and >= 0");
  if (!(B >= 0.0) || !std::isfinite(B)) throw InvalidArgument("B: must be finite and >= 0");
  if (A == 0.0 && B == 0.0) throw InvalidArgument("A, B: must not both be zero");
  if (!(xmin >= 0.0) || !std::isfinite(xmin)) throw InvalidArgument("xmin: must be finite and >= 0");
  double d = D();
  if (!(d > 0.0 && d <= 1.0)) throw InvalidArgument("D: 1 - B*M1 = " + std::to_string(d) + " outside (0, 1]");
}

double pinned_B(double D, const TemperedStableMeasure& m) {
  if (!(D > 0.0 && D <= 1.0)) throw InvalidArgument("D: must lie in (0, 1]");
  return (1.0 - D) / levy_moment(m, 1);
}

SupCbiParams params_with_D(double A, double D, const TemperedStableMeasure& m, const GammaMixing& mix,
                           double xmin) {
  return SupCbiParams{A, pinned_B(D, m), m, mix, xmin};
}

Cumulants stationary_cumulants(double A, double B, const TemperedStableMeasure& m, double r, double xmin) {
  double d = checked_D(B, m);
  double m1 = levy_moment(m, 1), m2 = levy_moment(m, 2), m3 = levy_moment(m, 3), m4 = levy_moment(m, 4);
  Cumulants c;
  c.k1 = xmin + A * m1 * r / d;
  c.k2 = A * m2 * r / (2.0 * d * d);
  c.k3 = A * r * (m3 / (3.0 * d * d) + B * m2 * m2 / (2.0 * d * d * d));
  c.k4 = A * r / (4.0 * d) * (m4 / d + 4.0 * B * m2 * m3 / (d * d) + 3.0 * B * B * m2 * m2 * m2 / (d * d * d));
  return c;
}

SummaryStats cbi_stats(double A, double B, const TemperedStableMeasure& m, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("cbi_stats: rho must be > 0");
  return stats_from_cumulants(stationary_cumulants(A, B, m, 1.0 / rho, 0.0));
}

double cbi_acf(double rho, double D, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("cbi_acf: s must be >= 0");
  return std::exp(-rho * D * s);
}

Cumulants supcbi_cumulants(const SupCbiParams& p) {
  p.validate();
  return stationary_cumulants(p.A, p.B, p.measure, p.R(), p.xmin);
}

SummaryStats supcbi_stats(const SupCbiParams& p) { return stats_from_cumulants(supcbi_cumulants(p)); }

SummaryStats discrete_supcbi_stats(double A, double B, const TemperedStableMeasure& m,
                                   const DiscretePartition& part, double xmin) {
  return stats_from_cumulants(stationary_cumulants(A, B, m, discrete_inverse_mean(part), xmin));
}

double supcbi_acf(const SupCbiParams& p, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("supcbi_acf: s must be >= 0");
  return std::pow(1.0 + p.U() * s, 1.0 - p.mixing.beta);
}

double supcbi_acf_quadrature(const SupCbiParams& p, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("supcbi_acf: s must be >= 0");
  // pi(rho)/(R rho) is the Gamma(beta-1, eta) density; with t = (rho/eta)^(beta-1) the
  // weight becomes dt / Gamma(beta) and the endpoint singularity disappears.
  const double k = p.mixing.beta - 1.0;
  const double rate = p.mixing.eta * p.D() * s;
  double xcut = boost::math::gamma_q_inv(k, 1e-12);
  double tcut = std::pow(xcut, k);
  auto f = [&](double t) {
    double x = std::pow(t, 1.0 / k);
    return std::exp(-x * (1.0 + rate));
  };
  double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, tcut, 20, 1e-13);
  return val / std::tgamma(p.mixing.beta);
}

double discrete_supcbi_acf(const DiscretePartition& part, double D, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("discrete_supcbi_acf: s must be >= 0");
  double num = 0.0;
  for (std::size_t i = 0; i < part.size(); ++i)
    num += part.weights[i] / part.speeds[i] * std::exp(-part.speeds[i] * D * s);
  return num / discrete_inverse_mean(part);
}

}  // namespace supcbi
