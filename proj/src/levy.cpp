#include "supcbi/levy.hpp"

#include <cmath>
#include <numbers>

#include "supcbi/errors.hpp"

namespace supcbi {

namespace {

using cplx = std::complex<double>;

// log(1 + w) and exp(v) - 1 without cancellation near zero.
cplx log1p_c(cplx w) {
  double x = w.real(), y = w.imag();
  return {0.5 * std::log1p(2.0 * x + x * x + y * y), std::atan2(y, 1.0 + x)};
}

cplx expm1_c(cplx v) {
  double x = v.real(), y = v.imag();
  double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

const double kLog10 = std::log(10.0);

}  // namespace

TemperedStableMeasure::TemperedStableMeasure(double b_, double alpha_) : b(b_), alpha(alpha_) {
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("measure: b must be positive and finite");
  if (!(alpha < 1.0) || !std::isfinite(alpha)) throw InvalidArgument("measure: alpha must be < 1");
}

double levy_moment(const TemperedStableMeasure& m, int k) {
  if (k < 1) throw InvalidArgument("levy_moment: k must be >= 1");
  return std::pow(m.b, m.alpha - k) * std::tgamma(k - m.alpha);
}

cplx levy_exponent(const TemperedStableMeasure& m, cplx phi) {
  if (!(phi.imag() > -m.b)) throw DomainError("levy_exponent: Im(phi) <= -b, integral diverges");
  cplx l = log1p_c(cplx(phi.imag(), -phi.real()) / m.b);  // log(1 - i phi / b)
  if (m.alpha == 0.0) return -l;
  return std::tgamma(-m.alpha) * std::pow(m.b, m.alpha) * expm1_c(m.alpha * l);
}

cplx levy_exponent_derivative(const TemperedStableMeasure& m, cplx phi) {
  if (!(phi.imag() > -m.b)) throw DomainError("levy_exponent: Im(phi) <= -b, integral diverges");
  cplx l = log1p_c(cplx(phi.imag(), -phi.real()) / m.b);
  return cplx(0.0, std::tgamma(1.0 - m.alpha) * std::pow(m.b, m.alpha - 1.0)) * std::exp((m.alpha - 1.0) * l);
}

IncrementSampler::IncrementSampler(const TemperedStableMeasure& m) : m_(m) {
  if (m.alpha > 0.0) {
    stable_coef_ = std::tgamma(1.0 - m.alpha) / m.alpha;
    b_alpha_ = std::pow(m.b, m.alpha);
  } else if (m.alpha < 0.0) {
    cp_rate_ = std::pow(m.b, m.alpha) * std::tgamma(-m.alpha);
  }
}

double IncrementSampler::unit_stable(RandomStream& rng) const {
  // Kanter's representation
  const double a = m_.alpha;
  double u = std::numbers::pi * rng.uniform_open();
  double e = rng.exponential();
  double ls = std::log(std::sin(a * u)) - std::log(std::sin(u)) / a +
              (1.0 - a) / a * (std::log(std::sin((1.0 - a) * u)) - std::log(e));
  return std::exp(ls);
}

double IncrementSampler::stable_scale(double clock) const {
  return std::pow(clock * stable_coef_, 1.0 / m_.alpha);
}

double IncrementSampler::acceptance(double clock) const {
  return std::exp(-clock * stable_coef_ * b_alpha_);
}

double IncrementSampler::sample_clock(double clock, RandomStream& rng) const {
  const double a = m_.alpha;
  if (a > 0.0) {
    if (clock * stable_coef_ * b_alpha_ > kLog10)
      return sample_clock(0.5 * clock, rng) + sample_clock(0.5 * clock, rng);
    const double scale = stable_scale(clock);
    for (;;) {
      double s = scale * unit_stable(rng);
      if (rng.uniform_open() < std::exp(-m_.b * s)) return s;
    }
  }
  if (a == 0.0) return rng.gamma(clock, 1.0 / m_.b);
  std::uint64_t n = rng.poisson(clock * cp_rate_);
  if (n == 0) return 0.0;
  return rng.gamma(-a * static_cast<double>(n), 1.0 / m_.b);
}

double IncrementSampler::operator()(double intensity, double dt, RandomStream& rng) const {
  if (!(intensity >= 0.0) || !std::isfinite(intensity))
    throw InvalidArgument("sample_increment: intensity must be finite and >= 0");
  if (!(dt > 0.0)) throw InvalidArgument("sample_increment: dt must be > 0");
  if (intensity == 0.0) return 0.0;
  return sample_clock(intensity * dt, rng);
}

double sample_increment(const TemperedStableMeasure& m, double intensity, double dt, RandomStream& rng) {
  return IncrementSampler(m)(intensity, dt, rng);
}

}  // namespace supcbi
