#pragma once

#include <complex>

#include "supcbi/random.hpp"

namespace supcbi {

// Levy measure nu(dz) = exp(-b z) z^-(alpha+1) dz on z > 0.
struct TemperedStableMeasure {
  double b;      // tempering rate, s/m^3
  double alpha;  // stability index

  TemperedStableMeasure(double b, double alpha);
};

// M_k = int z^k nu(dz) = b^(alpha-k) Gamma(k-alpha)
double levy_moment(const TemperedStableMeasure& m, int k);

// psi(phi) = int (exp(i phi z) - 1) nu(dz), defined for Im(phi) > -b.
std::complex<double> levy_exponent(const TemperedStableMeasure& m, std::complex<double> phi);
// d psi / d phi = i Gamma(1-alpha) (b - i phi)^(alpha-1)
std::complex<double> levy_exponent_derivative(const TemperedStableMeasure& m, std::complex<double> phi);

// Increment sampler with the per-measure constants cached. The Levy measure of one
// increment is intensity * dt * nu.
class IncrementSampler {
 public:
  explicit IncrementSampler(const TemperedStableMeasure& m);

  double operator()(double intensity, double dt, RandomStream& rng) const;

  // Pieces used by the coupled coarse/fine stepper (alpha in (0,1) only).
  // unit_stable() has Laplace transform exp(-s^alpha).
  double unit_stable(RandomStream& rng) const;
  // Scale turning a unit stable draw into one with Levy measure clock * z^-(alpha+1) dz.
  double stable_scale(double clock) const;
  // Expected acceptance of the tilting step for this clock.
  double acceptance(double clock) const;

  const TemperedStableMeasure& measure() const { return m_; }

 private:
  double sample_clock(double clock, RandomStream& rng) const;

  TemperedStableMeasure m_;
  double stable_coef_ = 0;  // Gamma(1-alpha)/alpha
  double b_alpha_ = 0;      // b^alpha
  double cp_rate_ = 0;      // b^alpha Gamma(-alpha), alpha < 0
};

double sample_increment(const TemperedStableMeasure& m, double intensity, double dt, RandomStream& rng);

}  // namespace supcbi
