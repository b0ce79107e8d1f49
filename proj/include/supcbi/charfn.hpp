#pragma once

#include <complex>
#include <vector>

#include "supcbi/levy.hpp"
#include "supcbi/mixing.hpp"
#include "supcbi/moments.hpp"

namespace supcbi {

struct RiccatiOptions {
  double tol = 1e-10;   // stop once |phi| < tol; absolute error target tol * 1e-2
  double rtol = 1e-10;  // relative error target
  double max_tau = 1e7;
  std::vector<double> land;  // scaled times the step grid must hit exactly
};

// Solution of phi' = -phi - i B psi(phi), phi(0) = u, in the speed-free time tau = rho t.
struct RiccatiTrajectory {
  std::vector<double> taus;
  std::vector<double> f;  // Re phi
  std::vector<double> g;  // Im phi
  // time derivatives of phi at the nodes (dense output)
  std::vector<std::complex<double>> dphi;
  std::vector<std::complex<double>> ddphi;
  // int_0^inf psi(phi_tau) dtau, including the linearized tail beyond the last node
  std::complex<double> psi_integral;

  std::complex<double> phi(double tau) const;
  std::complex<double> dphi_at(double tau) const;
};

RiccatiTrajectory solve_riccati(const TemperedStableMeasure& m, double B, double u,
                                const RiccatiOptions& opt = {});
RiccatiTrajectory solve_riccati(const TemperedStableMeasure& m, double B, double u, double tol);

// Right-hand side of the Riccati equation, exposed for residual checks.
std::complex<double> riccati_rhs(const TemperedStableMeasure& m, double B, std::complex<double> phi);

// Log C(u) = i u xmin + A R int psi(phi_tau) dtau
std::complex<double> log_stationary_charfn(const SupCbiParams& p, double u, const RiccatiOptions& opt = {});
std::complex<double> stationary_charfn(const SupCbiParams& p, double u, const RiccatiOptions& opt = {});
std::complex<double> stationary_charfn(const SupCbiParams& p, double u, double tol);

std::complex<double> log_discrete_charfn(double A, double B, const TemperedStableMeasure& m,
                                         const DiscretePartition& part, double xmin, double u,
                                         const RiccatiOptions& opt = {});
std::complex<double> discrete_charfn(double A, double B, const TemperedStableMeasure& m,
                                     const DiscretePartition& part, double xmin, double u,
                                     const RiccatiOptions& opt = {});

// Cumulants from Richardson-extrapolated central differences of Log C at 0.
Cumulants charfn_cumulants(const SupCbiParams& p, double h = 1e-3);

// (phi_tau(h) - phi_tau(-h)) / (2h), real part; the linearization predicts exp(-D tau).
double riccati_sensitivity(const TemperedStableMeasure& m, double B, double tau, double h = 1e-5);

}  // namespace supcbi
