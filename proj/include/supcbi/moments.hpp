#pragma once

#include "supcbi/levy.hpp"
#include "supcbi/mixing.hpp"

namespace supcbi {

// kurt is the excess kurtosis everywhere.
struct SummaryStats {
  double ave = 0;
  double std = 0;
  double skew = 0;
  double kurt = 0;
};

struct Cumulants {
  double k1 = 0, k2 = 0, k3 = 0, k4 = 0;
};

SummaryStats stats_from_cumulants(const Cumulants& c);

struct SupCbiParams {
  double A;  // m^(3 alpha) s^-alpha / h
  double B;  // m^(3(alpha-1)) s^-(alpha-1) / h
  TemperedStableMeasure measure;
  GammaMixing mixing;
  double xmin;  // m^3/s

  double D() const;  // 1 - B M1
  double U() const;  // D eta
  double R() const;  // inverse mean of the mixing

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

// B chosen so that 1 - B M1 = D exactly.
SupCbiParams params_with_D(double A, double D, const TemperedStableMeasure& m, const GammaMixing& mix,
                           double xmin);
double pinned_B(double D, const TemperedStableMeasure& m);

// Stationary cumulants of xmin + (superposition with inverse-mean factor r).
Cumulants stationary_cumulants(double A, double B, const TemperedStableMeasure& m, double r, double xmin);

SummaryStats cbi_stats(double A, double B, const TemperedStableMeasure& m, double rho);
double cbi_acf(double rho, double D, double s);

Cumulants supcbi_cumulants(const SupCbiParams& p);
SummaryStats supcbi_stats(const SupCbiParams& p);
SummaryStats discrete_supcbi_stats(double A, double B, const TemperedStableMeasure& m,
                                   const DiscretePartition& part, double xmin);

// (1 + U s)^(1 - beta)
double supcbi_acf(const SupCbiParams& p, double s);
// The same correlation from the mixture integral (1/R) int pi(rho)/rho exp(-rho D s) drho.
double supcbi_acf_quadrature(const SupCbiParams& p, double s);
double discrete_supcbi_acf(const DiscretePartition& part, double D, double s);

}  // namespace supcbi
