#pragma once

#include "supcbi/moments.hpp"

namespace fixtures {

// Fitted parameters of the two gauging stations (D = 0.7 for both, eta = U / D).
inline supcbi::SupCbiParams station2() {
  return {0.0116, 0.0204, supcbi::TemperedStableMeasure(0.0176, 0.456), supcbi::GammaMixing(0.0676 / 0.7, 2.04),
          0.06};
}

inline supcbi::SupCbiParams station1() {
  return {0.017, 0.0244, supcbi::TemperedStableMeasure(0.00831, 0.72), supcbi::GammaMixing(0.108 / 0.7, 1.75), 0.0};
}

// Station 2 D sweep: D, alpha, b, A, B and the four relative errors plus Er^2.
struct DColumn {
  double D, alpha, b, A, B;
  double re[4];
  double er2;
};

inline const DColumn kDSweep[6] = {
    {1.0, 0.286, 0.0161, 6.98e-3, 0.0, {8.97e-3, 8.67e-3, 8.08e-2, 3.18e-2}, 7.69e-3},
    {0.9, 0.340, 0.0166, 8.30e-3, 4.89e-3, {8.41e-3, 8.09e-3, 7.73e-2, 3.07e-2}, 7.05e-3},
    {0.8, 0.396, 0.0171, 9.82e-3, 1.16e-2, {7.91e-3, 7.61e-3, 7.37e-2, 2.95e-2}, 6.43e-3},
    {0.7, 0.456, 0.0176, 1.16e-2, 2.04e-2, {7.42e-3, 7.14e-3, 7.02e-2, 2.82e-2}, 5.82e-3},
    {0.6, 0.519, 0.0182, 1.34e-2, 3.16e-2, {6.95e-3, 6.69e-3, 6.65e-2, 2.69e-2}, 5.24e-3},
    {0.5, 0.587, 0.0188, 1.53e-2, 4.51e-2, {6.49e-3, 6.25e-3, 6.28e-2, 2.56e-2}, 4.68e-3},
};

// Station 2 empirical statistics of the hourly record.
inline supcbi::SummaryStats station2_empirical() { return {2.504, 7.258, 10.53, 161.7}; }

// Station 2 parameters refit at a given column of the D sweep (U fixed by the ACF).
inline supcbi::SupCbiParams station2_at(const DColumn& c) {
  return {c.A, c.B, supcbi::TemperedStableMeasure(c.b, c.alpha), supcbi::GammaMixing(0.0676 / c.D, 2.04), 0.06};
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace fixtures
