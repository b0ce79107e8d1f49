#pragma once

#include <functional>
#include <vector>

namespace supcbi {

struct NelderMeadOptions {
  double initial_step = 0.5;
  double ftol = 1e-15;   // relative spread of simplex values
  double fatol = 1e-30;  // absolute spread of simplex values
  double xtol = 1e-10;   // simplex diameter
  int max_evals = 20000;
  int restarts = 3;      // fresh simplices around the incumbent once converged
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0;
  int evals = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Non-finite objective values are treated as +inf.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt = {});

}  // namespace supcbi
