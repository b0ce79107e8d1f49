#pragma once

#include <optional>
#include <vector>

#include "supcbi/random.hpp"

namespace supcbi {

// Gamma density over reversion speeds: pi(rho) = rho^(beta-1) exp(-rho/eta) / (Gamma(beta) eta^beta).
struct GammaMixing {
  double eta;   // 1/h
  double beta;  // > 1

  GammaMixing(double eta, double beta);
};

// Finite Markovian embedding. edges has n+1 entries (edges[0] = 0, edges[n] = +inf).
struct DiscretePartition {
  std::vector<double> edges;
  std::vector<double> speeds;
  std::vector<double> weights;

  std::size_t size() const { return speeds.size(); }
};

struct PartitionConstants {
  double cbar;
  double gamma;
};

// cbar defaults to the mixing scale eta, gamma to 0.3.
PartitionConstants default_partition_constants(const GammaMixing& mix);

double mixing_density(const GammaMixing& mix, double rho);

// R = int pi(rho)/rho drho = 1 / (eta (beta - 1))
double inverse_mean(const GammaMixing& mix);

// One draw from the density proportional to pi(rho)/rho, i.e. Gamma(beta-1, scale eta).
double sample_speed(const GammaMixing& mix, RandomStream& rng);

DiscretePartition build_partition(const GammaMixing& mix, int n, std::optional<double> cbar = std::nullopt,
                                  std::optional<double> gamma = std::nullopt);

// Checks the partition invariants, throws InvalidArgument.
void validate_partition(const DiscretePartition& part);

// R_n = sum c_i / rho_i
double discrete_inverse_mean(const DiscretePartition& part);

// d_n = |R_n - R|
double embedding_gap(const GammaMixing& mix, const DiscretePartition& part);

}  // namespace supcbi
