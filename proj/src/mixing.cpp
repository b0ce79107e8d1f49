#include "supcbi/mixing.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "supcbi/errors.hpp"

namespace supcbi {

GammaMixing::GammaMixing(double eta_, double beta_) : eta(eta_), beta(beta_) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("mixing: eta must be positive and finite");
  if (!(beta > 1.0) || !std::isfinite(beta)) throw InvalidArgument("mixing: beta must be > 1");
}

PartitionConstants default_partition_constants(const GammaMixing& mix) { return {mix.eta, 0.3}; }

double mixing_density(const GammaMixing& mix, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("mixing_density: rho must be > 0");
  double x = rho / mix.eta;
  return std::exp((mix.beta - 1.0) * std::log(x) - x - std::lgamma(mix.beta)) / mix.eta;
}

double inverse_mean(const GammaMixing& mix) { return 1.0 / (mix.eta * (mix.beta - 1.0)); }

double sample_speed(const GammaMixing& mix, RandomStream& rng) { return rng.gamma(mix.beta - 1.0, mix.eta); }

DiscretePartition build_partition(const GammaMixing& mix, int n, std::optional<double> cbar,
                                  std::optional<double> gamma) {
  if (n < 2) throw InvalidArgument("build_partition: n must be >= 2");
  auto def = default_partition_constants(mix);
  double cb = cbar.value_or(def.cbar);
  double gm = gamma.value_or(def.gamma);
  if (!(cb > 0.0)) throw InvalidArgument("build_partition: cbar must be > 0");
  if (!(gm > 0.0 && gm < 1.0)) throw InvalidArgument("build_partition: gamma must lie in (0,1)");

  const double h = cb * std::pow(static_cast<double>(n), -gm);
  const double mode = (mix.beta - 1.0) * mix.eta;
  DiscretePartition p;
  p.edges.resize(n + 1);
  p.speeds.resize(n);
  p.weights.resize(n);
  for (int i = 0; i < n; ++i) p.edges[i] = h * i;
  p.edges[n] = std::numeric_limits<double>::infinity();

  // Lower tail from P, upper tail from Q, so each cell keeps full relative precision.
  auto lower = [&](double x) { return boost::math::gamma_p(mix.beta, x / mix.eta); };
  auto upper = [&](double x) { return boost::math::gamma_q(mix.beta, x / mix.eta); };
  for (int i = 1; i < n; ++i) {
    double a = p.edges[i - 1], b = p.edges[i];
    p.weights[i - 1] = (b <= mode) ? lower(b) - lower(a) : upper(a) - upper(b);
    p.speeds[i - 1] = 0.5 * (a + b);
  }
  p.weights[n - 1] = upper(p.edges[n - 1]);
  p.speeds[n - 1] = p.edges[n - 1];
  return p;
}

void validate_partition(const DiscretePartition& p) {
  std::size_t n = p.speeds.size();
  if (n == 0 || p.weights.size() != n) throw InvalidArgument("partition: speeds/weights size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p.speeds[i] > 0.0)) throw InvalidArgument("partition: speeds must be > 0");
    if (!(p.weights[i] >= 0.0)) throw InvalidArgument("partition: weights must be >= 0");
    if (i > 0 && !(p.speeds[i] > p.speeds[i - 1])) throw InvalidArgument("partition: speeds must increase");
    sum += p.weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("partition: weights must sum to 1");
}

double discrete_inverse_mean(const DiscretePartition& p) {
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) r += p.weights[i] / p.speeds[i];
  return r;
}

double embedding_gap(const GammaMixing& mix, const DiscretePartition& part) {
  return std::abs(discrete_inverse_mean(part) - inverse_mean(mix));
}

}  // namespace supcbi
