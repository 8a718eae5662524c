#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synlearn/data.hpp"
#include "synlearn/models.hpp"

namespace synlearn {

/// The general Bayesian target: prior plus loss terms over the learner's own
/// data and the synthetic data, each under its own loss function. Either
/// dataset may be empty.
struct PosteriorTarget {
  ModelSpec model;
  PriorSpec prior;
  LossSpec loss_real = LogLoss{};
  Dataset data_real;
  LossSpec loss_synth = LogLoss{};
  Dataset data_synth;
};

/// prior_log_density(theta) - sum of real losses - sum of synthetic losses.
double log_unnormalised_posterior(const PosteriorTarget& target, const Theta& theta);

/// Gradient of the log target in natural parameters; used by the HMC mode.
std::vector<double> log_posterior_gradient(const PosteriorTarget& target,
                                           const Theta& theta);

enum class SamplerKind { AdaptiveRandomWalk, Hmc };

struct McmcConfig {
  int chains = 4;
  int samples_per_chain = 4000;  // total iterations; the first `warmup` are discarded
  int warmup = 500;
  SamplerKind sampler = SamplerKind::AdaptiveRandomWalk;
  double target_accept = 0.35;  // 0.8 is the usual choice for HMC
  double hmc_step_size = 0.1;
  int hmc_leapfrog_steps = 16;
};

void validate(const McmcConfig& cfg);

struct PosteriorSamples {
  std::vector<std::vector<Theta>> draws;            // [chain][iteration]
  std::vector<std::vector<double>> log_posterior;   // matching log target values
  std::vector<double> rhat;                         // per parameter
  std::vector<double> acceptance_rate;              // per chain
  std::vector<int> divergences;                     // per chain (HMC only)
  std::vector<std::string> parameter_names;
  std::uint64_t seed = 0;

  std::size_t total_draws() const;
  /// Per-chain series of one coordinate in natural parameter space.
  std::vector<std::vector<double>> component(const ModelSpec& model, int index) const;
};

/// Samples the general Bayesian posterior. Chains use independent derived
/// streams and are assembled by chain index, so the result is a pure
/// function of (target, cfg, seed). sigma is sampled on the log scale with
/// the Jacobian correction; proposal scales (random walk) or the step size
/// (HMC dual averaging) adapt during warmup only.
PosteriorSamples sample_posterior(const PosteriorTarget& target, const McmcConfig& cfg,
                                  std::uint64_t seed);

struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int points = 200;
};

/// Brute-force posterior on a 2-d parameter grid, trapezoid-normalized.
/// Supports the Gaussian family (mu, sigma) and logistic regression with
/// d = 1 (alpha, theta1).
struct GridPosterior {
  AxisSpec axis0, axis1;
  std::vector<double> density;  // row-major, density[i0 * axis1.points + i1]
  std::array<double, 2> mean{};
  std::array<double, 2> sd{};
  double boundary_mass = 0.0;

  double at(int i0, int i1) const { return density[i0 * axis1.points + i1]; }
};

GridPosterior grid_posterior(const PosteriorTarget& target, const AxisSpec& axis0,
                             const AxisSpec& axis1);

}  // namespace synlearn
