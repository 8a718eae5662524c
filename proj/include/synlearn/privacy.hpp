#pragma once

#include <cstdint>
#include <vector>

#include "synlearn/data.hpp"
#include "synlearn/rng.hpp"

namespace synlearn {

/// Truncated Laplace mechanism: clamp to [lower, upper], then add
/// Laplace(0, lambda) noise. Gives (epsilon, 0)-differential privacy with
/// epsilon = (upper - lower) / lambda.
struct LaplaceMechanism {
  double lower = -3.0;
  double upper = 3.0;
  double lambda = 1.0;
};

void validate(const LaplaceMechanism& mech);

double epsilon_of(const LaplaceMechanism& mech);

/// Privatises a scalar dataset: one output per input (never redacts),
/// z_i = clamp(x_i) + Laplace(0, lambda) drawn from the seeded stream.
/// The output length always equals the input length; requesting more
/// synthetic rows than real rows is the caller's error (m <= n).
Dataset privatise(const LaplaceMechanism& mech, const Dataset& real_data,
                  std::uint64_t seed);

/// Analytic log-density ratio of the mechanism's output distribution at z
/// for two datasets differing in exactly one entry.
double dp_log_ratio(const LaplaceMechanism& mech, const std::vector<double>& x,
                    const std::vector<double>& x_adj, const std::vector<double>& z);

struct DpRatioCheck {
  double sup_abs_log_ratio = 0.0;
  double bound = 0.0;  // epsilon of the mechanism
  bool holds = false;
};

/// Sweeps the changed coordinate over a z grid of `grid_points` values and
/// verifies the privacy bound on the analytic ratio.
DpRatioCheck dp_ratio_check(const LaplaceMechanism& mech, const std::vector<double>& x,
                            const std::vector<double>& x_adj, int grid_points);

}  // namespace synlearn
