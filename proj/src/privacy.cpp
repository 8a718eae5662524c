#include "synlearn/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace synlearn {

void validate(const LaplaceMechanism& mech) {
  if (!(mech.upper > mech.lower)) {
    throw std::invalid_argument("LaplaceMechanism: upper must exceed lower");
  }
  if (!(mech.lambda > 0.0)) {
    throw std::invalid_argument("LaplaceMechanism: lambda must be positive");
  }
}

double epsilon_of(const LaplaceMechanism& mech) {
  validate(mech);
  return (mech.upper - mech.lower) / mech.lambda;
}

Dataset privatise(const LaplaceMechanism& mech, const Dataset& real_data,
                  std::uint64_t seed) {
  validate(mech);
  if (real_data.task() != Task::Gaussian) {
    throw std::invalid_argument("privatise: mechanism is defined for scalar data only");
  }
  Rng rng(seed);
  Dataset out(Task::Gaussian, Provenance::Synthetic);
  for (const auto& o : real_data.observations()) {
    if (!std::isfinite(o.value)) {
      throw std::invalid_argument("privatise: non-finite input value");
    }
    const double clamped = std::clamp(o.value, mech.lower, mech.upper);
    out.push_back(Observation::scalar(clamped + rng.laplace(mech.lambda)));
  }
  return out;
}

namespace {

void check_adjacent(const std::vector<double>& x, const std::vector<double>& x_adj) {
  if (x.size() != x_adj.size()) {
    throw std::invalid_argument("dp ratio: datasets must be equally sized");
  }
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != x_adj[i]) ++diffs;
  }
  if (diffs > 1) {
    throw std::invalid_argument("dp ratio: datasets differ in more than one entry");
  }
}

}  // namespace

double dp_log_ratio(const LaplaceMechanism& mech, const std::vector<double>& x,
                    const std::vector<double>& x_adj, const std::vector<double>& z) {
  validate(mech);
  check_adjacent(x, x_adj);
  if (z.size() != x.size()) {
    throw std::invalid_argument("dp ratio: output size must match input size");
  }
  double log_ratio = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ci = std::clamp(x[i], mech.lower, mech.upper);
    const double cj = std::clamp(x_adj[i], mech.lower, mech.upper);
    log_ratio += (std::abs(z[i] - cj) - std::abs(z[i] - ci)) / mech.lambda;
  }
  return log_ratio;
}

DpRatioCheck dp_ratio_check(const LaplaceMechanism& mech, const std::vector<double>& x,
                            const std::vector<double>& x_adj, int grid_points) {
  validate(mech);
  check_adjacent(x, x_adj);
  if (grid_points < 2) {
    throw std::invalid_argument("dp_ratio_check: need at least 2 grid points");
  }
  std::size_t changed = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != x_adj[i]) changed = i;
  }
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    z[i] = std::clamp(x[i], mech.lower, mech.upper);
  }
  const double span = 12.0 * mech.lambda;
  const double lo = mech.lower - span;
  const double hi = mech.upper + span;
  DpRatioCheck result;
  result.bound = epsilon_of(mech);
  for (int g = 0; g < grid_points; ++g) {
    z[changed] = lo + (hi - lo) * g / (grid_points - 1);
    const double r = std::abs(dp_log_ratio(mech, x, x_adj, z));
    result.sup_abs_log_ratio = std::max(result.sup_abs_log_ratio, r);
  }
  result.holds = result.sup_abs_log_ratio <= result.bound + 1e-12;
  return result;
}

}  // namespace synlearn
