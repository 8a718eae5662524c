#pragma once

#include <functional>
#include <vector>

#include "synlearn/data.hpp"

namespace synlearn {

/// The target distribution used to score predictives. Simulated experiments
/// know it in closed form; real-data experiments only have a test sample.
struct KnownGaussian {
  double mu0 = 0.0;
  double sigma0 = 1.0;

  double log_density(double x) const;
};

struct LogScoreResult {
  double value = 0.0;       // mean negative log predictive (lower is better)
  int zero_density = 0;     // test points with vanishing predictive density
  bool flagged() const { return zero_density > 0; }
};

/// Mean negative log predictive density over the test set.
LogScoreResult log_score(const std::function<double(const Observation&)>& log_predictive,
                         const Dataset& test);

struct QuadSpec {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};

/// Default quadrature window for kld_to_f0: mu +- 10 sigma at step sigma/500.
QuadSpec default_kld_quad(const KnownGaussian& f0);

struct KldResult {
  double value = 0.0;
  double support_deficit = 0.0;  // f0 mass where the predictive vanishes
  bool flagged = false;
};

/// KL divergence of the predictive from a known Gaussian, by trapezoid
/// quadrature of f0 * (log f0 - log p). Regions where the predictive has no
/// support are excluded and reported as deficit mass instead of returning
/// +inf, so truncated-support predictives stay comparable.
KldResult kld_to_f0(const KnownGaussian& f0,
                    const std::function<double(double)>& log_predictive_at,
                    const QuadSpec& quad);

/// 1-d Wasserstein-1 distance between empirical samples. Equal sizes reduce
/// to the mean absolute difference of sorted samples; unequal sizes use the
/// exact quantile-function integral.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Pairwise AUROC estimator; ties between scores count 1/2.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace synlearn
