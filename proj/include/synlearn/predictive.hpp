#pragma once

#include <vector>

#include "synlearn/data.hpp"
#include "synlearn/inference.hpp"
#include "synlearn/models.hpp"
#include "synlearn/rng.hpp"

namespace synlearn {

/// Posterior predictive: the draw-averaged model density. Values are carried
/// in log space internally so deep tails do not underflow.
class PredictiveModel {
 public:
  PredictiveModel(ModelSpec model, std::vector<Theta> draws);

  /// Pools chains and thins to at most max_draws (0 keeps everything).
  static PredictiveModel from_posterior(const ModelSpec& model,
                                        const PosteriorSamples& samples,
                                        std::size_t max_draws = 0);

  const ModelSpec& model() const { return model_; }
  const std::vector<Theta>& draws() const { return draws_; }

  /// log of the mean model density (or label probability) at x.
  double log_predictive(const Observation& x) const;
  double predictive_density(const Observation& x) const;

  /// Logistic models: predictive probability of label 1 at the feature point.
  double prob_label1(const std::vector<double>& features) const;

  /// One draw from the predictive mixture (scalar models only).
  double sample_scalar(Rng& rng) const;

 private:
  ModelSpec model_;
  std::vector<Theta> draws_;
};

/// Uniform mixture of predictives fitted on different synthetic realisations.
class PredictiveEnsemble {
 public:
  explicit PredictiveEnsemble(std::vector<PredictiveModel> members);

  const std::vector<PredictiveModel>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

  double averaged_log_predictive(const Observation& x) const;
  double averaged_predictive(const Observation& x) const;
  double averaged_prob_label1(const std::vector<double>& features) const;
  double sample_scalar(Rng& rng) const;

 private:
  std::vector<PredictiveModel> members_;
};

/// Splits a pool of M realised synthetic observations into B member
/// subsets of size m: disjoint when M >= B*m, otherwise resampled with
/// replacement.
std::vector<Dataset> ensemble_subsets(const Dataset& pool, std::size_t m, std::size_t b,
                                      Rng& rng);

}  // namespace synlearn
