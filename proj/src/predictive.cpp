#include "synlearn/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace synlearn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

PredictiveModel::PredictiveModel(ModelSpec model, std::vector<Theta> draws)
    : model_(std::move(model)), draws_(std::move(draws)) {
  if (draws_.empty()) {
    throw std::invalid_argument("PredictiveModel: needs at least one draw");
  }
}

PredictiveModel PredictiveModel::from_posterior(const ModelSpec& model,
                                                const PosteriorSamples& samples,
                                                std::size_t max_draws) {
  std::vector<Theta> pooled;
  pooled.reserve(samples.total_draws());
  for (const auto& chain : samples.draws) {
    pooled.insert(pooled.end(), chain.begin(), chain.end());
  }
  if (max_draws > 0 && pooled.size() > max_draws) {
    std::vector<Theta> thinned;
    thinned.reserve(max_draws);
    const double stride = static_cast<double>(pooled.size()) / max_draws;
    for (std::size_t i = 0; i < max_draws; ++i) {
      thinned.push_back(pooled[static_cast<std::size_t>(i * stride)]);
    }
    pooled = std::move(thinned);
  }
  return PredictiveModel(model, std::move(pooled));
}

double PredictiveModel::log_predictive(const Observation& x) const {
  std::vector<double> lps(draws_.size());
  for (std::size_t s = 0; s < draws_.size(); ++s) {
    lps[s] = log_density(model_, draws_[s], x);
  }
  const double lse = logsumexp(lps);
  return lse == kNegInf ? kNegInf : lse - std::log(static_cast<double>(draws_.size()));
}

double PredictiveModel::predictive_density(const Observation& x) const {
  return std::exp(log_predictive(x));
}

double PredictiveModel::prob_label1(const std::vector<double>& features) const {
  if (!std::holds_alternative<LogisticRegression>(model_)) {
    throw std::logic_error("prob_label1: not a logistic model");
  }
  Observation o = Observation::labelled(features, 1);
  double acc = 0.0;
  for (const auto& theta : draws_) {
    acc += std::exp(log_density(model_, theta, o));
  }
  return acc / draws_.size();
}

double PredictiveModel::sample_scalar(Rng& rng) const {
  const Theta& theta = draws_[rng.uniform_index(draws_.size())];
  if (const auto* tg = std::get_if<TruncatedGaussian>(&model_)) {
    const double k = tg->halfwidth_sigmas;
    const double lo = normal_cdf(-k);
    const double hi = normal_cdf(k);
    const double u = lo + (hi - lo) * rng.uniform01();
    return theta.mu + theta.sigma * normal_quantile(u);
  }
  if (const auto* nl = std::get_if<NormalLaplaceConvolution>(&model_)) {
    return theta.mu + theta.sigma * rng.normal() + rng.laplace(nl->lambda);
  }
  throw std::logic_error("sample_scalar: not a scalar model");
}

PredictiveEnsemble::PredictiveEnsemble(std::vector<PredictiveModel> members)
    : members_(std::move(members)) {
  if (members_.empty()) {
    throw std::invalid_argument("PredictiveEnsemble: needs at least one member");
  }
  for (const auto& m : members_) {
    if (m.model().index() != members_.front().model().index()) {
      throw std::invalid_argument("PredictiveEnsemble: members must share the model");
    }
  }
}

double PredictiveEnsemble::averaged_log_predictive(const Observation& x) const {
  std::vector<double> lps(members_.size());
  for (std::size_t b = 0; b < members_.size(); ++b) {
    lps[b] = members_[b].log_predictive(x);
  }
  const double lse = logsumexp(lps);
  return lse == kNegInf ? kNegInf : lse - std::log(static_cast<double>(members_.size()));
}

double PredictiveEnsemble::averaged_predictive(const Observation& x) const {
  return std::exp(averaged_log_predictive(x));
}

double PredictiveEnsemble::averaged_prob_label1(const std::vector<double>& features) const {
  double acc = 0.0;
  for (const auto& m : members_) acc += m.prob_label1(features);
  return acc / members_.size();
}

double PredictiveEnsemble::sample_scalar(Rng& rng) const {
  return members_[rng.uniform_index(members_.size())].sample_scalar(rng);
}

std::vector<Dataset> ensemble_subsets(const Dataset& pool, std::size_t m, std::size_t b,
                                      Rng& rng) {
  if (b == 0) throw std::invalid_argument("ensemble_subsets: b must be >= 1");
  if (m > pool.size()) {
    throw std::invalid_argument("ensemble_subsets: subset size exceeds pool");
  }
  std::vector<Dataset> out;
  out.reserve(b);
  const bool disjoint = pool.size() >= b * m;
  if (disjoint) {
    const auto perm = rng.sample_without_replacement(pool.size(), b * m);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < b; ++i) {
      Dataset d(pool.task(), Provenance::Synthetic);
      for (std::size_t j = 0; j < m; ++j) d.push_back(pool[perm[pos++]]);
      out.push_back(std::move(d));
    }
  } else {
    for (std::size_t i = 0; i < b; ++i) {
      Dataset d(pool.task(), Provenance::Synthetic);
      for (std::size_t j = 0; j < m; ++j) {
        d.push_back(pool[rng.uniform_index(pool.size())]);
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace synlearn
