#include "synlearn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "synlearn/diagnostics.hpp"
#include "synlearn/rng.hpp"

namespace synlearn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_target(const PosteriorTarget& target) {
  validate(target.model);
  validate(target.prior);
  validate(target.loss_real);
  validate(target.loss_synth);
  const bool logistic_model = std::holds_alternative<LogisticRegression>(target.model);
  const Task expected = logistic_model ? Task::Logistic : Task::Gaussian;
  for (const Dataset* d : {&target.data_real, &target.data_synth}) {
    if (!d->empty() && d->task() != expected) {
      throw std::invalid_argument("PosteriorTarget: dataset task incompatible with model");
    }
  }
  if (logistic_model) {
    const auto& lr = std::get<LogisticRegression>(target.model);
    for (const Dataset* d : {&target.data_real, &target.data_synth}) {
      if (!d->empty() && d->feature_dim() != static_cast<std::size_t>(lr.d)) {
        throw std::invalid_argument("PosteriorTarget: feature dimension mismatch");
      }
    }
  }
}

}  // namespace

double log_unnormalised_posterior(const PosteriorTarget& target, const Theta& theta) {
  check_target(target);
  const double lp = prior_log_density(target.prior, theta);
  if (lp == kNegInf) return kNegInf;
  return lp - loss_sum(target.loss_real, target.model, theta, target.data_real) -
         loss_sum(target.loss_synth, target.model, theta, target.data_synth);
}

std::vector<double> log_posterior_gradient(const PosteriorTarget& target,
                                           const Theta& theta) {
  check_target(target);
  std::vector<double> g = prior_gradient(target.prior, theta);
  auto subtract = [&](const LossSpec& loss, const Dataset& data) {
    for (const auto& z : data.observations()) {
      const auto lg = loss_gradient(loss, target.model, theta, z);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] -= lg[j];
    }
  };
  subtract(target.loss_real, target.data_real);
  subtract(target.loss_synth, target.data_synth);
  return g;
}

void validate(const McmcConfig& cfg) {
  if (cfg.chains < 2) {
    throw std::invalid_argument("McmcConfig: at least 2 chains are required for diagnostics");
  }
  if (cfg.warmup < 0 || cfg.warmup >= cfg.samples_per_chain) {
    throw std::invalid_argument("McmcConfig: warmup must be < samples_per_chain");
  }
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw std::invalid_argument("McmcConfig: target_accept must lie in (0,1)");
  }
  if (cfg.sampler == SamplerKind::Hmc &&
      (cfg.hmc_leapfrog_steps < 1 || !(cfg.hmc_step_size > 0.0))) {
    throw std::invalid_argument("McmcConfig: invalid HMC settings");
  }
}

std::size_t PosteriorSamples::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : draws) n += c.size();
  return n;
}

std::vector<std::vector<double>> PosteriorSamples::component(const ModelSpec& model,
                                                             int index) const {
  const bool logistic = std::holds_alternative<LogisticRegression>(model);
  std::vector<std::vector<double>> out;
  out.reserve(draws.size());
  for (const auto& chain : draws) {
    std::vector<double> series(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const Theta& t = chain[i];
      if (logistic) {
        series[i] = index == 0 ? t.alpha : t.weights[index - 1];
      } else {
        series[i] = index == 0 ? t.mu : t.sigma;
      }
    }
    out.push_back(std::move(series));
  }
  return out;
}

namespace {

/// Log target over the unconstrained coordinates, including the log|J| of
/// the sigma -> log sigma map.
struct UnconstrainedTarget {
  const PosteriorTarget* target;
  bool gaussian_family;

  double operator()(const std::vector<double>& x) const {
    const Theta theta = from_unconstrained(target->model, x);
    double lp = log_unnormalised_posterior(*target, theta);
    if (gaussian_family && std::isfinite(lp)) lp += x[1];  // + log sigma
    return lp;
  }

  std::vector<double> gradient(const std::vector<double>& x) const {
    const Theta theta = from_unconstrained(target->model, x);
    std::vector<double> g = log_posterior_gradient(*target, theta);
    if (gaussian_family) {
      g[1] = g[1] * theta.sigma + 1.0;  // chain rule + Jacobian term
    }
    return g;
  }
};

std::vector<double> initial_point(const PosteriorTarget& target) {
  if (std::holds_alternative<LogisticRegression>(target.model)) {
    return std::vector<double>(param_dim(target.model), 0.0);
  }
  // Moments of the combined data; prior moments when there is none.
  std::vector<double> values;
  for (const Dataset* d : {&target.data_real, &target.data_synth}) {
    for (const auto& o : d->observations()) values.push_back(o.value);
  }
  double mu, sigma;
  const auto& prior = std::get<NigPrior>(target.prior);
  if (values.empty()) {
    mu = prior.mu0;
    sigma = prior.alpha > 1.0 ? std::sqrt(prior.beta / (prior.alpha - 1.0))
                              : std::sqrt(prior.beta / (prior.alpha + 1.0));
  } else {
    mu = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    sigma = values.size() > 1 ? std::sqrt(acc / (values.size() - 1)) : 1.0;
    if (const auto* tg = std::get_if<TruncatedGaussian>(&target.model)) {
      // widen until every observation sits inside the truncated support
      double maxdev = 0.0;
      for (double v : values) maxdev = std::max(maxdev, std::abs(v - mu));
      sigma = std::max(sigma, maxdev / tg->halfwidth_sigmas * 1.001);
    }
  }
  sigma = std::max(sigma, 1e-3);
  return {mu, std::log(sigma)};
}

std::vector<double> find_finite_init(const UnconstrainedTarget& target,
                                     const std::vector<double>& start, Rng& rng) {
  std::vector<double> x = start;
  if (std::isfinite(target(x))) return x;
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<double> y = start;
    for (auto& v : y) v += rng.normal() * (0.2 + 0.05 * attempt);
    if (target.gaussian_family) y[1] = start[1] + std::abs(rng.normal()) * (0.3 + 0.1 * attempt);
    if (std::isfinite(target(y))) return y;
  }
  throw std::runtime_error(
      "sample_posterior: no finite log posterior found after 100 initialization draws");
}

struct ChainResult {
  std::vector<Theta> draws;
  std::vector<double> log_post;
  double acceptance = 0.0;
  int divergences = 0;
};

ChainResult run_random_walk_chain(const UnconstrainedTarget& target,
                                  const McmcConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x = find_finite_init(target, initial_point(*target.target), rng);
  const int dim = static_cast<int>(x.size());
  double lp = target(x);

  std::vector<double> scale(dim, 0.5);
  ChainResult result;
  const int kept = cfg.samples_per_chain - cfg.warmup;
  result.draws.reserve(kept);
  result.log_post.reserve(kept);
  std::size_t proposals = 0;

  for (int iter = 0; iter < cfg.samples_per_chain; ++iter) {
    const bool adapting = iter < cfg.warmup;
    for (int j = 0; j < dim; ++j) {
      const double old = x[j];
      x[j] = old + scale[j] * rng.normal();
      const double lp_new = target(x);
      const double log_ratio = lp_new - lp;
      const double alpha = std::isfinite(lp_new) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
      if (rng.uniform01() < alpha) {
        lp = lp_new;
      } else {
        x[j] = old;
      }
      if (adapting) {
        const double gamma = 1.5 / std::pow(iter + 2.0, 0.6);
        scale[j] = std::clamp(scale[j] * std::exp(gamma * (alpha - cfg.target_accept)),
                              1e-8, 1e6);
      } else {
        ++proposals;
        result.acceptance += alpha;
      }
    }
    if (!adapting) {
      result.draws.push_back(from_unconstrained(target.target->model, x));
      result.log_post.push_back(lp);
    }
  }
  result.acceptance = proposals > 0 ? result.acceptance / proposals : 0.0;
  return result;
}

ChainResult run_hmc_chain(const UnconstrainedTarget& target, const McmcConfig& cfg,
                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x = find_finite_init(target, initial_point(*target.target), rng);
  const int dim = static_cast<int>(x.size());
  double lp = target(x);

  // dual averaging state
  double eps = cfg.hmc_step_size;
  const double mu_da = std::log(10.0 * eps);
  double log_eps_bar = std::log(eps);
  double h_bar = 0.0;
  const double gamma_da = 0.05, t0 = 10.0, kappa = 0.75;

  ChainResult result;
  const int kept = cfg.samples_per_chain - cfg.warmup;
  result.draws.reserve(kept);
  result.log_post.reserve(kept);
  double accept_acc = 0.0;
  int accept_n = 0;

  for (int iter = 0; iter < cfg.samples_per_chain; ++iter) {
    std::vector<double> p(dim);
    for (auto& v : p) v = rng.normal();
    double kin0 = 0.0;
    for (double v : p) kin0 += 0.5 * v * v;
    const double h0 = -lp + kin0;

    std::vector<double> y = x;
    std::vector<double> grad = target.gradient(y);
    bool divergent = false;
    for (int j = 0; j < dim; ++j) p[j] += 0.5 * eps * grad[j];
    for (int step = 0; step < cfg.hmc_leapfrog_steps; ++step) {
      for (int j = 0; j < dim; ++j) y[j] += eps * p[j];
      const double lp_y = target(y);
      if (!std::isfinite(lp_y)) {
        divergent = true;
        break;
      }
      grad = target.gradient(y);
      const double half = step + 1 == cfg.hmc_leapfrog_steps ? 0.5 : 1.0;
      for (int j = 0; j < dim; ++j) p[j] += half * eps * grad[j];
    }

    double alpha = 0.0;
    double lp_y = divergent ? kNegInf : target(y);
    if (!divergent) {
      double kin1 = 0.0;
      for (double v : p) kin1 += 0.5 * v * v;
      const double h1 = -lp_y + kin1;
      if (!std::isfinite(h1) || h1 - h0 > 1000.0) {
        divergent = true;
      } else {
        alpha = std::min(1.0, std::exp(h0 - h1));
      }
    }
    if (divergent) ++result.divergences;
    if (!divergent && rng.uniform01() < alpha) {
      x = y;
      lp = lp_y;
    }

    if (iter < cfg.warmup) {
      const double m = iter + 1.0;
      h_bar = (1.0 - 1.0 / (m + t0)) * h_bar +
              (cfg.target_accept - alpha) / (m + t0);
      const double log_eps = mu_da - std::sqrt(m) / gamma_da * h_bar;
      const double w = std::pow(m, -kappa);
      log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
      eps = std::exp(log_eps);
    } else {
      if (iter == cfg.warmup) eps = std::exp(log_eps_bar);
      accept_acc += alpha;
      ++accept_n;
      result.draws.push_back(from_unconstrained(target.target->model, x));
      result.log_post.push_back(lp);
    }
  }
  result.acceptance = accept_n > 0 ? accept_acc / accept_n : 0.0;
  return result;
}

}  // namespace

PosteriorSamples sample_posterior(const PosteriorTarget& target, const McmcConfig& cfg,
                                  std::uint64_t seed) {
  check_target(target);
  validate(cfg);
  const UnconstrainedTarget utarget{
      &target, !std::holds_alternative<LogisticRegression>(target.model)};

  PosteriorSamples out;
  out.seed = seed;
  out.parameter_names = param_names(target.model);
  const SeedSpec spec{seed};
  for (int c = 0; c < cfg.chains; ++c) {
    const std::uint64_t chain_seed = derive_seed(spec, "mcmc-chain", 0, c);
    ChainResult r = cfg.sampler == SamplerKind::AdaptiveRandomWalk
                        ? run_random_walk_chain(utarget, cfg, chain_seed)
                        : run_hmc_chain(utarget, cfg, chain_seed);
    out.draws.push_back(std::move(r.draws));
    out.log_posterior.push_back(std::move(r.log_post));
    out.acceptance_rate.push_back(r.acceptance);
    out.divergences.push_back(r.divergences);
  }
  const int dim = param_dim(target.model);
  for (int j = 0; j < dim; ++j) {
    out.rhat.push_back(split_rhat(out.component(target.model, j)));
  }
  return out;
}

GridPosterior grid_posterior(const PosteriorTarget& target, const AxisSpec& axis0,
                             const AxisSpec& axis1) {
  check_target(target);
  if (param_dim(target.model) != 2) {
    throw std::invalid_argument("grid_posterior: requires a 2-parameter model");
  }
  if (axis0.points < 8 || axis1.points < 8) {
    throw std::invalid_argument("grid_posterior: grid too coarse");
  }
  const bool logistic = std::holds_alternative<LogisticRegression>(target.model);
  if (!logistic && !(axis1.lo > 0.0)) {
    throw std::invalid_argument("grid_posterior: sigma axis must be positive");
  }

  GridPosterior grid;
  grid.axis0 = axis0;
  grid.axis1 = axis1;
  const int n0 = axis0.points, n1 = axis1.points;
  const double h0 = (axis0.hi - axis0.lo) / (n0 - 1);
  const double h1 = (axis1.hi - axis1.lo) / (n1 - 1);
  std::vector<double> logd(static_cast<std::size_t>(n0) * n1, kNegInf);
  double max_logd = kNegInf;
  for (int i = 0; i < n0; ++i) {
    const double v0 = axis0.lo + i * h0;
    for (int j = 0; j < n1; ++j) {
      const double v1 = axis1.lo + j * h1;
      const Theta theta = logistic ? Theta::logistic(v0, {v1}) : Theta::gaussian(v0, v1);
      const double lp = log_unnormalised_posterior(target, theta);
      logd[i * n1 + j] = lp;
      max_logd = std::max(max_logd, lp);
    }
  }
  if (!std::isfinite(max_logd)) {
    throw std::runtime_error("grid_posterior: log posterior is -inf everywhere on the grid");
  }

  grid.density.resize(logd.size());
  auto weight = [](int i, int n) { return i == 0 || i == n - 1 ? 0.5 : 1.0; };
  double mass = 0.0, boundary = 0.0;
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      const double d = std::exp(logd[i * n1 + j] - max_logd);
      grid.density[i * n1 + j] = d;
      const double w = weight(i, n0) * weight(j, n1) * d;
      mass += w;
      if (i == 0 || i == n0 - 1 || j == 0 || j == n1 - 1) boundary += w;
    }
  }
  const double cell = h0 * h1;
  const double z = mass * cell;
  grid.boundary_mass = boundary * cell / z;
  if (grid.boundary_mass > 1e-3) {
    throw std::runtime_error(
        "grid_posterior: grid excludes posterior mass (boundary mass " +
        std::to_string(grid.boundary_mass) + ")");
  }
  for (auto& d : grid.density) d /= z;

  std::array<double, 2> mean{0.0, 0.0}, second{0.0, 0.0};
  for (int i = 0; i < n0; ++i) {
    const double v0 = axis0.lo + i * h0;
    for (int j = 0; j < n1; ++j) {
      const double v1 = axis1.lo + j * h1;
      const double w = weight(i, n0) * weight(j, n1) * grid.density[i * n1 + j] * cell;
      mean[0] += w * v0;
      mean[1] += w * v1;
      second[0] += w * v0 * v0;
      second[1] += w * v1 * v1;
    }
  }
  grid.mean = mean;
  grid.sd = {std::sqrt(std::max(0.0, second[0] - mean[0] * mean[0])),
             std::sqrt(std::max(0.0, second[1] - mean[1] * mean[1]))};
  return grid;
}

}  // namespace synlearn
