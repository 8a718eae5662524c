#pragma once

#include <string>
#include <variant>
#include <vector>

#include "synlearn/data.hpp"

namespace synlearn {

/// Gaussian restricted to mu +- halfwidth_sigmas * sigma, renormalized.
struct TruncatedGaussian {
  double halfwidth_sigmas = 3.0;
};

/// Gaussian convolved with centred Laplace(lambda) noise; models data that
/// passed through the Laplace mechanism.
struct NormalLaplaceConvolution {
  double lambda = 1.0;
};

struct LogisticRegression {
  int d = 1;
};

using ModelSpec = std::variant<TruncatedGaussian, NormalLaplaceConvolution, LogisticRegression>;

/// Model parameters. Gaussian-family models use (mu, sigma); logistic uses
/// (alpha, weights).
struct Theta {
  double mu = 0.0;
  double sigma = 1.0;
  double alpha = 0.0;
  std::vector<double> weights;

  static Theta gaussian(double mu, double sigma) {
    Theta t;
    t.mu = mu;
    t.sigma = sigma;
    return t;
  }
  static Theta logistic(double alpha, std::vector<double> weights) {
    Theta t;
    t.alpha = alpha;
    t.weights = std::move(weights);
    return t;
  }
};

struct LogLoss {};
struct Weighted {
  double w = 1.0;
};
struct BetaD {
  double beta = 0.5;
  double w_beta = 1.25;
};

using LossSpec = std::variant<LogLoss, Weighted, BetaD>;

/// Normal-Inverse-Gamma prior for Gaussian-family models:
/// sigma^2 ~ InverseGamma(alpha, beta), mu | sigma ~ Normal(mu0, (sigma0*sigma)^2).
/// Densities are expressed over (mu, sigma).
struct NigPrior {
  double alpha = 2.0;
  double beta = 1.0;
  double mu0 = 0.0;
  double sigma0 = 1.0;
};

/// Independent Normal(0, scale^2) on the logistic intercept and every weight.
struct IsotropicNormalPrior {
  double scale = 50.0;
};

using PriorSpec = std::variant<NigPrior, IsotropicNormalPrior>;

void validate(const ModelSpec& model);
void validate(const LossSpec& loss);
void validate(const PriorSpec& prior);

int param_dim(const ModelSpec& model);
std::vector<std::string> param_names(const ModelSpec& model);

/// Natural parameters <-> the unconstrained space samplers work in
/// ((mu, log sigma) for the Gaussian family, identity for logistic).
std::vector<double> to_unconstrained(const ModelSpec& model, const Theta& theta);
Theta from_unconstrained(const ModelSpec& model, const std::vector<double>& x);

/// log f_theta(x). Out-of-support points yield -inf, not an error.
/// For logistic observations this is the log Bernoulli mass of the label.
double log_density(const ModelSpec& model, const Theta& theta, const Observation& x);

/// log density at y of Normal(mu, sigma^2) + Laplace(0, lambda), in the
/// erf closed form with erfc/log-sum-exp stabilization for far tails.
double normal_laplace_log_density(double mu, double sigma, double lambda, double y);

/// log(erfc(x)), finite for large positive x where erfc underflows.
double log_erfc(double x);

/// The integral part of the beta-divergence loss, 1/(beta+1) * Int f^(beta+1).
/// Closed form for Gaussian-family and logistic; quadrature for the
/// Normal-Laplace convolution.
double betad_integral_term(const ModelSpec& model, const Theta& theta, double beta);

/// Loss of a single observation under the given loss function.
double loss_eval(const LossSpec& loss, const ModelSpec& model, const Theta& theta,
                 const Observation& z);

/// Sum of losses over a dataset; evaluates the beta-divergence integral term
/// once per call rather than per observation.
double loss_sum(const LossSpec& loss, const ModelSpec& model, const Theta& theta,
                const Dataset& data);

/// Analytic gradient of loss_eval with respect to the natural parameters
/// ((mu, sigma) or (alpha, weights...)).
std::vector<double> loss_gradient(const LossSpec& loss, const ModelSpec& model,
                                  const Theta& theta, const Observation& z);

double prior_log_density(const PriorSpec& prior, const Theta& theta);
std::vector<double> prior_gradient(const PriorSpec& prior, const Theta& theta);

}  // namespace synlearn
