#include "synlearn/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace synlearn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinBeta = 1e-4;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double logsumexp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log of the stable sigmoid 1/(1+e^-t).
double log_sigmoid(double t) {
  return t >= 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

double sigmoid(double t) { return std::exp(log_sigmoid(t)); }

double logistic_linear(const Theta& theta, const Observation& x) {
  if (x.features.size() != theta.weights.size()) {
    throw std::invalid_argument("logistic: feature/weight dimension mismatch");
  }
  double t = theta.alpha;
  for (std::size_t j = 0; j < x.features.size(); ++j) {
    t += x.features[j] * theta.weights[j];
  }
  return t;
}

void check_gaussian_theta(const Theta& theta) {
  if (!(theta.sigma > 0.0)) {
    throw std::invalid_argument("Theta: sigma must be positive");
  }
}

double truncation_log_mass(double halfwidth) {
  // P(|Z| <= k) = erf(k/sqrt(2)); exactly 1.0 in doubles for k >~ 9.
  return std::log(std::erf(halfwidth / std::numbers::sqrt2));
}

double gaussian_core_log_density(double mu, double sigma, double x) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(sigma);
}

double betad_w(const BetaD& b) {
  if (!(b.beta >= kMinBeta)) {
    throw std::invalid_argument(
        "BetaD: beta below 1e-4 is numerically unstable; use LogLoss for the "
        "small-beta limit");
  }
  if (!(b.w_beta > 0.0)) throw std::invalid_argument("BetaD: w_beta must be positive");
  return b.w_beta;
}

/// Trapezoid over [lo, hi] with fixed step count.
template <typename F>
double trapezoid(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

/// Int f^(beta+1) dy for the Normal-Laplace convolution (location-free, so
/// integrate around 0). Dense core around the peak plus an exponential-tail
/// segment sampled at the Laplace scale.
double normal_laplace_power_integral(double sigma, double lambda, double beta) {
  const double p = beta + 1.0;
  auto fpow = [&](double v) {
    return std::exp(p * normal_laplace_log_density(0.0, sigma, lambda, v));
  };
  const double core = 6.0 * (sigma + lambda);
  const double hcore = std::min(sigma, lambda) / 12.0;
  const int ncore = std::min(6000, std::max(64, static_cast<int>(core / hcore)));
  // tail mass below ~1e-20 of peak once p*v/lambda exceeds ~50
  const double tail_end = core + (50.0 * lambda + 8.0 * sigma) / p;
  const double htail = lambda / 6.0;
  const int ntail =
      std::min(4000, std::max(16, static_cast<int>((tail_end - core) / htail)));
  const double half =
      trapezoid(fpow, 0.0, core, ncore) + trapezoid(fpow, core, tail_end, ntail);
  return 2.0 * half;
}

struct NormalLaplaceParts {
  double l1 = 0.0;
  double l2 = 0.0;
  double lse = 0.0;  // logsumexp(l1, l2) = log(4*lambda*f)
  double u = 0.0;    // (y - mu) / sigma
};

NormalLaplaceParts normal_laplace_parts(double mu, double sigma, double lambda,
                                        double y) {
  NormalLaplaceParts p;
  p.u = (y - mu) / sigma;
  const double r = sigma / lambda;
  const double a1 = (mu - y) / lambda + 0.5 * r * r;
  const double a2 = (y - mu) / lambda + 0.5 * r * r;
  const double t1 = (p.u - r) / std::numbers::sqrt2;
  const double t2 = (p.u + r) / std::numbers::sqrt2;
  p.l1 = a1 + log_erfc(-t1);
  p.l2 = a2 + log_erfc(t2);
  p.lse = logsumexp2(p.l1, p.l2);
  return p;
}

}  // namespace

void validate(const ModelSpec& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TruncatedGaussian>) {
          if (!(m.halfwidth_sigmas > 0.0)) {
            throw std::invalid_argument("TruncatedGaussian: halfwidth must be positive");
          }
        } else if constexpr (std::is_same_v<T, NormalLaplaceConvolution>) {
          if (!(m.lambda > 0.0)) {
            throw std::invalid_argument("NormalLaplaceConvolution: lambda must be positive");
          }
        } else {
          if (m.d < 1) throw std::invalid_argument("LogisticRegression: d must be >= 1");
        }
      },
      model);
}

void validate(const LossSpec& loss) {
  if (const auto* w = std::get_if<Weighted>(&loss)) {
    if (!(w->w >= 0.0)) throw std::invalid_argument("Weighted: w must be >= 0");
  } else if (const auto* b = std::get_if<BetaD>(&loss)) {
    betad_w(*b);
  }
}

void validate(const PriorSpec& prior) {
  if (const auto* p = std::get_if<NigPrior>(&prior)) {
    if (!(p->alpha > 0.0 && p->beta > 0.0 && p->sigma0 > 0.0)) {
      throw std::invalid_argument("NigPrior: alpha, beta, sigma0 must be positive");
    }
  } else {
    const auto& iso = std::get<IsotropicNormalPrior>(prior);
    if (!(iso.scale > 0.0)) {
      throw std::invalid_argument("IsotropicNormalPrior: scale must be positive");
    }
  }
}

int param_dim(const ModelSpec& model) {
  if (const auto* lr = std::get_if<LogisticRegression>(&model)) return lr->d + 1;
  return 2;
}

std::vector<std::string> param_names(const ModelSpec& model) {
  if (const auto* lr = std::get_if<LogisticRegression>(&model)) {
    std::vector<std::string> names{"alpha"};
    for (int j = 1; j <= lr->d; ++j) names.push_back("theta" + std::to_string(j));
    return names;
  }
  return {"mu", "sigma"};
}

std::vector<double> to_unconstrained(const ModelSpec& model, const Theta& theta) {
  if (std::holds_alternative<LogisticRegression>(model)) {
    std::vector<double> x{theta.alpha};
    x.insert(x.end(), theta.weights.begin(), theta.weights.end());
    return x;
  }
  check_gaussian_theta(theta);
  return {theta.mu, std::log(theta.sigma)};
}

Theta from_unconstrained(const ModelSpec& model, const std::vector<double>& x) {
  if (std::holds_alternative<LogisticRegression>(model)) {
    if (x.size() != static_cast<std::size_t>(param_dim(model))) {
      throw std::invalid_argument("from_unconstrained: dimension mismatch");
    }
    return Theta::logistic(x[0], std::vector<double>(x.begin() + 1, x.end()));
  }
  if (x.size() != 2) throw std::invalid_argument("from_unconstrained: expected 2 params");
  return Theta::gaussian(x[0], std::exp(x[1]));
}

double log_erfc(double x) {
  if (x < 15.0) return std::log(std::erfc(x));
  const double x2 = x * x;
  const double inv = 1.0 / (2.0 * x2);
  const double series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv));
  return -x2 - std::log(x * std::sqrt(std::numbers::pi)) + std::log(series);
}

double normal_laplace_log_density(double mu, double sigma, double lambda, double y) {
  if (!(sigma > 0.0)) throw std::invalid_argument("normal_laplace: sigma must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("normal_laplace: lambda must be positive");
  const auto p = normal_laplace_parts(mu, sigma, lambda, y);
  return p.lse - std::log(4.0 * lambda);
}

double log_density(const ModelSpec& model, const Theta& theta, const Observation& x) {
  if (const auto* tg = std::get_if<TruncatedGaussian>(&model)) {
    check_gaussian_theta(theta);
    if (std::abs(x.value - theta.mu) > tg->halfwidth_sigmas * theta.sigma) {
      return kNegInf;
    }
    return gaussian_core_log_density(theta.mu, theta.sigma, x.value) -
           truncation_log_mass(tg->halfwidth_sigmas);
  }
  if (const auto* nl = std::get_if<NormalLaplaceConvolution>(&model)) {
    return normal_laplace_log_density(theta.mu, theta.sigma, nl->lambda, x.value);
  }
  const double t = logistic_linear(theta, x);
  return x.label == 1 ? log_sigmoid(t) : log_sigmoid(-t);
}

double betad_integral_term(const ModelSpec& model, const Theta& theta, double beta) {
  if (std::holds_alternative<TruncatedGaussian>(model)) {
    check_gaussian_theta(theta);
    // (2*pi)^(beta/2) * (1+beta)^(3/2) * sigma^beta, inverted.
    return 1.0 / (std::pow(2.0 * std::numbers::pi, 0.5 * beta) *
                  std::pow(1.0 + beta, 1.5) * std::pow(theta.sigma, beta));
  }
  if (const auto* nl = std::get_if<NormalLaplaceConvolution>(&model)) {
    check_gaussian_theta(theta);
    return normal_laplace_power_integral(theta.sigma, nl->lambda, beta) / (beta + 1.0);
  }
  throw std::invalid_argument(
      "betad_integral_term: logistic integral depends on the observation; use "
      "loss_eval");
}

namespace {

double betad_loss_point(const BetaD& spec, const ModelSpec& model, const Theta& theta,
                        const Observation& z, double integral_term) {
  const double wb = betad_w(spec);
  const double beta = spec.beta;
  if (std::holds_alternative<LogisticRegression>(model)) {
    const double t = logistic_linear(theta, z);
    const double p1 = sigmoid(t);
    const double p0 = 1.0 - p1;
    const double pz = z.label == 1 ? p1 : p0;
    const double integral =
        (std::pow(p1, beta + 1.0) + std::pow(p0, beta + 1.0)) / (beta + 1.0);
    return -wb * (std::pow(pz, beta) / beta - integral);
  }
  const double lf = log_density(model, theta, z);
  const double fpow = lf == kNegInf ? 0.0 : std::exp(beta * lf);
  return -wb * (fpow / beta - integral_term);
}

}  // namespace

double loss_eval(const LossSpec& loss, const ModelSpec& model, const Theta& theta,
                 const Observation& z) {
  if (std::holds_alternative<LogLoss>(loss)) {
    return -log_density(model, theta, z);
  }
  if (const auto* w = std::get_if<Weighted>(&loss)) {
    if (!(w->w >= 0.0)) throw std::invalid_argument("Weighted: w must be >= 0");
    if (w->w == 0.0) return 0.0;
    return -w->w * log_density(model, theta, z);
  }
  const auto& b = std::get<BetaD>(loss);
  const double integral = std::holds_alternative<LogisticRegression>(model)
                              ? 0.0
                              : betad_integral_term(model, theta, b.beta);
  return betad_loss_point(b, model, theta, z, integral);
}

double loss_sum(const LossSpec& loss, const ModelSpec& model, const Theta& theta,
                const Dataset& data) {
  if (data.empty()) return 0.0;
  if (const auto* b = std::get_if<BetaD>(&loss)) {
    const double integral = std::holds_alternative<LogisticRegression>(model)
                                ? 0.0
                                : betad_integral_term(model, theta, b->beta);
    double acc = 0.0;
    for (const auto& z : data.observations()) {
      acc += betad_loss_point(*b, model, theta, z, integral);
    }
    return acc;
  }
  double acc = 0.0;
  for (const auto& z : data.observations()) acc += loss_eval(loss, model, theta, z);
  return acc;
}

namespace {

/// d(log f)/d(mu, sigma) for Gaussian-family models at an in-support point.
std::vector<double> gaussian_family_score(const ModelSpec& model, const Theta& theta,
                                          double y) {
  check_gaussian_theta(theta);
  if (std::holds_alternative<TruncatedGaussian>(model)) {
    const double z = (y - theta.mu) / theta.sigma;
    return {z / theta.sigma, (z * z - 1.0) / theta.sigma};
  }
  const auto& nl = std::get<NormalLaplaceConvolution>(model);
  const double lambda = nl.lambda;
  const auto p = normal_laplace_parts(theta.mu, theta.sigma, lambda, y);
  const double dmu = std::tanh(0.5 * (p.l1 - p.l2)) / lambda;
  const double gauss_over_sum = std::exp(-0.5 * p.u * p.u - p.lse);
  const double dsigma = theta.sigma / (lambda * lambda) -
                        (2.0 * std::numbers::sqrt2 /
                         (lambda * std::sqrt(std::numbers::pi))) *
                            gauss_over_sum;
  return {dmu, dsigma};
}

/// Gradient of the Normal-Laplace power integral via differentiating under
/// the integral sign: d/dtheta Int f^(b+1) = (b+1) Int f^(b+1) dlogf/dtheta.
std::vector<double> normal_laplace_integral_gradient(const NormalLaplaceConvolution& nl,
                                                     const Theta& theta, double beta) {
  const double p = beta + 1.0;
  const double sigma = theta.sigma;
  const double lambda = nl.lambda;
  const ModelSpec model = nl;
  auto term = [&](double v) {
    const double f = std::exp(p * normal_laplace_log_density(0.0, sigma, lambda, v));
    const auto score = gaussian_family_score(model, Theta::gaussian(0.0, sigma), v);
    return std::pair<double, double>{f * score[0], f * score[1]};
  };
  const double core = 6.0 * (sigma + lambda);
  const double hcore = std::min(sigma, lambda) / 12.0;
  const int ncore = std::min(6000, std::max(64, static_cast<int>(core / hcore)));
  const double tail_end = core + (50.0 * lambda + 8.0 * sigma) / p;
  const double htail = lambda / 6.0;
  const int ntail =
      std::min(4000, std::max(16, static_cast<int>((tail_end - core) / htail)));
  // mu component integrates to zero by symmetry; sigma component is even.
  auto fs = [&](double v) { return term(v).second; };
  auto seg = [&](double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double acc = 0.5 * (fs(lo) + fs(hi));
    for (int i = 1; i < n; ++i) acc += fs(lo + i * h);
    return acc * h;
  };
  const double dsigma = 2.0 * (seg(0.0, core, ncore) + seg(core, tail_end, ntail));
  // Returns gradient of the *loss* integral term (1/(b+1)) Int f^(b+1).
  return {0.0, dsigma};
}

std::vector<double> logloss_gradient(const ModelSpec& model, const Theta& theta,
                                     const Observation& z) {
  if (std::holds_alternative<LogisticRegression>(model)) {
    const double t = logistic_linear(theta, z);
    const double resid = sigmoid(t) - static_cast<double>(z.label);
    std::vector<double> g(theta.weights.size() + 1);
    g[0] = resid;
    for (std::size_t j = 0; j < theta.weights.size(); ++j) {
      g[j + 1] = resid * z.features[j];
    }
    return g;
  }
  auto score = gaussian_family_score(model, theta, z.value);
  for (auto& v : score) v = -v;
  return score;
}

}  // namespace

std::vector<double> loss_gradient(const LossSpec& loss, const ModelSpec& model,
                                  const Theta& theta, const Observation& z) {
  if (std::holds_alternative<LogLoss>(loss)) {
    return logloss_gradient(model, theta, z);
  }
  if (const auto* w = std::get_if<Weighted>(&loss)) {
    auto g = w->w == 0.0 ? std::vector<double>(param_dim(model), 0.0)
                         : logloss_gradient(model, theta, z);
    if (w->w != 0.0) {
      for (auto& v : g) v *= w->w;
    }
    return g;
  }
  const auto& b = std::get<BetaD>(loss);
  const double wb = betad_w(b);
  const double beta = b.beta;

  if (std::holds_alternative<LogisticRegression>(model)) {
    const double t = logistic_linear(theta, z);
    const double p1 = sigmoid(t);
    const double p0 = 1.0 - p1;
    const double pz = z.label == 1 ? p1 : p0;
    const double sign = z.label == 1 ? 1.0 : -1.0;
    const double dldt = -wb * (sign * std::pow(pz, beta - 1.0) * p1 * p0 -
                               (std::pow(p1, beta) - std::pow(p0, beta)) * p1 * p0);
    std::vector<double> g(theta.weights.size() + 1);
    g[0] = dldt;
    for (std::size_t j = 0; j < theta.weights.size(); ++j) {
      g[j + 1] = dldt * z.features[j];
    }
    return g;
  }

  const double lf = log_density(model, theta, z);
  const double fpow = lf == kNegInf ? 0.0 : std::exp(beta * lf);
  std::vector<double> score = lf == kNegInf ? std::vector<double>{0.0, 0.0}
                                            : gaussian_family_score(model, theta, z.value);
  std::vector<double> dint(2, 0.0);
  if (std::holds_alternative<TruncatedGaussian>(model)) {
    dint[1] = -beta / theta.sigma * betad_integral_term(model, theta, beta);
  } else {
    dint = normal_laplace_integral_gradient(std::get<NormalLaplaceConvolution>(model),
                                            theta, beta);
  }
  return {-wb * (fpow * score[0] - dint[0]), -wb * (fpow * score[1] - dint[1])};
}

double prior_log_density(const PriorSpec& prior, const Theta& theta) {
  if (const auto* p = std::get_if<NigPrior>(&prior)) {
    validate(prior);
    if (!(theta.sigma > 0.0)) return kNegInf;
    const double s = theta.sigma;
    const double ig = p->alpha * std::log(p->beta) - std::lgamma(p->alpha) -
                      2.0 * (p->alpha + 1.0) * std::log(s) - p->beta / (s * s);
    const double musd = p->sigma0 * s;
    const double normal = gaussian_core_log_density(p->mu0, musd, theta.mu);
    return ig + std::log(2.0 * s) + normal;
  }
  const auto& p = std::get<IsotropicNormalPrior>(prior);
  validate(prior);
  double acc = gaussian_core_log_density(0.0, p.scale, theta.alpha);
  for (double w : theta.weights) acc += gaussian_core_log_density(0.0, p.scale, w);
  return acc;
}

std::vector<double> prior_gradient(const PriorSpec& prior, const Theta& theta) {
  if (const auto* p = std::get_if<NigPrior>(&prior)) {
    check_gaussian_theta(theta);
    const double s = theta.sigma;
    const double dm = -(theta.mu - p->mu0) / (p->sigma0 * p->sigma0 * s * s);
    const double ds = -2.0 * (p->alpha + 1.0) / s + 2.0 * p->beta / (s * s * s) +
                      (theta.mu - p->mu0) * (theta.mu - p->mu0) /
                          (p->sigma0 * p->sigma0 * s * s * s);
    return {dm, ds};
  }
  const auto& p = std::get<IsotropicNormalPrior>(prior);
  std::vector<double> g(theta.weights.size() + 1);
  g[0] = -theta.alpha / (p.scale * p.scale);
  for (std::size_t j = 0; j < theta.weights.size(); ++j) {
    g[j + 1] = -theta.weights[j] / (p.scale * p.scale);
  }
  return g;
}

}  // namespace synlearn
