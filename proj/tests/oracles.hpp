// Test-side oracles, deliberately independent of the library's numerical
// paths: plain Simpson/trapezoid quadrature, central finite differences, the
// conjugate Normal-Inverse-Gamma closed form, and small Monte-Carlo helpers.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracles {

/// Composite Simpson rule (n is rounded up to even).
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      int n) {
  if (n % 2 == 1) ++n;
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) {
    acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

inline double trapezoid(const std::function<double(double)>& f, double lo, double hi,
                        int n) {
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

/// Central finite difference of a scalar function of a parameter vector.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t j, double h = 1e-5) {
  x[j] += h;
  const double up = f(x);
  x[j] -= 2.0 * h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double normal_pdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double laplace_pdf(double x, double scale) {
  return std::exp(-std::abs(x) / scale) / (2.0 * scale);
}

/// Conjugate Normal-Inverse-Gamma posterior for Gaussian data under the
/// log loss: sigma^2 ~ IG(a, b), mu | sigma ~ N(m, sigma^2 / kappa).
struct NigParams {
  double a, b, m, kappa;
};

inline NigParams nig_posterior(const NigParams& prior, const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  if (x.empty()) return prior;
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  NigParams post;
  post.kappa = prior.kappa + n;
  post.m = (prior.kappa * prior.m + sum) / post.kappa;
  post.a = prior.a + 0.5 * n;
  post.b = prior.b + 0.5 * ss +
           0.5 * prior.kappa * n * (mean - prior.m) * (mean - prior.m) / post.kappa;
  return post;
}

/// NIG density over (mu, sigma) (includes the 2*sigma Jacobian from the
/// sigma^2 parameterization).
inline double nig_density_mu_sigma(const NigParams& p, double mu, double sigma) {
  if (sigma <= 0.0) return 0.0;
  const double s2 = sigma * sigma;
  const double ig = std::exp(p.a * std::log(p.b) - std::lgamma(p.a) -
                             (p.a + 1.0) * std::log(s2) - p.b / s2);
  const double normal = normal_pdf(mu, p.m, sigma / std::sqrt(p.kappa));
  return ig * 2.0 * sigma * normal;
}

/// Mean and sd of mu and sigma under the NIG, by 2-d quadrature.
struct Moments {
  double mean_mu, sd_mu, mean_sigma, sd_sigma;
};

inline Moments nig_moments(const NigParams& p) {
  // mu | data is a scaled Student-t; sigma moments come from the IG in
  // closed form, transformed to the sigma scale via Gamma function ratios.
  Moments m{};
  m.mean_mu = p.m;
  m.sd_mu = std::sqrt(p.b / (p.kappa * (p.a - 1.0)));
  // E[sigma] = sqrt(b) * Gamma(a - 1/2) / Gamma(a); E[sigma^2] = b / (a - 1)
  const double log_ratio = std::lgamma(p.a - 0.5) - std::lgamma(p.a);
  m.mean_sigma = std::sqrt(p.b) * std::exp(log_ratio);
  const double second = p.b / (p.a - 1.0);
  m.sd_sigma = std::sqrt(second - m.mean_sigma * m.mean_sigma);
  return m;
}

}  // namespace oracles
