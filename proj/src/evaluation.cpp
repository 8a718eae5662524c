#include "synlearn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "synlearn/rng.hpp"

namespace synlearn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double KnownGaussian::log_density(double x) const {
  const double z = (x - mu0) / sigma0;
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma0);
}

LogScoreResult log_score(const std::function<double(const Observation&)>& log_predictive,
                         const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("log_score: empty test set");
  LogScoreResult r;
  double acc = 0.0;
  for (const auto& o : test.observations()) {
    const double lp = log_predictive(o);
    if (lp == -kInf) {
      ++r.zero_density;
      acc = kInf;
    } else if (acc != kInf) {
      acc -= lp;
    }
  }
  r.value = acc == kInf ? kInf : acc / test.size();
  return r;
}

QuadSpec default_kld_quad(const KnownGaussian& f0) {
  return {f0.mu0 - 10.0 * f0.sigma0, f0.mu0 + 10.0 * f0.sigma0, f0.sigma0 / 500.0};
}

KldResult kld_to_f0(const KnownGaussian& f0,
                    const std::function<double(double)>& log_predictive_at,
                    const QuadSpec& quad) {
  if (!(quad.hi > quad.lo) || !(quad.step > 0.0)) {
    throw std::invalid_argument("kld_to_f0: invalid quadrature spec");
  }
  // the window must capture essentially all f0 mass
  const double zl = (quad.lo - f0.mu0) / f0.sigma0;
  const double zh = (quad.hi - f0.mu0) / f0.sigma0;
  const double outside = normal_cdf(zl) + normal_cdf(-zh);
  if (outside > 1e-10) {
    throw std::invalid_argument("kld_to_f0: quadrature range misses f0 mass");
  }

  const int n = std::max(8, static_cast<int>(std::lround((quad.hi - quad.lo) / quad.step)));
  const double h = (quad.hi - quad.lo) / n;
  double value = 0.0;
  double deficit = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = quad.lo + i * h;
    const double w = (i == 0 || i == n) ? 0.5 * h : h;
    const double lf0 = f0.log_density(x);
    const double f0x = std::exp(lf0);
    const double lp = log_predictive_at(x);
    if (lp == -kInf) {
      deficit += w * f0x;
    } else {
      value += w * f0x * (lf0 - lp);
    }
  }
  return {value, deficit, deficit > 1e-12};
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wasserstein1: empty sample set");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / a.size();
  }
  // integral of |Fa^{-1}(u) - Fb^{-1}(u)| over u in (0,1)
  const std::size_t n = a.size(), m = b.size();
  double acc = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const double qa = static_cast<double>(i + 1) / n;
    const double qb = static_cast<double>(j + 1) / m;
    const double q = std::min(qa, qb);
    acc += (q - prev) * std::abs(a[i] - b[j]);
    prev = q;
    if (qa <= q) ++i;
    if (qb <= q) ++j;
  }
  return acc;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("auroc: scores and labels must be equal-length, non-empty");
  }
  std::size_t n1 = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auroc: labels must be 0/1");
    n1 += y;
  }
  const std::size_t n0 = labels.size() - n1;
  if (n0 == 0 || n1 == 0) {
    throw std::invalid_argument("auroc: both classes must be present");
  }
  // rank-sum with average ranks == pairwise indicator sum with 1/2 for ties
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * n1 * (n1 + 1.0);
  return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

}  // namespace synlearn
