#include "synlearn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "synlearn/rng.hpp"

namespace synlearn {

namespace {

std::vector<std::vector<double>> split_chains(
    const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half == 0) throw std::invalid_argument("diagnostics: chains too short");
    halves.emplace_back(c.begin(), c.begin() + half);
    halves.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  return halves;
}

/// Average ranks (ties averaged), then map through the normal quantile.
std::vector<std::vector<double>> rank_normalize(
    const std::vector<std::vector<double>>& seqs) {
  std::size_t total = 0;
  for (const auto& s : seqs) total += s.size();
  std::vector<std::pair<double, std::size_t>> flat;
  flat.reserve(total);
  std::size_t offset = 0;
  for (const auto& s : seqs) {
    for (double v : s) flat.emplace_back(v, offset++);
  }
  std::sort(flat.begin(), flat.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> rank(total);
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j + 1 < total && flat[j + 1].first == flat[i].first) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[flat[k].second] = avg;
    i = j + 1;
  }
  std::vector<std::vector<double>> out;
  out.reserve(seqs.size());
  std::size_t pos = 0;
  const double n = static_cast<double>(total);
  for (const auto& s : seqs) {
    std::vector<double> z(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      z[k] = normal_quantile((rank[pos++] - 0.375) / (n + 0.25));
    }
    out.push_back(std::move(z));
  }
  return out;
}

struct Anova {
  double w = 0.0;         // within-sequence variance
  double var_plus = 0.0;  // marginal posterior variance estimate
  std::size_t n = 0;
};

Anova anova(const std::vector<std::vector<double>>& seqs) {
  const std::size_t m = seqs.size();
  const std::size_t n = seqs.front().size();
  std::vector<double> means(m);
  std::vector<double> vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    const auto& s = seqs[c];
    means[c] = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double acc = 0.0;
    for (double v : s) acc += (v - means[c]) * (v - means[c]);
    vars[c] = n > 1 ? acc / (n - 1) : 0.0;
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b = m > 1 ? b * n / (m - 1) : 0.0;
  Anova a;
  a.n = n;
  a.w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  a.var_plus = (n - 1.0) / n * a.w + b / n;
  return a;
}

double rhat_of(const std::vector<std::vector<double>>& seqs) {
  const auto a = anova(seqs);
  if (a.w <= 0.0) return 1.0;  // constant sequences
  return std::sqrt(a.var_plus / a.w);
}

double ess_of(const std::vector<std::vector<double>>& seqs) {
  const std::size_t m = seqs.size();
  const std::size_t n = seqs.front().size();
  if (n < 8) return static_cast<double>(m * n);
  const auto a = anova(seqs);
  if (a.var_plus <= 0.0) return static_cast<double>(m * n);

  std::vector<double> means(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = std::accumulate(seqs[c].begin(), seqs[c].end(), 0.0) / n;
  }
  // Lazy chain-averaged autocorrelation; Geyer's pairing stops long before
  // the lag budget, so lags are computed on demand.
  auto rho_at = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& s = seqs[c];
      double acc = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t) {
        acc += (s[t] - means[c]) * (s[t + lag] - means[c]);
      }
      acov += acc / n;
    }
    acov /= m;
    return 1.0 - (a.w - acov) / a.var_plus;
  };

  // Initial monotone positive sequence: sum rho in consecutive pairs while
  // the pair sums stay positive, forcing them non-increasing.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n - 2; ++k) {
    double pair = rho_at(2 * k) + rho_at(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  if (tau <= 0.0) return static_cast<double>(m * n);
  const double ess = static_cast<double>(m) * n / tau;
  return std::min(ess, static_cast<double>(m * n) * 10.0);
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw std::invalid_argument("split_rhat: need at least 2 chains");
  }
  return rhat_of(rank_normalize(split_chains(chains)));
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty() || chains.front().empty()) {
    throw std::invalid_argument("effective_sample_size: empty chains");
  }
  return ess_of(chains);
}

double pooled_mean(const std::vector<std::vector<double>>& chains) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& c : chains) {
    acc = std::accumulate(c.begin(), c.end(), acc);
    n += c.size();
  }
  return acc / n;
}

double pooled_sd(const std::vector<std::vector<double>>& chains) {
  const double mu = pooled_mean(chains);
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& c : chains) {
    for (double v : c) acc += (v - mu) * (v - mu);
    n += c.size();
  }
  return n > 1 ? std::sqrt(acc / (n - 1)) : 0.0;
}

double mcse_mean(const std::vector<std::vector<double>>& chains) {
  const double sd = pooled_sd(chains);
  return sd / std::sqrt(effective_sample_size(chains));
}

double mcse_sd(const std::vector<std::vector<double>>& chains) {
  const double mu = pooled_mean(chains);
  const double sd = pooled_sd(chains);
  if (sd == 0.0) return 0.0;
  std::vector<std::vector<double>> sq;
  sq.reserve(chains.size());
  double m4 = 0.0;
  std::size_t n = 0;
  for (const auto& c : chains) {
    std::vector<double> s(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double d2 = (c[i] - mu) * (c[i] - mu);
      s[i] = d2;
      m4 += d2 * d2;
    }
    n += c.size();
    sq.push_back(std::move(s));
  }
  m4 /= n;
  const double var_of_var = std::max(0.0, m4 - sd * sd * sd * sd);
  const double ess = effective_sample_size(sq);
  const double se_var = std::sqrt(var_of_var / ess);
  return se_var / (2.0 * sd);
}

}  // namespace synlearn
