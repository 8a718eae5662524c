#pragma once

#include <vector>

namespace synlearn {

/// Rank-normalized split-R-hat over per-chain draws of one parameter.
/// Chains are split in half, draws are rank-normalized jointly, and the
/// classic potential-scale-reduction statistic is computed on the result.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size across chains (Geyer initial monotone positive
/// sequence on chain-averaged autocorrelations).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Monte-Carlo standard error of the pooled mean.
double mcse_mean(const std::vector<std::vector<double>>& chains);

/// Monte-Carlo standard error of the pooled standard deviation estimate,
/// from the ESS of the squared-deviation sequence.
double mcse_sd(const std::vector<std::vector<double>>& chains);

double pooled_mean(const std::vector<std::vector<double>>& chains);
double pooled_sd(const std::vector<std::vector<double>>& chains);

}  // namespace synlearn
