#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synlearn/data.hpp"
#include "synlearn/evaluation.hpp"
#include "synlearn/inference.hpp"
#include "synlearn/models.hpp"
#include "synlearn/privacy.hpp"
#include "synlearn/trajectory.hpp"

namespace synlearn {

enum class Scale { Desk, Paper };

/// One experiment: model, prior, losses, synthetic source, sweep grids and
/// runtime knobs. Loaded from a JSON file; scale presets fill anything the
/// file leaves out.
struct ExperimentConfig {
  Task task = Task::Gaussian;
  ModelSpec model = TruncatedGaussian{};
  PriorSpec prior = NigPrior{};
  LossSpec loss_real = LogLoss{};
  LossSpec loss_synth = LogLoss{};
  /// Extra synthetic-loss configurations compared by `trajectory`
  /// (branching / model-comparison plot data).
  std::vector<std::pair<std::string, LossSpec>> compare_losses;

  std::optional<KnownGaussian> f0;
  std::optional<LaplaceMechanism> mechanism;
  std::optional<std::filesystem::path> synthetic_csv;
  std::optional<std::filesystem::path> real_csv;
  std::optional<std::filesystem::path> test_csv;

  TrajectoryGrid grid;
  std::vector<CriterionKind> criteria{CriterionKind::Kld, CriterionKind::LogScore,
                                      CriterionKind::Wasserstein1};
  McmcConfig mcmc;
  std::size_t predictive_draws = 256;
  std::optional<QuadSpec> kld_quad;

  // mhat / pvalue / neff settings
  std::vector<int> mhat_m_grid;
  CriterionKind mhat_criterion = CriterionKind::LogScore;
  int pvalue_splits = 3;
  double pvalue_alpha = 0.05;
  int pvalue_n_l = 0;  // 0 = smallest grid n
  BootstrapSpec neff;

  std::optional<std::size_t> generate_m;  // rows emitted by `generate`; default n

  std::uint64_t seed = 1;
  int jobs = 1;
  Scale scale = Scale::Desk;
  std::filesystem::path out_dir = ".";

  /// EvalSpec view of the evaluation settings.
  EvalSpec eval() const;
  /// Fit bundle for one synthetic-loss choice.
  FitSpec fit_spec(const LossSpec& loss_synth_override) const;
  FitSpec fit_spec() const { return fit_spec(loss_synth); }
};

/// Parses the JSON config file and applies scale presets. Values given in
/// the file always win over presets.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Presets applied to fields that the JSON file left unset.
void apply_scale_presets(ExperimentConfig& cfg, bool file_set_mcmc_samples,
                         bool file_set_grid);

std::string loss_label(const LossSpec& loss);

}  // namespace synlearn
