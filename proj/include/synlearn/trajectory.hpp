#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synlearn/data.hpp"
#include "synlearn/evaluation.hpp"
#include "synlearn/inference.hpp"
#include "synlearn/models.hpp"
#include "synlearn/predictive.hpp"
#include "synlearn/privacy.hpp"
#include "synlearn/rng.hpp"

namespace synlearn {

/// Where synthetic observations come from: a Laplace mechanism over keeper
/// data (a fresh subset is privatised per realisation, m <= n), or a fixed
/// pool of already-synthesised rows that gets subsampled (m <= pool size).
class SynthSource {
 public:
  static SynthSource mechanism(LaplaceMechanism mech, Dataset keeper);
  static SynthSource pool(Dataset pool);

  /// One realisation of m synthetic observations.
  Dataset draw(std::size_t m, Rng& rng) const;

  /// A full-length realisation in random order; prefixes of it form a
  /// single synthetic data stream.
  Dataset stream(Rng& rng) const;

  std::size_t capacity() const;

 private:
  std::optional<LaplaceMechanism> mech_;
  Dataset data_;  // keeper data or synthetic pool
};

/// How criteria are evaluated against a fitted posterior.
struct EvalSpec {
  std::vector<CriterionKind> criteria{CriterionKind::Kld};
  std::optional<KnownGaussian> f0;  // required for KLD
  QuadSpec kld_quad{};              // zero step = derive from f0 defaults
  std::size_t predictive_draws = 256;
};

double evaluate_criterion(CriterionKind kind, const PredictiveModel& predictive,
                          const Dataset& test, const EvalSpec& eval, Rng& rng);

/// Everything needed to fit one posterior inside a sweep.
struct FitSpec {
  ModelSpec model;
  PriorSpec prior;
  LossSpec loss_real = LogLoss{};
  LossSpec loss_synth = LogLoss{};
  McmcConfig mcmc;
};

/// The (n_L, m, repeat) sweep.
struct TrajectoryGrid {
  std::vector<int> n_values{2, 4, 6, 8, 10, 13, 16, 19, 22, 25, 30, 35, 40, 50, 75, 100};
  std::vector<int> m_values;  // 0 is always included
  int repeats = 10;
  int realisations = 5;  // B used by the mhat/pvalue helpers
  int test_size = 500;
};

void validate(const TrajectoryGrid& grid);

struct TrajectoryCell {
  int n_l = 0;
  int m = 0;
  int repeat = 0;
  CriterionKind criterion = CriterionKind::Kld;
  double value = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
};

struct TrajectoryResult {
  std::vector<int> n_values;
  std::vector<int> m_values;
  int repeats = 0;
  std::vector<CriterionKind> criteria;
  std::vector<TrajectoryCell> cells;  // dense, ordered (n, m, repeat, criterion)

  const TrajectoryCell& at(int n_index, int m_index, int repeat, int crit_index) const;
  /// Mean over repeats; ignores failed cells.
  double mean(int n_index, int m_index, int crit_index) const;
  /// Baseline (m = 0) curve for one criterion, indexed like n_values.
  std::vector<double> baseline(int crit_index) const;
  int n_index_of(int n_l) const;
  int crit_index_of(CriterionKind kind) const;

  void write_csv(const std::filesystem::path& path) const;
  static TrajectoryResult read_csv(const std::filesystem::path& path);
};

/// Data generation for a sweep: simulate from a known Gaussian F0, or
/// subsample fixed pools (real rows and test rows) per repeat.
struct DataSource {
  std::optional<KnownGaussian> f0;
  std::optional<Dataset> real_pool;
  std::optional<Dataset> test_pool;

  Dataset draw_real(std::size_t n, Rng& rng) const;
  Dataset draw_test(std::size_t n, Rng& rng) const;
};

struct TrajectoryExperiment {
  FitSpec fit;
  DataSource data;
  SynthSource synth;
  EvalSpec eval;
};

/// Fills the whole (n_L, m, repeat, criterion) table. Within a repeat the
/// synthetic stream is drawn once and prefixes z_{1:m} are used, so curves in
/// m are learning trajectories of one stream. Per-cell failures are recorded
/// and the sweep continues. Deterministic for any `jobs`.
TrajectoryResult run_trajectory(const TrajectoryGrid& grid,
                                const TrajectoryExperiment& experiment,
                                std::uint64_t seed, int jobs = 1);

/// Builds keeper data for a mechanism source from the experiment's F0
/// (size = max m requested), seeded independently of all cell seeds.
SynthSource make_mechanism_source(const LaplaceMechanism& mech, const KnownGaussian& f0,
                                  std::size_t keeper_size, std::uint64_t seed);

struct MhatCurvePoint {
  int m = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
};

struct MhatResult {
  int mhat = 0;
  CriterionKind criterion = CriterionKind::LogScore;
  std::vector<MhatCurvePoint> curve;
};

/// Criterion-optimal synthetic quantity: for each m, fit on (real + z^(b))
/// for B realisations, average the criterion over the test set and the
/// realisations, and take the best m (ties go to the smallest m; m = 0 is
/// always a candidate).
MhatResult estimate_mhat(const FitSpec& fit, const Dataset& real,
                         const SynthSource& synth, const std::vector<int>& m_grid,
                         int realisations, const Dataset& test, const EvalSpec& eval,
                         CriterionKind criterion, std::uint64_t seed);

/// Single-stream variant: prefixes of one ordered realisation. The result
/// depends on the stream order by construction.
MhatResult mhat_single_stream(const FitSpec& fit, const Dataset& real,
                              const Dataset& stream, const std::vector<int>& m_grid,
                              const Dataset& test, const EvalSpec& eval,
                              CriterionKind criterion, std::uint64_t seed);

struct BootstrapSpec {
  int n_curves = 100;
  int b_boot = 200;
};

struct NEffectiveResult {
  double mean = 0.0;
  double variance = 0.0;
  bool censored = false;    // some replicate matched at the largest available t
  std::vector<int> t_grid;  // candidate extra-real-sample offsets
};

/// Bootstrapped effective real-sample gain at n_L: per replicate, resample
/// repeat indices, average the trajectory at n_L, take its best value over m,
/// and match it against the resampled real-only baseline at n_L + t.
NEffectiveResult n_effective(const TrajectoryResult& traj, int n_l,
                             CriterionKind criterion, const BootstrapSpec& boot,
                             std::uint64_t seed);

struct PvalueResult {
  std::vector<double> p_values;  // one per split
  std::vector<int> mhat_per_split;
  double aggregated = 1.0;
  double alpha = 0.05;
  bool use_synthetic = false;
  int mhat_full = 0;  // re-estimated on the full test set when the test rejects
  bool zero_variance_flagged = false;
};

/// min(1, Median(2 p_1, ..., 2 p_K)).
double aggregate_pvalues(std::vector<double> p_values);

/// Splits the test set K times; one half estimates mhat, the other half
/// scores per-point log-score differences between the mhat fit and the
/// m = 0 fit, giving a one-sided normal-approximation p-value per split.
PvalueResult synthetic_use_pvalue(const FitSpec& fit, const Dataset& real,
                                  const SynthSource& synth,
                                  const std::vector<int>& m_grid, int realisations,
                                  const Dataset& test, const EvalSpec& eval, int splits,
                                  double alpha, std::uint64_t seed);

}  // namespace synlearn
