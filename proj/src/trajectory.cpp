#include "synlearn/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "synlearn/parallel.hpp"

namespace synlearn {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool better(double candidate, double incumbent, Orientation orientation) {
  if (std::isnan(candidate)) return false;
  if (std::isnan(incumbent)) return true;
  return orientation == Orientation::LowerBetter ? candidate < incumbent
                                                 : candidate > incumbent;
}

std::vector<int> normalized_m_grid(std::vector<int> m_grid) {
  m_grid.push_back(0);
  std::sort(m_grid.begin(), m_grid.end());
  m_grid.erase(std::unique(m_grid.begin(), m_grid.end()), m_grid.end());
  if (m_grid.front() < 0) {
    throw std::invalid_argument("m grid values must be non-negative");
  }
  return m_grid;
}

}  // namespace

SynthSource SynthSource::mechanism(LaplaceMechanism mech, Dataset keeper) {
  validate(mech);
  if (keeper.task() != Task::Gaussian) {
    throw std::invalid_argument("SynthSource: mechanism keeper data must be scalar");
  }
  SynthSource s;
  s.mech_ = mech;
  s.data_ = std::move(keeper);
  return s;
}

SynthSource SynthSource::pool(Dataset pool) {
  SynthSource s;
  s.data_ = std::move(pool);
  s.data_.set_provenance(Provenance::Synthetic);
  return s;
}

std::size_t SynthSource::capacity() const { return data_.size(); }

Dataset SynthSource::draw(std::size_t m, Rng& rng) const {
  if (m > data_.size()) {
    throw std::invalid_argument(
        mech_ ? "SynthSource: mechanism allows at most one synthetic row per real row "
                "(m <= n)"
              : "SynthSource: synthetic pool exhausted (m exceeds pool size)");
  }
  Dataset subset(data_.task(), Provenance::Synthetic);
  for (std::size_t idx : rng.sample_without_replacement(data_.size(), m)) {
    subset.push_back(data_[idx]);
  }
  if (!mech_) return subset;
  return privatise(*mech_, subset, rng.next_u64());
}

Dataset SynthSource::stream(Rng& rng) const { return draw(data_.size(), rng); }

SynthSource make_mechanism_source(const LaplaceMechanism& mech, const KnownGaussian& f0,
                                  std::size_t keeper_size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(keeper_size);
  for (auto& v : values) v = rng.normal(f0.mu0, f0.sigma0);
  return SynthSource::mechanism(mech, Dataset::from_values(values));
}

Dataset DataSource::draw_real(std::size_t n, Rng& rng) const {
  if (f0) {
    std::vector<double> values(n);
    for (auto& v : values) v = rng.normal(f0->mu0, f0->sigma0);
    return Dataset::from_values(values);
  }
  if (!real_pool) throw std::invalid_argument("DataSource: no real data source");
  if (n > real_pool->size()) {
    throw std::invalid_argument("DataSource: real pool smaller than requested n");
  }
  Dataset out(real_pool->task(), Provenance::Real);
  for (std::size_t idx : rng.sample_without_replacement(real_pool->size(), n)) {
    out.push_back((*real_pool)[idx]);
  }
  return out;
}

Dataset DataSource::draw_test(std::size_t n, Rng& rng) const {
  if (test_pool) {
    if (n >= test_pool->size()) return *test_pool;
    Dataset out(test_pool->task(), Provenance::Real);
    for (std::size_t idx : rng.sample_without_replacement(test_pool->size(), n)) {
      out.push_back((*test_pool)[idx]);
    }
    return out;
  }
  if (f0) {
    std::vector<double> values(n);
    for (auto& v : values) v = rng.normal(f0->mu0, f0->sigma0);
    return Dataset::from_values(values);
  }
  throw std::invalid_argument("DataSource: no test data source");
}

double evaluate_criterion(CriterionKind kind, const PredictiveModel& predictive,
                          const Dataset& test, const EvalSpec& eval, Rng& rng) {
  switch (kind) {
    case CriterionKind::LogScore: {
      return log_score([&](const Observation& o) { return predictive.log_predictive(o); },
                       test)
          .value;
    }
    case CriterionKind::Kld: {
      if (!eval.f0) throw std::invalid_argument("KLD criterion needs a known F0");
      const QuadSpec quad =
          eval.kld_quad.step > 0.0 ? eval.kld_quad : default_kld_quad(*eval.f0);
      return kld_to_f0(
                 *eval.f0,
                 [&](double x) { return predictive.log_predictive(Observation::scalar(x)); },
                 quad)
          .value;
    }
    case CriterionKind::Wasserstein1: {
      std::vector<double> from_predictive(test.size());
      for (auto& v : from_predictive) v = predictive.sample_scalar(rng);
      return wasserstein1(std::move(from_predictive), test.values());
    }
    case CriterionKind::Auroc: {
      std::vector<double> scores;
      std::vector<int> labels;
      scores.reserve(test.size());
      labels.reserve(test.size());
      for (const auto& o : test.observations()) {
        scores.push_back(predictive.prob_label1(o.features));
        labels.push_back(o.label);
      }
      return auroc(scores, labels);
    }
  }
  throw std::logic_error("evaluate_criterion: unknown criterion");
}

void validate(const TrajectoryGrid& grid) {
  if (grid.n_values.empty() || grid.m_values.empty()) {
    throw std::invalid_argument("TrajectoryGrid: empty n or m grid");
  }
  if (grid.repeats < 2) {
    throw std::invalid_argument("TrajectoryGrid: at least 2 repeats are required");
  }
  if (grid.realisations < 1 || grid.test_size < 1) {
    throw std::invalid_argument("TrajectoryGrid: invalid realisations/test size");
  }
}

const TrajectoryCell& TrajectoryResult::at(int n_index, int m_index, int repeat,
                                           int crit_index) const {
  const std::size_t m_count = m_values.size();
  const std::size_t c_count = criteria.size();
  const std::size_t idx =
      ((static_cast<std::size_t>(n_index) * m_count + m_index) * repeats + repeat) *
          c_count +
      crit_index;
  return cells.at(idx);
}

double TrajectoryResult::mean(int n_index, int m_index, int crit_index) const {
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r < repeats; ++r) {
    const auto& cell = at(n_index, m_index, r, crit_index);
    if (!cell.failed && std::isfinite(cell.value)) {
      acc += cell.value;
      ++count;
    }
  }
  return count > 0 ? acc / count : kNan;
}

std::vector<double> TrajectoryResult::baseline(int crit_index) const {
  const auto it = std::find(m_values.begin(), m_values.end(), 0);
  if (it == m_values.end()) throw std::logic_error("trajectory lacks the m=0 column");
  const int m0 = static_cast<int>(it - m_values.begin());
  std::vector<double> out(n_values.size());
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    out[i] = mean(static_cast<int>(i), m0, crit_index);
  }
  return out;
}

int TrajectoryResult::n_index_of(int n_l) const {
  const auto it = std::find(n_values.begin(), n_values.end(), n_l);
  if (it == n_values.end()) {
    throw std::invalid_argument("n_l " + std::to_string(n_l) + " not in the grid");
  }
  return static_cast<int>(it - n_values.begin());
}

int TrajectoryResult::crit_index_of(CriterionKind kind) const {
  const auto it = std::find(criteria.begin(), criteria.end(), kind);
  if (it == criteria.end()) {
    throw std::invalid_argument("criterion not present in trajectory result");
  }
  return static_cast<int>(it - criteria.begin());
}

void TrajectoryResult::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "n_l,m,repeat,criterion,value,seed\n";
  for (const auto& cell : cells) {
    out << cell.n_l << ',' << cell.m << ',' << cell.repeat << ','
        << to_string(cell.criterion) << ','
        << format_double(cell.failed ? kNan : cell.value) << ',' << cell.seed << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

TrajectoryResult TrajectoryResult::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("n_l,", 0) != 0) {
    throw std::runtime_error("not a trajectory csv: " + path.string());
  }
  std::vector<TrajectoryCell> cells;
  std::set<int> ns, ms, rs;
  std::vector<CriterionKind> criteria;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    TrajectoryCell cell;
    std::getline(ss, field, ',');
    cell.n_l = std::stoi(field);
    std::getline(ss, field, ',');
    cell.m = std::stoi(field);
    std::getline(ss, field, ',');
    cell.repeat = std::stoi(field);
    std::getline(ss, field, ',');
    cell.criterion = criterion_from_string(field);
    std::getline(ss, field, ',');
    cell.value = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    cell.seed = std::strtoull(field.c_str(), nullptr, 10);
    cell.failed = std::isnan(cell.value);
    ns.insert(cell.n_l);
    ms.insert(cell.m);
    rs.insert(cell.repeat);
    if (std::find(criteria.begin(), criteria.end(), cell.criterion) == criteria.end()) {
      criteria.push_back(cell.criterion);
    }
    cells.push_back(std::move(cell));
  }
  TrajectoryResult result;
  result.n_values.assign(ns.begin(), ns.end());
  result.m_values.assign(ms.begin(), ms.end());
  result.repeats = static_cast<int>(rs.size());
  result.criteria = criteria;
  result.cells.resize(result.n_values.size() * result.m_values.size() * result.repeats *
                      criteria.size());
  for (const auto& cell : cells) {
    const int ni = result.n_index_of(cell.n_l);
    const int mi = static_cast<int>(
        std::find(result.m_values.begin(), result.m_values.end(), cell.m) -
        result.m_values.begin());
    const int ci = result.crit_index_of(cell.criterion);
    const std::size_t idx =
        ((static_cast<std::size_t>(ni) * result.m_values.size() + mi) * result.repeats +
         cell.repeat) *
            criteria.size() +
        ci;
    result.cells.at(idx) = cell;
  }
  return result;
}

TrajectoryResult run_trajectory(const TrajectoryGrid& grid,
                                const TrajectoryExperiment& experiment,
                                std::uint64_t seed, int jobs) {
  validate(grid);
  const std::vector<int> m_grid = normalized_m_grid(grid.m_values);
  const std::size_t max_m = static_cast<std::size_t>(m_grid.back());
  if (max_m > experiment.synth.capacity()) {
    throw std::invalid_argument("run_trajectory: m grid exceeds the synthetic capacity");
  }

  TrajectoryResult result;
  result.n_values = grid.n_values;
  result.m_values = m_grid;
  result.repeats = grid.repeats;
  result.criteria = experiment.eval.criteria;
  const std::size_t n_count = grid.n_values.size();
  const std::size_t m_count = m_grid.size();
  const std::size_t c_count = result.criteria.size();
  result.cells.resize(n_count * m_count * grid.repeats * c_count);

  const SeedSpec spec{seed};
  auto run_item = [&](std::size_t item) {
    const int ni = static_cast<int>(item / grid.repeats);
    const int rep = static_cast<int>(item % grid.repeats);
    const int n_l = grid.n_values[ni];
    const std::string tag = "n=" + std::to_string(n_l);

    Rng data_rng(derive_seed(spec, "traj/data/" + tag, rep, 0));
    Rng test_rng(derive_seed(spec, "traj/test/" + tag, rep, 0));
    Rng stream_rng(derive_seed(spec, "traj/stream/" + tag, rep, 0));

    std::string item_error;
    Dataset real, test, stream;
    try {
      real = experiment.data.draw_real(n_l, data_rng);
      test = experiment.data.draw_test(grid.test_size, test_rng);
      stream = experiment.synth.stream(stream_rng);
    } catch (const std::exception& e) {
      item_error = e.what();
    }

    for (std::size_t mi = 0; mi < m_count; ++mi) {
      const int m = m_grid[mi];
      const std::string cell_tag = tag + "/m=" + std::to_string(m);
      const std::uint64_t fit_seed = derive_seed(spec, "traj/fit/" + cell_tag, rep, 0);
      Rng eval_rng(derive_seed(spec, "traj/eval/" + cell_tag, rep, 0));

      std::optional<PredictiveModel> predictive;
      std::string fit_error = item_error;
      if (fit_error.empty()) {
        try {
          Dataset prefix(stream.task(), Provenance::Synthetic);
          for (int i = 0; i < m; ++i) prefix.push_back(stream[i]);
          PosteriorTarget target{experiment.fit.model, experiment.fit.prior,
                                 experiment.fit.loss_real, real,
                                 experiment.fit.loss_synth, std::move(prefix)};
          const PosteriorSamples post =
              sample_posterior(target, experiment.fit.mcmc, fit_seed);
          predictive = PredictiveModel::from_posterior(
              experiment.fit.model, post, experiment.eval.predictive_draws);
        } catch (const std::exception& e) {
          fit_error = e.what();
        }
      }

      for (std::size_t ci = 0; ci < c_count; ++ci) {
        TrajectoryCell cell;
        cell.n_l = n_l;
        cell.m = m;
        cell.repeat = rep;
        cell.criterion = result.criteria[ci];
        cell.seed = fit_seed;
        if (!fit_error.empty()) {
          cell.failed = true;
          cell.error = fit_error;
          cell.value = kNan;
        } else {
          try {
            cell.value = evaluate_criterion(cell.criterion, *predictive, test,
                                            experiment.eval, eval_rng);
          } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
            cell.value = kNan;
          }
        }
        const std::size_t idx =
            ((static_cast<std::size_t>(ni) * m_count + mi) * grid.repeats + rep) *
                c_count +
            ci;
        result.cells[idx] = std::move(cell);
      }
    }
  };

  parallel_for(n_count * grid.repeats, jobs, run_item);
  return result;
}

namespace {

struct FitScorer {
  const FitSpec* fit;
  const Dataset* real;
  const EvalSpec* eval;

  PredictiveModel fit_once(const Dataset& synth, std::uint64_t seed) const {
    PosteriorTarget target{fit->model, fit->prior, fit->loss_real, *real,
                           fit->loss_synth, synth};
    const PosteriorSamples post = sample_posterior(target, fit->mcmc, seed);
    return PredictiveModel::from_posterior(fit->model, post, eval->predictive_draws);
  }
};

}  // namespace

MhatResult estimate_mhat(const FitSpec& fit, const Dataset& real,
                         const SynthSource& synth, const std::vector<int>& m_grid,
                         int realisations, const Dataset& test, const EvalSpec& eval,
                         CriterionKind criterion, std::uint64_t seed) {
  if (realisations < 1) throw std::invalid_argument("estimate_mhat: realisations >= 1");
  if (test.empty()) throw std::invalid_argument("estimate_mhat: empty test set");
  const std::vector<int> grid = normalized_m_grid(m_grid);
  if (static_cast<std::size_t>(grid.back()) > synth.capacity()) {
    throw std::invalid_argument("estimate_mhat: m grid exceeds the synthetic capacity");
  }
  const SeedSpec spec{seed};
  const FitScorer scorer{&fit, &real, &eval};
  const Orientation orientation = orientation_of(criterion);

  MhatResult result;
  result.criterion = criterion;
  int best_m = 0;
  double best_value = kNan;
  for (int m : grid) {
    const std::string tag = "m=" + std::to_string(m);
    const int b_count = m == 0 ? 1 : realisations;  // m=0 refits are identical
    std::vector<double> scores(b_count);
    for (int b = 0; b < b_count; ++b) {
      Rng draw_rng(derive_seed(spec, "mhat/draw/" + tag, b, 0));
      const Dataset z = m == 0 ? Dataset(real.task(), Provenance::Synthetic)
                               : synth.draw(m, draw_rng);
      const auto predictive =
          scorer.fit_once(z, derive_seed(spec, "mhat/fit/" + tag, b, 0));
      Rng eval_rng(derive_seed(spec, "mhat/eval/" + tag, b, 0));
      scores[b] = evaluate_criterion(criterion, predictive, test, eval, eval_rng);
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / b_count;
    double sd = 0.0;
    for (double s : scores) sd += (s - mean) * (s - mean);
    sd = b_count > 1 ? std::sqrt(sd / (b_count - 1)) : 0.0;
    result.curve.push_back({m, mean, sd / std::sqrt(static_cast<double>(b_count))});
    if (better(mean, best_value, orientation)) {
      best_value = mean;
      best_m = m;
    }
  }
  result.mhat = best_m;
  return result;
}

MhatResult mhat_single_stream(const FitSpec& fit, const Dataset& real,
                              const Dataset& stream, const std::vector<int>& m_grid,
                              const Dataset& test, const EvalSpec& eval,
                              CriterionKind criterion, std::uint64_t seed) {
  std::vector<int> grid = normalized_m_grid(m_grid);
  while (!grid.empty() && static_cast<std::size_t>(grid.back()) > stream.size()) {
    grid.pop_back();
  }
  if (grid.empty()) grid.push_back(0);
  const SeedSpec spec{seed};
  const FitScorer scorer{&fit, &real, &eval};
  const Orientation orientation = orientation_of(criterion);

  MhatResult result;
  result.criterion = criterion;
  int best_m = 0;
  double best_value = kNan;
  for (int m : grid) {
    Dataset prefix(stream.task(), Provenance::Synthetic);
    for (int i = 0; i < m; ++i) prefix.push_back(stream[i]);
    const std::string tag = "m=" + std::to_string(m);
    const auto predictive =
        scorer.fit_once(prefix, derive_seed(spec, "mhat1/fit/" + tag, 0, 0));
    Rng eval_rng(derive_seed(spec, "mhat1/eval/" + tag, 0, 0));
    const double value = evaluate_criterion(criterion, predictive, test, eval, eval_rng);
    result.curve.push_back({m, value, 0.0});
    if (better(value, best_value, orientation)) {
      best_value = value;
      best_m = m;
    }
  }
  result.mhat = best_m;
  return result;
}

NEffectiveResult n_effective(const TrajectoryResult& traj, int n_l,
                             CriterionKind criterion, const BootstrapSpec& boot,
                             std::uint64_t seed) {
  if (boot.n_curves < 1 || boot.b_boot < 1) {
    throw std::invalid_argument("n_effective: invalid bootstrap spec");
  }
  const int ni = traj.n_index_of(n_l);
  const int ci = traj.crit_index_of(criterion);
  const Orientation orientation = orientation_of(criterion);
  const auto m0_it = std::find(traj.m_values.begin(), traj.m_values.end(), 0);
  if (m0_it == traj.m_values.end()) {
    throw std::invalid_argument("n_effective: trajectory lacks the m=0 baseline");
  }
  const int m0 = static_cast<int>(m0_it - traj.m_values.begin());

  std::vector<int> candidate_n;  // baseline points at n >= n_l
  for (int n : traj.n_values) {
    if (n >= n_l) candidate_n.push_back(n);
  }
  if (candidate_n.empty()) {
    throw std::invalid_argument("n_effective: baseline does not cover n_l");
  }

  NEffectiveResult result;
  for (int n : candidate_n) result.t_grid.push_back(n - n_l);

  Rng rng(seed);
  std::vector<double> samples;
  samples.reserve(boot.b_boot);
  bool censored = false;
  for (int b = 0; b < boot.b_boot; ++b) {
    // resample repeat indices; a single replicate degenerates to the plug-in
    std::vector<int> reps;
    if (boot.b_boot == 1) {
      reps.resize(traj.repeats);
      std::iota(reps.begin(), reps.end(), 0);
    } else {
      reps.resize(boot.n_curves);
      for (auto& r : reps) r = static_cast<int>(rng.uniform_index(traj.repeats));
    }
    auto resampled_mean = [&](int n_index, int m_index) {
      double acc = 0.0;
      int count = 0;
      for (int r : reps) {
        const auto& cell = traj.at(n_index, m_index, r, ci);
        if (!cell.failed && std::isfinite(cell.value)) {
          acc += cell.value;
          ++count;
        }
      }
      return count > 0 ? acc / count : kNan;
    };

    double best = kNan;
    for (std::size_t mi = 0; mi < traj.m_values.size(); ++mi) {
      const double v = resampled_mean(ni, static_cast<int>(mi));
      if (better(v, best, orientation)) best = v;
    }
    double best_gap = kNan;
    int best_t = 0;
    for (std::size_t k = 0; k < candidate_n.size(); ++k) {
      const int n_index = traj.n_index_of(candidate_n[k]);
      const double baseline = resampled_mean(n_index, m0);
      const double gap = std::abs(baseline - best);
      if (std::isnan(best_gap) || gap < best_gap) {
        best_gap = gap;
        best_t = result.t_grid[k];
      }
    }
    if (best_t == result.t_grid.back() && result.t_grid.size() > 1) censored = true;
    samples.push_back(static_cast<double>(best_t));
  }
  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  result.mean = mean;
  result.variance = samples.size() > 1 ? var / (samples.size() - 1) : 0.0;
  result.censored = censored;
  return result;
}

double aggregate_pvalues(std::vector<double> p_values) {
  if (p_values.empty()) throw std::invalid_argument("aggregate_pvalues: empty list");
  for (auto& p : p_values) {
    if (!(p >= 0.0) || p > 1.0) {
      throw std::invalid_argument("aggregate_pvalues: p-values must lie in [0,1]");
    }
    p *= 2.0;
  }
  std::sort(p_values.begin(), p_values.end());
  const std::size_t n = p_values.size();
  const double median = n % 2 == 1
                            ? p_values[n / 2]
                            : 0.5 * (p_values[n / 2 - 1] + p_values[n / 2]);
  return std::min(1.0, median);
}

PvalueResult synthetic_use_pvalue(const FitSpec& fit, const Dataset& real,
                                  const SynthSource& synth,
                                  const std::vector<int>& m_grid, int realisations,
                                  const Dataset& test, const EvalSpec& eval, int splits,
                                  double alpha, std::uint64_t seed) {
  if (splits < 1) throw std::invalid_argument("synthetic_use_pvalue: splits >= 1");
  const std::size_t half = test.size() / 2;
  if (half < 20) {
    throw std::invalid_argument(
        "synthetic_use_pvalue: need at least 20 test points per split half");
  }
  const SeedSpec spec{seed};
  const FitScorer scorer{&fit, &real, &eval};

  PvalueResult result;
  result.alpha = alpha;
  for (int k = 0; k < splits; ++k) {
    Rng split_rng(derive_seed(spec, "pvalue/split", k, 0));
    std::vector<std::size_t> order(test.size());
    std::iota(order.begin(), order.end(), 0);
    split_rng.shuffle(order);

    Dataset estimate_half(test.task(), Provenance::Real);
    Dataset score_half(test.task(), Provenance::Real);
    for (std::size_t i = 0; i < half; ++i) estimate_half.push_back(test[order[i]]);
    for (std::size_t i = half; i < 2 * half; ++i) score_half.push_back(test[order[i]]);

    const MhatResult mhat =
        estimate_mhat(fit, real, synth, m_grid, realisations, estimate_half, eval,
                      CriterionKind::LogScore, derive_seed(spec, "pvalue/mhat", k, 0));
    result.mhat_per_split.push_back(mhat.mhat);

    // Ensemble predictive at a given m; m and the split index fix the seeds,
    // so mhat == 0 reproduces the m = 0 fit exactly and d vanishes.
    auto ensemble_at = [&](int m) {
      const int b_count = m == 0 ? 1 : realisations;
      std::vector<PredictiveModel> members;
      members.reserve(b_count);
      const std::string tag = "k=" + std::to_string(k) + "/m=" + std::to_string(m);
      for (int b = 0; b < b_count; ++b) {
        Rng draw_rng(derive_seed(spec, "pvalue/draw/" + tag, b, 0));
        const Dataset z = m == 0 ? Dataset(real.task(), Provenance::Synthetic)
                                 : synth.draw(m, draw_rng);
        members.push_back(
            scorer.fit_once(z, derive_seed(spec, "pvalue/fit/" + tag, b, 0)));
      }
      return PredictiveEnsemble(std::move(members));
    };

    const PredictiveEnsemble with_synth = ensemble_at(mhat.mhat);
    const PredictiveEnsemble without = ensemble_at(0);
    std::vector<double> d(score_half.size());
    for (std::size_t j = 0; j < score_half.size(); ++j) {
      const auto& o = score_half[j];
      d[j] = -with_synth.averaged_log_predictive(o) - (-without.averaged_log_predictive(o));
    }
    const double mean_d = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
    double sd = 0.0;
    for (double v : d) sd += (v - mean_d) * (v - mean_d);
    sd = d.size() > 1 ? std::sqrt(sd / (d.size() - 1)) : 0.0;
    double p;
    if (sd == 0.0) {
      p = mean_d >= 0.0 ? 1.0 : std::numeric_limits<double>::min();
      result.zero_variance_flagged = true;
    } else {
      const double t = mean_d / (sd / std::sqrt(static_cast<double>(d.size())));
      p = normal_cdf(t);
    }
    result.p_values.push_back(p);
  }

  result.aggregated = aggregate_pvalues(result.p_values);
  result.use_synthetic = result.aggregated < alpha;
  if (result.use_synthetic) {
    result.mhat_full =
        estimate_mhat(fit, real, synth, m_grid, realisations, test, eval,
                      CriterionKind::LogScore, derive_seed(spec, "pvalue/mhat-full", 0, 0))
            .mhat;
  }
  return result;
}

}  // namespace synlearn
