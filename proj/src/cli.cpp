#include "synlearn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "synlearn/diagnostics.hpp"
#include "synlearn/predictive.hpp"

namespace synlearn {

using nlohmann::json;

namespace {

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

std::filesystem::path ensure_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

Dataset load_real_data(const ExperimentConfig& cfg) {
  if (!cfg.real_csv) {
    throw std::invalid_argument("this command needs real data (real_csv)");
  }
  return load_csv(*cfg.real_csv, cfg.task, Provenance::Real);
}

/// Synthetic source shared by the sweep commands: either the configured
/// mechanism over keeper data simulated from F0, or the ingested pool.
SynthSource build_synth_source(const ExperimentConfig& cfg, std::size_t capacity) {
  if (cfg.synthetic_csv) {
    return SynthSource::pool(load_csv(*cfg.synthetic_csv, cfg.task, Provenance::Synthetic));
  }
  if (!cfg.mechanism) {
    throw std::invalid_argument("config needs a mechanism or a synthetic_csv source");
  }
  if (!cfg.f0) {
    throw std::invalid_argument(
        "a mechanism source without real keeper data needs f0 to simulate from");
  }
  return make_mechanism_source(*cfg.mechanism, *cfg.f0, capacity,
                               derive_seed(SeedSpec{cfg.seed}, "keeper", 0, 0));
}

DataSource build_data_source(const ExperimentConfig& cfg) {
  DataSource src;
  src.f0 = cfg.f0;
  if (cfg.real_csv) src.real_pool = load_csv(*cfg.real_csv, cfg.task, Provenance::Real);
  if (cfg.test_csv) src.test_pool = load_csv(*cfg.test_csv, cfg.task, Provenance::Real);
  if (!src.f0 && !src.real_pool) {
    throw std::invalid_argument("config needs f0 or real_csv to draw learner data");
  }
  return src;
}

int default_n_l(const ExperimentConfig& cfg) {
  return cfg.pvalue_n_l > 0 ? cfg.pvalue_n_l : cfg.grid.n_values.front();
}

json mhat_to_json(const MhatResult& r) {
  json curve = json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"m", p.m}, {"mean", p.mean}, {"stderr", p.stderr_mean}});
  }
  return {{"criterion", to_string(r.criterion)}, {"mhat", r.mhat}, {"curve", curve}};
}

}  // namespace

int cmd_generate(const ExperimentConfig& cfg) {
  if (cfg.task != Task::Gaussian) {
    throw std::invalid_argument("generate: the Laplace mechanism applies to scalar data");
  }
  if (!cfg.mechanism) throw std::invalid_argument("generate: config needs a mechanism");
  const Dataset real = load_real_data(cfg);
  const std::size_t m = cfg.generate_m.value_or(real.size());
  if (m > real.size()) {
    throw std::invalid_argument("generate: m exceeds the number of real rows (m <= n)");
  }
  Rng rng(derive_seed(SeedSpec{cfg.seed}, "generate", 0, 0));
  Dataset subset(Task::Gaussian, Provenance::Real);
  for (std::size_t idx : rng.sample_without_replacement(real.size(), m)) {
    subset.push_back(real[idx]);
  }
  const Dataset synthetic = privatise(*cfg.mechanism, subset, rng.next_u64());

  const auto out = ensure_out_dir(cfg);
  write_csv(synthetic, out / "synthetic.csv");
  write_json({{"epsilon", epsilon_of(*cfg.mechanism)},
              {"lambda", cfg.mechanism->lambda},
              {"lower", cfg.mechanism->lower},
              {"upper", cfg.mechanism->upper},
              {"n", synthetic.size()}},
             out / "generate_report.json");
  std::cout << "wrote " << (out / "synthetic.csv").string() << " (epsilon="
            << epsilon_of(*cfg.mechanism) << ")\n";
  return 0;
}

int cmd_fit(const ExperimentConfig& cfg) {
  Dataset real(cfg.task, Provenance::Real);
  if (cfg.real_csv) real = load_csv(*cfg.real_csv, cfg.task, Provenance::Real);
  Dataset synth(cfg.task, Provenance::Synthetic);
  if (cfg.synthetic_csv) {
    synth = load_csv(*cfg.synthetic_csv, cfg.task, Provenance::Synthetic);
  }
  const PosteriorTarget target{cfg.model, cfg.prior, cfg.loss_real, real,
                               cfg.loss_synth, synth};
  const PosteriorSamples post = sample_posterior(target, cfg.mcmc, cfg.seed);

  const auto out = ensure_out_dir(cfg);
  const auto names = param_names(cfg.model);
  json params = json::object();
  for (std::size_t p = 0; p < names.size(); ++p) {
    auto series = post.component(cfg.model, static_cast<int>(p));
    std::vector<double> pooled;
    for (const auto& c : series) pooled.insert(pooled.end(), c.begin(), c.end());
    std::sort(pooled.begin(), pooled.end());
    auto quantile = [&](double q) {
      const double pos = q * (pooled.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const double frac = pos - lo;
      return lo + 1 < pooled.size() ? pooled[lo] * (1 - frac) + pooled[lo + 1] * frac
                                    : pooled.back();
    };
    params[names[p]] = {{"mean", pooled_mean(series)},
                        {"sd", pooled_sd(series)},
                        {"q05", quantile(0.05)},
                        {"q25", quantile(0.25)},
                        {"q50", quantile(0.50)},
                        {"q75", quantile(0.75)},
                        {"q95", quantile(0.95)},
                        {"rhat", post.rhat[p]}};
  }
  write_json({{"parameters", params},
              {"acceptance_rate", post.acceptance_rate},
              {"divergences", post.divergences},
              {"seed", post.seed},
              {"chains", cfg.mcmc.chains},
              {"samples_per_chain", cfg.mcmc.samples_per_chain},
              {"warmup", cfg.mcmc.warmup}},
             out / "posterior_summary.json");

  std::ofstream draws(out / "draws.csv");
  draws << "chain,iteration";
  for (const auto& n : names) draws << ',' << n;
  draws << ",log_posterior\n";
  for (std::size_t c = 0; c < post.draws.size(); ++c) {
    for (std::size_t i = 0; i < post.draws[c].size(); ++i) {
      draws << c << ',' << i;
      const Theta& t = post.draws[c][i];
      if (std::holds_alternative<LogisticRegression>(cfg.model)) {
        draws << ',' << format_double(t.alpha);
        for (double w : t.weights) draws << ',' << format_double(w);
      } else {
        draws << ',' << format_double(t.mu) << ',' << format_double(t.sigma);
      }
      draws << ',' << format_double(post.log_posterior[c][i]) << '\n';
    }
  }
  std::cout << "wrote " << (out / "posterior_summary.json").string() << "\n";
  return 0;
}

namespace {

TrajectoryExperiment build_experiment(const ExperimentConfig& cfg,
                                      const LossSpec& loss_synth,
                                      const SynthSource& synth) {
  TrajectoryExperiment exp{cfg.fit_spec(loss_synth), build_data_source(cfg), synth,
                           cfg.eval()};
  return exp;
}

std::size_t count_failures(const TrajectoryResult& traj) {
  std::size_t failed = 0;
  for (const auto& c : traj.cells) failed += c.failed ? 1 : 0;
  return failed;
}

void append_plotdata(std::ofstream& out, const std::string& label,
                     const TrajectoryResult& traj) {
  for (std::size_t ni = 0; ni < traj.n_values.size(); ++ni) {
    for (std::size_t mi = 0; mi < traj.m_values.size(); ++mi) {
      for (std::size_t ci = 0; ci < traj.criteria.size(); ++ci) {
        double acc = 0.0, acc2 = 0.0;
        int count = 0;
        for (int r = 0; r < traj.repeats; ++r) {
          const auto& cell = traj.at(static_cast<int>(ni), static_cast<int>(mi), r,
                                     static_cast<int>(ci));
          if (!cell.failed && std::isfinite(cell.value)) {
            acc += cell.value;
            acc2 += cell.value * cell.value;
            ++count;
          }
        }
        const double mean = count > 0 ? acc / count
                                      : std::numeric_limits<double>::quiet_NaN();
        const double var = count > 1 ? std::max(0.0, (acc2 - acc * acc / count) / (count - 1))
                                     : 0.0;
        const double se = count > 1 ? std::sqrt(var / count) : 0.0;
        out << label << ',' << traj.n_values[ni] << ',' << traj.m_values[mi] << ','
            << traj.n_values[ni] + traj.m_values[mi] << ','
            << to_string(traj.criteria[ci]) << ',' << format_double(mean) << ','
            << format_double(se) << ',' << count << '\n';
      }
    }
  }
}

json trajectory_mhat_json(const TrajectoryResult& traj) {
  json by_criterion = json::object();
  for (std::size_t ci = 0; ci < traj.criteria.size(); ++ci) {
    const Orientation orientation = orientation_of(traj.criteria[ci]);
    json by_n = json::object();
    for (std::size_t ni = 0; ni < traj.n_values.size(); ++ni) {
      json curve = json::array();
      int best_m = 0;
      double best = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t mi = 0; mi < traj.m_values.size(); ++mi) {
        double acc = 0.0, acc2 = 0.0;
        int count = 0;
        for (int r = 0; r < traj.repeats; ++r) {
          const auto& cell = traj.at(static_cast<int>(ni), static_cast<int>(mi), r,
                                     static_cast<int>(ci));
          if (!cell.failed && std::isfinite(cell.value)) {
            acc += cell.value;
            acc2 += cell.value * cell.value;
            ++count;
          }
        }
        const double mean = count > 0 ? acc / count
                                      : std::numeric_limits<double>::quiet_NaN();
        const double var = count > 1 ? std::max(0.0, (acc2 - acc * acc / count) / (count - 1))
                                     : 0.0;
        curve.push_back({{"m", traj.m_values[mi]},
                         {"mean", mean},
                         {"stderr", count > 1 ? std::sqrt(var / count) : 0.0}});
        const bool improves = orientation == Orientation::LowerBetter ? mean < best
                                                                      : mean > best;
        if (!std::isnan(mean) && (std::isnan(best) || improves)) {
          best = mean;
          best_m = traj.m_values[mi];
        }
      }
      by_n[std::to_string(traj.n_values[ni])] = {{"mhat", best_m}, {"curve", curve}};
    }
    by_criterion[to_string(traj.criteria[ci])] = by_n;
  }
  return by_criterion;
}

}  // namespace

int cmd_trajectory(const ExperimentConfig& cfg) {
  validate(cfg.grid);
  std::vector<int> m_sorted = cfg.grid.m_values;
  m_sorted.push_back(0);
  const std::size_t max_m =
      static_cast<std::size_t>(*std::max_element(m_sorted.begin(), m_sorted.end()));
  const SynthSource synth = build_synth_source(cfg, max_m);

  const auto out = ensure_out_dir(cfg);
  const TrajectoryExperiment primary = build_experiment(cfg, cfg.loss_synth, synth);
  const TrajectoryResult traj = run_trajectory(cfg.grid, primary, cfg.seed, cfg.jobs);
  traj.write_csv(out / "trajectory.csv");

  std::ofstream plot(out / "branching_plotdata.csv");
  plot << "loss,n_l,m,total_n,criterion,mean,stderr,repeats\n";
  append_plotdata(plot, loss_label(cfg.loss_synth), traj);
  std::size_t failures = count_failures(traj);
  for (const auto& [label, loss] : cfg.compare_losses) {
    const TrajectoryResult extra =
        run_trajectory(cfg.grid, build_experiment(cfg, loss, synth), cfg.seed, cfg.jobs);
    append_plotdata(plot, label, extra);
    failures += count_failures(extra);
  }
  plot.close();

  write_json(trajectory_mhat_json(traj), out / "mhat.json");

  json neff = json::object();
  for (const auto criterion : traj.criteria) {
    json by_n = json::object();
    for (int n_l : traj.n_values) {
      const auto r = n_effective(traj, n_l, criterion, cfg.neff,
                                 derive_seed(SeedSpec{cfg.seed}, "neff", 0, 0));
      by_n[std::to_string(n_l)] = {{"mean", r.mean},
                                   {"variance", r.variance},
                                   {"censored", r.censored}};
    }
    neff[to_string(criterion)] = by_n;
  }
  write_json(neff, out / "neff.json");

  {
    const int n_l = default_n_l(cfg);
    Rng rng(derive_seed(SeedSpec{cfg.seed}, "pvalue/data", 0, 0));
    const DataSource data = build_data_source(cfg);
    const Dataset real = data.draw_real(n_l, rng);
    const Dataset test = data.draw_test(std::max(cfg.grid.test_size, 40), rng);
    const PvalueResult pv = synthetic_use_pvalue(
        cfg.fit_spec(), real, synth, cfg.mhat_m_grid, cfg.grid.realisations, test,
        cfg.eval(), cfg.pvalue_splits, cfg.pvalue_alpha,
        derive_seed(SeedSpec{cfg.seed}, "pvalue", 0, 0));
    write_json({{"n_l", n_l},
                {"p_values", pv.p_values},
                {"mhat_per_split", pv.mhat_per_split},
                {"aggregated", pv.aggregated},
                {"alpha", pv.alpha},
                {"use_synthetic", pv.use_synthetic},
                {"mhat_full", pv.mhat_full},
                {"zero_variance_flagged", pv.zero_variance_flagged}},
               out / "pvalue.json");
  }

  if (failures > 0) {
    std::cerr << failures << " grid cells failed; see trajectory.csv (nan values)\n";
    return 1;
  }
  std::cout << "trajectory outputs written to " << out.string() << "\n";
  return 0;
}

int cmd_mhat(const ExperimentConfig& cfg) {
  const std::size_t max_m = static_cast<std::size_t>(
      *std::max_element(cfg.mhat_m_grid.begin(), cfg.mhat_m_grid.end()));
  const SynthSource synth = build_synth_source(cfg, std::max<std::size_t>(max_m, 1));
  const DataSource data = build_data_source(cfg);
  Rng rng(derive_seed(SeedSpec{cfg.seed}, "mhat/data", 0, 0));
  const Dataset real = data.draw_real(default_n_l(cfg), rng);
  const Dataset test = data.draw_test(cfg.grid.test_size, rng);
  const MhatResult r = estimate_mhat(cfg.fit_spec(), real, synth, cfg.mhat_m_grid,
                                     cfg.grid.realisations, test, cfg.eval(),
                                     cfg.mhat_criterion,
                                     derive_seed(SeedSpec{cfg.seed}, "mhat", 0, 0));
  const auto out = ensure_out_dir(cfg);
  write_json(mhat_to_json(r), out / "mhat.json");
  std::cout << "mhat=" << r.mhat << " (" << to_string(r.criterion) << ")\n";
  return 0;
}

int cmd_neff(const ExperimentConfig& cfg) {
  const auto out = ensure_out_dir(cfg);
  const auto csv = out / "trajectory.csv";
  TrajectoryResult traj;
  if (std::filesystem::exists(csv)) {
    traj = TrajectoryResult::read_csv(csv);
  } else {
    validate(cfg.grid);
    std::vector<int> m_sorted = cfg.grid.m_values;
    const std::size_t max_m = static_cast<std::size_t>(
        *std::max_element(m_sorted.begin(), m_sorted.end()));
    const SynthSource synth = build_synth_source(cfg, max_m);
    traj = run_trajectory(cfg.grid, build_experiment(cfg, cfg.loss_synth, synth),
                          cfg.seed, cfg.jobs);
  }
  json neff = json::object();
  for (const auto criterion : traj.criteria) {
    json by_n = json::object();
    for (int n_l : traj.n_values) {
      const auto r = n_effective(traj, n_l, criterion, cfg.neff,
                                 derive_seed(SeedSpec{cfg.seed}, "neff", 0, 0));
      by_n[std::to_string(n_l)] = {{"mean", r.mean},
                                   {"variance", r.variance},
                                   {"censored", r.censored}};
    }
    neff[to_string(criterion)] = by_n;
  }
  write_json(neff, out / "neff.json");
  std::cout << "wrote " << (out / "neff.json").string() << "\n";
  return 0;
}

int cmd_test(const ExperimentConfig& cfg) {
  const std::size_t max_m = static_cast<std::size_t>(
      *std::max_element(cfg.mhat_m_grid.begin(), cfg.mhat_m_grid.end()));
  const SynthSource synth = build_synth_source(cfg, std::max<std::size_t>(max_m, 1));
  const DataSource data = build_data_source(cfg);
  Rng rng(derive_seed(SeedSpec{cfg.seed}, "pvalue/data", 0, 0));
  const int n_l = default_n_l(cfg);
  const Dataset real = data.draw_real(n_l, rng);
  const Dataset test = data.draw_test(std::max(cfg.grid.test_size, 40), rng);
  const PvalueResult pv = synthetic_use_pvalue(
      cfg.fit_spec(), real, synth, cfg.mhat_m_grid, cfg.grid.realisations, test,
      cfg.eval(), cfg.pvalue_splits, cfg.pvalue_alpha,
      derive_seed(SeedSpec{cfg.seed}, "pvalue", 0, 0));
  const auto out = ensure_out_dir(cfg);
  write_json({{"n_l", n_l},
              {"p_values", pv.p_values},
              {"mhat_per_split", pv.mhat_per_split},
              {"aggregated", pv.aggregated},
              {"alpha", pv.alpha},
              {"use_synthetic", pv.use_synthetic},
              {"mhat_full", pv.mhat_full},
              {"zero_variance_flagged", pv.zero_variance_flagged}},
             out / "pvalue.json");
  std::cout << (pv.use_synthetic ? "use synthetic data" : "do not use synthetic data")
            << " (aggregated p=" << pv.aggregated << ")\n";
  return 0;
}

}  // namespace synlearn
