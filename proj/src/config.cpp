#include "synlearn/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace synlearn {

using nlohmann::json;

namespace {

ModelSpec parse_model(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "truncated_gaussian") {
    TruncatedGaussian m;
    m.halfwidth_sigmas = j.value("halfwidth_sigmas", 3.0);
    return m;
  }
  if (type == "normal_laplace") {
    NormalLaplaceConvolution m;
    m.lambda = j.at("lambda").get<double>();
    return m;
  }
  if (type == "logistic") {
    LogisticRegression m;
    m.d = j.at("d").get<int>();
    return m;
  }
  throw std::invalid_argument("config: unknown model type '" + type + "'");
}

PriorSpec parse_prior(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "nig") {
    NigPrior p;
    p.alpha = j.value("alpha", 2.0);
    p.beta = j.value("beta", 1.0);
    p.mu0 = j.value("mu", 0.0);
    p.sigma0 = j.value("sigma", 1.0);
    return p;
  }
  if (type == "normal") {
    IsotropicNormalPrior p;
    p.scale = j.value("scale", 50.0);
    return p;
  }
  throw std::invalid_argument("config: unknown prior type '" + type + "'");
}

LossSpec parse_loss(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "log") return LogLoss{};
  if (type == "weighted") {
    Weighted l;
    l.w = j.at("w").get<double>();
    return l;
  }
  if (type == "betad") {
    BetaD l;
    l.beta = j.at("beta").get<double>();
    l.w_beta = j.value("w_beta", 1.25);
    return l;
  }
  throw std::invalid_argument("config: unknown loss type '" + type + "'");
}

std::vector<CriterionKind> parse_criteria(const json& j) {
  std::vector<CriterionKind> out;
  for (const auto& name : j) out.push_back(criterion_from_string(name.get<std::string>()));
  if (out.empty()) throw std::invalid_argument("config: empty criteria list");
  return out;
}

}  // namespace

std::string loss_label(const LossSpec& loss) {
  if (std::holds_alternative<LogLoss>(loss)) return "log";
  if (const auto* w = std::get_if<Weighted>(&loss)) {
    std::ostringstream os;
    os << "w=" << w->w;
    return os.str();
  }
  const auto& b = std::get<BetaD>(loss);
  std::ostringstream os;
  os << "betad=" << b.beta;
  return os.str();
}

EvalSpec ExperimentConfig::eval() const {
  EvalSpec e;
  e.criteria = criteria;
  e.f0 = f0;
  if (kld_quad) {
    e.kld_quad = *kld_quad;
  } else if (f0 && scale == Scale::Desk) {
    // trimmed quadrature keeps desk sweeps fast; the kld_to_f0 default stays
    // at +-10 sigma / sigma/500 for direct calls
    e.kld_quad = {f0->mu0 - 8.0 * f0->sigma0, f0->mu0 + 8.0 * f0->sigma0,
                  f0->sigma0 / 200.0};
  }
  e.predictive_draws = predictive_draws;
  return e;
}

FitSpec ExperimentConfig::fit_spec(const LossSpec& loss_synth_override) const {
  FitSpec f;
  f.model = model;
  f.prior = prior;
  f.loss_real = loss_real;
  f.loss_synth = loss_synth_override;
  f.mcmc = mcmc;
  return f;
}

void apply_scale_presets(ExperimentConfig& cfg, bool file_set_mcmc_samples,
                         bool file_set_grid) {
  if (!file_set_mcmc_samples) {
    if (cfg.scale == Scale::Paper) {
      cfg.mcmc.chains = 4;
      cfg.mcmc.samples_per_chain = cfg.task == Task::Logistic ? 6000 : 4000;
      cfg.mcmc.warmup = 500;
    } else {
      cfg.mcmc.chains = 2;
      cfg.mcmc.samples_per_chain = 1500;
      cfg.mcmc.warmup = 300;
    }
  }
  if (!file_set_grid) {
    if (cfg.scale == Scale::Paper) {
      cfg.grid.m_values.clear();
      for (int m = 0; m <= 100; ++m) cfg.grid.m_values.push_back(m);
      for (int m : {120, 140, 160, 180, 200}) cfg.grid.m_values.push_back(m);
      cfg.grid.repeats = 100;
      cfg.grid.realisations = 10;
    } else {
      cfg.grid.m_values.clear();
      for (int m = 0; m <= 10; ++m) cfg.grid.m_values.push_back(m);
      for (int m = 12; m <= 30; m += 3) cfg.grid.m_values.push_back(m);
      for (int m = 35; m <= 60; m += 5) cfg.grid.m_values.push_back(m);
      cfg.grid.repeats = 10;
      cfg.grid.realisations = 5;
    }
  }
  if (cfg.mhat_m_grid.empty()) {
    for (int m : {0, 1, 2, 4, 6, 8, 12, 16, 24, 32}) cfg.mhat_m_grid.push_back(m);
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: parse error in " + path.string() + ": " + e.what());
  }

  ExperimentConfig cfg;
  const std::string task = j.value("task", std::string("gaussian"));
  if (task == "gaussian") {
    cfg.task = Task::Gaussian;
  } else if (task == "logistic") {
    cfg.task = Task::Logistic;
  } else {
    throw std::invalid_argument("config: unknown task '" + task + "'");
  }

  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (cfg.task == Task::Logistic && !std::holds_alternative<LogisticRegression>(cfg.model)) {
    throw std::invalid_argument("config: logistic task needs a logistic model");
  }
  if (j.contains("prior")) {
    cfg.prior = parse_prior(j.at("prior"));
  } else if (cfg.task == Task::Logistic) {
    cfg.prior = IsotropicNormalPrior{};
  }
  if (j.contains("loss_real")) cfg.loss_real = parse_loss(j.at("loss_real"));
  if (j.contains("loss_synth")) cfg.loss_synth = parse_loss(j.at("loss_synth"));
  if (j.contains("compare_losses")) {
    for (const auto& item : j.at("compare_losses")) {
      LossSpec loss = parse_loss(item);
      cfg.compare_losses.emplace_back(loss_label(loss), loss);
    }
  }

  if (j.contains("f0")) {
    cfg.f0 = KnownGaussian{j.at("f0").value("mu", 0.0), j.at("f0").value("sigma", 1.0)};
  }
  if (j.contains("mechanism")) {
    const auto& m = j.at("mechanism");
    cfg.mechanism = LaplaceMechanism{m.value("lower", -3.0), m.value("upper", 3.0),
                                     m.at("lambda").get<double>()};
  }
  if (j.contains("synthetic_csv")) {
    cfg.synthetic_csv = j.at("synthetic_csv").get<std::string>();
  }
  if (cfg.mechanism && cfg.synthetic_csv) {
    throw std::invalid_argument(
        "config: exactly one synthetic source (mechanism xor synthetic_csv)");
  }
  if (j.contains("real_csv")) cfg.real_csv = j.at("real_csv").get<std::string>();
  if (j.contains("test_csv")) cfg.test_csv = j.at("test_csv").get<std::string>();

  bool file_set_grid = false;
  if (j.contains("trajectory")) {
    const auto& t = j.at("trajectory");
    if (t.contains("n_l")) cfg.grid.n_values = t.at("n_l").get<std::vector<int>>();
    if (t.contains("m")) {
      cfg.grid.m_values = t.at("m").get<std::vector<int>>();
      file_set_grid = true;
    }
    if (t.contains("repeats")) {
      cfg.grid.repeats = t.at("repeats").get<int>();
      file_set_grid = true;
    }
    if (t.contains("realisations")) cfg.grid.realisations = t.at("realisations").get<int>();
    if (t.contains("test_size")) cfg.grid.test_size = t.at("test_size").get<int>();
  }
  if (j.contains("criteria")) cfg.criteria = parse_criteria(j.at("criteria"));

  bool file_set_mcmc_samples = false;
  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    if (m.contains("chains")) cfg.mcmc.chains = m.at("chains").get<int>();
    if (m.contains("samples_per_chain")) {
      cfg.mcmc.samples_per_chain = m.at("samples_per_chain").get<int>();
      file_set_mcmc_samples = true;
    }
    if (m.contains("warmup")) {
      cfg.mcmc.warmup = m.at("warmup").get<int>();
      file_set_mcmc_samples = true;
    }
    const std::string sampler = m.value("sampler", std::string("rw"));
    if (sampler == "rw") {
      cfg.mcmc.sampler = SamplerKind::AdaptiveRandomWalk;
    } else if (sampler == "hmc") {
      cfg.mcmc.sampler = SamplerKind::Hmc;
      cfg.mcmc.target_accept = 0.8;
    } else {
      throw std::invalid_argument("config: unknown sampler '" + sampler + "'");
    }
    if (m.contains("target_accept")) cfg.mcmc.target_accept = m.at("target_accept").get<double>();
    if (m.contains("step_size")) cfg.mcmc.hmc_step_size = m.at("step_size").get<double>();
    if (m.contains("leapfrog_steps")) {
      cfg.mcmc.hmc_leapfrog_steps = m.at("leapfrog_steps").get<int>();
    }
    if (m.contains("chains") && cfg.mcmc.chains < 2) {
      throw std::invalid_argument("config: at least 2 chains are required");
    }
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (e.contains("predictive_draws")) {
      cfg.predictive_draws = e.at("predictive_draws").get<std::size_t>();
    }
    if (e.contains("kld_lo") && e.contains("kld_hi") && e.contains("kld_step")) {
      cfg.kld_quad = QuadSpec{e.at("kld_lo").get<double>(), e.at("kld_hi").get<double>(),
                              e.at("kld_step").get<double>()};
    }
  }

  if (j.contains("mhat")) {
    const auto& m = j.at("mhat");
    if (m.contains("m")) cfg.mhat_m_grid = m.at("m").get<std::vector<int>>();
    if (m.contains("criterion")) {
      cfg.mhat_criterion = criterion_from_string(m.at("criterion").get<std::string>());
    }
  }
  if (j.contains("pvalue")) {
    const auto& p = j.at("pvalue");
    cfg.pvalue_splits = p.value("splits", 3);
    cfg.pvalue_alpha = p.value("alpha", 0.05);
    cfg.pvalue_n_l = p.value("n_l", 0);
  }
  if (j.contains("neff")) {
    const auto& n = j.at("neff");
    cfg.neff.n_curves = n.value("n_curves", 100);
    cfg.neff.b_boot = n.value("b_boot", 200);
  }
  if (j.contains("generate") && j.at("generate").contains("m")) {
    cfg.generate_m = j.at("generate").at("m").get<std::size_t>();
  }

  cfg.seed = j.value("seed", 1ULL);
  cfg.jobs = j.value("jobs", 1);
  const std::string scale = j.value("scale", std::string("desk"));
  if (scale == "desk") {
    cfg.scale = Scale::Desk;
  } else if (scale == "paper") {
    cfg.scale = Scale::Paper;
  } else {
    throw std::invalid_argument("config: scale must be desk or paper");
  }
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();

  apply_scale_presets(cfg, file_set_mcmc_samples, file_set_grid);

  validate(cfg.model);
  validate(cfg.prior);
  validate(cfg.loss_real);
  validate(cfg.loss_synth);
  for (const auto& [label, loss] : cfg.compare_losses) validate(loss);
  if (cfg.mechanism) validate(*cfg.mechanism);
  return cfg;
}

}  // namespace synlearn
