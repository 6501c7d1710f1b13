// vbdvs: command-line front end for the library. Subcommands cover DGP
// simulation, single-dataset estimation, Monte Carlo batches, and expanding-
// window forecast evaluation. Config values come from an optional key-value
// file; command-line flags win over file values. Exit codes: 0 success,
// 1 invalid input/config (including I/O), 2 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbdvs/estimator.hpp"
#include "vbdvs/io.hpp"
#include "vbdvs/pipeline.hpp"
#include "vbdvs/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vbdvs;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<long long> seed;
  std::optional<int> threads;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key-value config file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "RNG seed (wins over config)");
  cmd->add_option("--threads", flags.threads, "worker threads (wins over config)");
}

// Config file merged with flag overrides; flags win.
io::Config merged_config(const CommonFlags& flags) {
  io::Config cfg;
  if (!flags.config_path.empty()) cfg = io::parse_config_file(flags.config_path);
  if (!flags.out_dir.empty()) cfg["out"] = flags.out_dir;
  if (flags.seed) cfg["seed"] = std::to_string(*flags.seed);
  if (flags.threads) cfg["threads"] = std::to_string(*flags.threads);
  return cfg;
}

fs::path prepare_out_dir(const io::Config& cfg) {
  const fs::path dir = io::get_string(cfg, "out", ".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir.string());
  return dir;
}

const std::set<std::string> kPriorKeys = {"prior",   "g0", "h0",      "c0",       "d0", "a0",
                                          "b0",      "delta", "c_spike", "p0_scale"};
const std::set<std::string> kFitKeys = {"max_iter", "tol", "dvs_enabled", "fixed_sigma2"};

PriorConfig build_prior(const io::Config& cfg) {
  const std::string preset = io::get_string(cfg, "prior", "prior3");
  PriorConfig prior;
  if (preset == "prior1")
    prior = PriorConfig::prior1();
  else if (preset == "prior2")
    prior = PriorConfig::prior2();
  else if (preset == "prior3")
    prior = PriorConfig::prior3();
  else
    throw std::invalid_argument("config key 'prior': unknown preset '" + preset + "'");
  prior.g0 = io::get_double(cfg, "g0", prior.g0);
  prior.h0 = io::get_double(cfg, "h0", prior.h0);
  prior.c0 = io::get_double(cfg, "c0", prior.c0);
  prior.d0 = io::get_double(cfg, "d0", prior.d0);
  prior.a0 = io::get_double(cfg, "a0", prior.a0);
  prior.b0 = io::get_double(cfg, "b0", prior.b0);
  prior.delta = io::get_double(cfg, "delta", prior.delta);
  prior.c_spike = io::get_double(cfg, "c_spike", prior.c_spike);
  prior.p0_scale = io::get_double(cfg, "p0_scale", prior.p0_scale);
  return prior;
}

FitOptions build_fit_options(const io::Config& cfg) {
  FitOptions opts;
  opts.max_iter = static_cast<int>(io::get_int(cfg, "max_iter", opts.max_iter));
  opts.tol = io::get_double(cfg, "tol", opts.tol);
  opts.dvs_enabled = io::get_bool(cfg, "dvs_enabled", opts.dvs_enabled);
  if (cfg.count("fixed_sigma2"))
    opts.fixed_sigma2 = io::get_double(cfg, "fixed_sigma2", 0.0);
  return opts;
}

std::set<std::string> with_common(std::set<std::string> keys) {
  keys.insert("out");
  keys.insert("seed");
  keys.insert("threads");
  return keys;
}

void write_json(const fs::path& path, const json& j) {
  auto out = io::detail::open_out(path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---- simulate ----

int cmd_simulate(const io::Config& cfg) {
  auto allowed = with_common({"T", "p", "rho", "state_scale", "sv_mean", "sv_rho", "sv_scale"});
  io::check_allowed_keys(cfg, allowed);
  const int T = static_cast<int>(io::get_int(cfg, "T", 100));
  const int p = static_cast<int>(io::get_int(cfg, "p", 50));
  const auto seed = static_cast<std::uint64_t>(io::get_int(cfg, "seed", 1));

  DgpConfig dgp = default_config(T, p, seed);
  dgp.rho = io::get_double(cfg, "rho", dgp.rho);
  dgp.state_scale = io::get_double(cfg, "state_scale", dgp.state_scale);
  dgp.sv_mean = io::get_double(cfg, "sv_mean", dgp.sv_mean);
  dgp.sv_rho = io::get_double(cfg, "sv_rho", dgp.sv_rho);
  dgp.sv_scale = io::get_double(cfg, "sv_scale", dgp.sv_scale);

  const DgpDraw draw = simulate_dgp(dgp);
  const fs::path dir = prepare_out_dir(cfg);
  io::write_vector_csv((dir / "y.csv").string(), draw.y);
  io::write_matrix_csv((dir / "x.csv").string(), draw.x);
  io::write_matrix_csv((dir / "beta_true.csv").string(), draw.beta_true);
  io::write_vector_csv((dir / "sigma2_true.csv").string(), draw.sigma2_true);
  std::printf("simulate: T=%d p=%d seed=%llu -> %s\n", T, p,
              static_cast<unsigned long long>(seed), dir.string().c_str());
  return 0;
}

// ---- fit ----

int cmd_fit(const io::Config& cfg) {
  auto allowed = with_common({"y", "x"});
  allowed.insert(kPriorKeys.begin(), kPriorKeys.end());
  allowed.insert(kFitKeys.begin(), kFitKeys.end());
  io::check_allowed_keys(cfg, allowed);

  const std::string y_path = io::get_string(cfg, "y", "");
  const std::string x_path = io::get_string(cfg, "x", "");
  if (y_path.empty() || x_path.empty())
    throw std::invalid_argument("fit requires config keys 'y' and 'x' (input CSV paths)");

  RegressionData data;
  data.y = io::read_vector_csv(y_path);
  data.X = io::read_matrix_csv(x_path);

  const PriorConfig prior = build_prior(cfg);
  const FitOptions opts = build_fit_options(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult fit = fit_vbdvs(data, prior, opts);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir = prepare_out_dir(cfg);
  io::write_matrix_csv((dir / "coeff_mean.csv").string(), fit.states.m_smooth);
  io::write_matrix_csv((dir / "pip.csv").string(), fit.dvs.pip);
  io::write_vector_csv((dir / "sigma2.csv").string(), fit.vol.sigma2);
  json diag;
  diag["iterations_run"] = fit.iterations_run;
  diag["final_delta"] = fit.final_delta;
  diag["converged"] = fit.converged;
  diag["wall_ms"] = wall_ms;
  write_json(dir / "diagnostics.json", diag);
  std::printf("fit: T=%lld p=%lld iterations=%d converged=%d -> %s\n",
              static_cast<long long>(data.rows()), static_cast<long long>(data.cols()),
              fit.iterations_run, fit.converged ? 1 : 0, dir.string().c_str());
  return 0;
}

// ---- montecarlo ----

int cmd_montecarlo(const io::Config& cfg) {
  auto allowed = with_common({"T", "p", "replications"});
  allowed.insert(kPriorKeys.begin(), kPriorKeys.end());
  allowed.insert(kFitKeys.begin(), kFitKeys.end());
  io::check_allowed_keys(cfg, allowed);

  const int T = static_cast<int>(io::get_int(cfg, "T", 100));
  const int p = static_cast<int>(io::get_int(cfg, "p", 50));
  const int reps = static_cast<int>(io::get_int(cfg, "replications", 10));
  const auto seed = static_cast<std::uint64_t>(io::get_int(cfg, "seed", 1));
  const int threads = static_cast<int>(io::get_int(cfg, "threads", 1));

  const MonteCarloSummary summary =
      run_monte_carlo(T, p, reps, build_prior(cfg), seed, build_fit_options(cfg), threads);

  const fs::path dir = prepare_out_dir(cfg);
  {
    auto out = io::detail::open_out((dir / "replications.csv").string());
    out << "seed,msd,wall_ms,converged\n";
    for (const auto& rec : summary.records) {
      const double msd = rec.failed ? std::numeric_limits<double>::quiet_NaN() : rec.msd;
      out << rec.seed << ',' << io::format_double(msd) << ',' << io::format_double(rec.wall_ms)
          << ',' << (rec.converged ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: replications.csv");
  }
  json js;
  js["mean_msd"] = summary.mean_msd;
  js["median_msd"] = summary.median_msd;
  js["sum_msd"] = summary.sum_msd;
  js["mean_wall_ms"] = summary.mean_wall_ms;
  js["n_failed"] = summary.n_failed;
  js["n_replications"] = static_cast<int>(summary.records.size());
  write_json(dir / "summary.json", js);
  std::printf("montecarlo: T=%d p=%d replications=%d mean_msd=%.6f n_failed=%d -> %s\n", T, p,
              reps, summary.mean_msd, summary.n_failed, dir.string().c_str());
  return 0;
}

// ---- forecast-eval ----

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& tok : io::detail::split(text, ','))
    if (const auto t = io::detail::trim(tok); !t.empty()) out.push_back(t);
  return out;
}

struct AlignedPanel {
  VectorXd target;   // one entry per usable period
  MatrixXd X;        // predictors on the same period index
};

// Transforms every factor column by its schema tcode, optionally cleans
// outliers, and head-trims all series to a shared sample. With the
// (400/h)-log target construction the target entry at row i is the h-period
// annualized growth ending at that row, so the dataset builder's pairing of
// y_{t+h} with time-t regressors forecasts exactly the next h periods.
AlignedPanel align_panel(const io::Panel& panel, const std::vector<io::SchemaEntry>& schema,
                         const std::string& target_name, int h, bool target_transform,
                         bool clean_outliers, double kappa) {
  std::map<std::string, io::SchemaEntry> by_name;
  for (const auto& e : schema)
    if (!by_name.emplace(e.column, e).second)
      throw std::invalid_argument("schema lists column '" + e.column + "' twice");

  Eigen::Index target_col = -1;
  std::vector<Eigen::Index> factor_cols;
  int max_loss = 0;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(panel.names.size()); ++j) {
    const auto it = by_name.find(panel.names[static_cast<std::size_t>(j)]);
    if (it == by_name.end())
      throw std::invalid_argument("panel column '" + panel.names[static_cast<std::size_t>(j)] +
                                  "' missing from schema");
    if (panel.names[static_cast<std::size_t>(j)] == target_name) {
      target_col = j;
      if (!target_transform) max_loss = std::max(max_loss, transform_loss(it->second.tcode));
      continue;
    }
    if (it->second.factor) {
      factor_cols.push_back(j);
      max_loss = std::max(max_loss, transform_loss(it->second.tcode));
    }
  }
  if (target_col < 0)
    throw std::invalid_argument("target column '" + target_name + "' not found in panel");

  const Eigen::Index T_raw = panel.values.rows();

  // Target series on the raw time axis, with its own leading loss.
  VectorXd target_full;
  int target_loss = 0;
  if (target_transform) {
    target_full = build_target(panel.values.col(target_col), h);
    target_loss = h;  // entry i of target_full is the growth ending at raw time i+h
  } else {
    const int tc = by_name.at(target_name).tcode;
    target_full = apply_transform(panel.values.col(target_col), tc);
    target_loss = transform_loss(tc);
  }

  const Eigen::Index base = std::max<Eigen::Index>(max_loss, target_loss);
  if (base + 1 >= T_raw)
    throw std::invalid_argument("panel too short for the requested transforms");
  const Eigen::Index N = T_raw - base;

  AlignedPanel out;
  out.target.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) out.target(i) = target_full(base + i - target_loss);

  out.X.resize(N, static_cast<Eigen::Index>(factor_cols.size()));
  for (std::size_t c = 0; c < factor_cols.size(); ++c) {
    const Eigen::Index j = factor_cols[c];
    const auto& entry = by_name.at(panel.names[static_cast<std::size_t>(j)]);
    VectorXd z = apply_transform(panel.values.col(j), entry.tcode);
    if (clean_outliers) z = remove_outliers(z, kappa);
    const int loss = transform_loss(entry.tcode);
    for (Eigen::Index i = 0; i < N; ++i)
      out.X(i, static_cast<Eigen::Index>(c)) = z(base + i - loss);
  }
  return out;
}

int cmd_forecast_eval(const io::Config& cfg) {
  auto allowed = with_common({"panel", "schema", "target", "horizons", "models", "factors",
                              "lags", "window", "target_transform", "clean_outliers", "kappa"});
  allowed.insert(kPriorKeys.begin(), kPriorKeys.end());
  allowed.insert(kFitKeys.begin(), kFitKeys.end());
  io::check_allowed_keys(cfg, allowed);

  const std::string panel_path = io::get_string(cfg, "panel", "");
  const std::string schema_path = io::get_string(cfg, "schema", "");
  const std::string target_name = io::get_string(cfg, "target", "");
  if (panel_path.empty() || schema_path.empty() || target_name.empty())
    throw std::invalid_argument(
        "forecast-eval requires config keys 'panel', 'schema', and 'target'");

  const io::Panel panel = io::read_panel_csv(panel_path);
  const auto schema = io::read_schema_csv(schema_path);

  std::vector<int> horizons;
  for (const auto& tok : parse_list(io::get_string(cfg, "horizons", "1")))
    horizons.push_back(static_cast<int>(io::parse_int(tok, "config key 'horizons'")));
  if (horizons.empty()) throw std::invalid_argument("config key 'horizons': empty list");

  const auto models = parse_list(io::get_string(cfg, "models", "ar2,vbdvs"));
  for (const auto& m : models)
    if (m != "ar2" && m != "vbdvs")
      throw std::invalid_argument("config key 'models': unknown model '" + m + "'");

  ForecastTask task;
  task.lags = static_cast<int>(io::get_int(cfg, "lags", 2));
  task.window = io::get_double(cfg, "window", 0.5);
  task.target_transform = io::get_bool(cfg, "target_transform", true);
  const bool clean = io::get_bool(cfg, "clean_outliers", false);
  const double kappa = io::get_double(cfg, "kappa", 4.5);

  ModelSpec vbdvs_spec;
  vbdvs_spec.kind = ModelKind::vbdvs;
  vbdvs_spec.n_factors = static_cast<int>(io::get_int(cfg, "factors", -1));
  if (cfg.count("h0")) vbdvs_spec.h0 = io::get_double(cfg, "h0", 0.0);

  const PriorConfig prior = build_prior(cfg);
  const FitOptions opts = build_fit_options(cfg);
  const int threads = static_cast<int>(io::get_int(cfg, "threads", 1));

  const fs::path dir = prepare_out_dir(cfg);
  auto fcsv = io::detail::open_out((dir / "forecasts.csv").string());
  fcsv << "model,origin,h,point,variance,realized,log_pred_lik\n";
  json ev;

  for (const int h : horizons) {
    task.horizon = h;
    const AlignedPanel ap = align_panel(panel, schema, target_name, h, task.target_transform,
                                        clean, kappa);
    const auto bench = run_expanding_window(ap.target, ap.X, task,
                                            {ModelKind::ar, 0, std::nan("")}, prior, opts,
                                            threads);
    for (const auto& name : models) {
      const auto recs = name == "ar2"
                            ? bench
                            : run_expanding_window(ap.target, ap.X, task, vbdvs_spec, prior,
                                                   opts, threads);
      const EvalSummary s = evaluate_oos(recs, bench);
      int n_failed = 0;
      for (const auto& r : recs) {
        if (r.failed) {
          ++n_failed;
          continue;
        }
        fcsv << name << ',' << r.origin << ',' << h << ',' << io::format_double(r.point) << ','
             << io::format_double(r.variance) << ',' << io::format_double(r.realized) << ','
             << io::format_double(r.log_pred_lik) << '\n';
      }
      json block;
      block["msfe"] = s.msfe;
      block["alpl"] = s.alpl;
      block["rel_msfe"] = s.rel_msfe;
      block["rel_alpl"] = s.rel_alpl;
      block["n_origins"] = static_cast<int>(recs.size());
      block["n_failed"] = n_failed;
      ev[name][std::to_string(h)] = block;
    }
  }
  if (!fcsv) throw std::runtime_error("write failed: forecasts.csv");
  fcsv.close();
  write_json(dir / "eval.json", ev);
  std::printf("forecast-eval: target=%s horizons=%zu models=%zu -> %s\n", target_name.c_str(),
              horizons.size(), models.size(), dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational Bayes dynamic variable selection for TVP regressions"};
  app.require_subcommand(1);

  CommonFlags sim_flags, fit_flags, mc_flags, fe_flags;
  auto* sim = app.add_subcommand("simulate", "draw a sparse TVP regression dataset");
  add_common_flags(sim, sim_flags);
  auto* fit = app.add_subcommand("fit", "estimate a model on CSV inputs");
  add_common_flags(fit, fit_flags);
  auto* mc = app.add_subcommand("montecarlo", "repeated simulate+fit with MSD summaries");
  add_common_flags(mc, mc_flags);
  auto* fe = app.add_subcommand("forecast-eval", "expanding-window forecast comparison");
  add_common_flags(fe, fe_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(merged_config(sim_flags));
    if (fit->parsed()) return cmd_fit(merged_config(fit_flags));
    if (mc->parsed()) return cmd_montecarlo(merged_config(mc_flags));
    if (fe->parsed()) return cmd_forecast_eval(merged_config(fe_flags));
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
