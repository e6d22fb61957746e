#include "kode/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "kode/errors.hpp"
#include "kode/io.hpp"
#include "kode/matops.hpp"
#include "kode/stats.hpp"

namespace kode {

EpisodeTrace run_episode(const LgdsParams& params,
                         const PolicyFactory& make_policy_fn, long n,
                         std::uint64_t env_seed, long burn_in_iters,
                         const RoundCallback& on_round) {
  if (n < 0) throw InputError("run_episode: negative horizon");
  EnvState env = init_state(params, env_seed);
  burn_in(env, params, burn_in_iters);
  std::unique_ptr<Policy> policy = make_policy_fn(env);

  EpisodeTrace trace;
  trace.policy_name = std::string(policy->name());
  trace.action_indices.reserve(static_cast<std::size_t>(n));
  trace.rewards.reserve(static_cast<std::size_t>(n));
  trace.pseudo_regret.reserve(static_cast<std::size_t>(n));

  Eigen::VectorXd z_now;
  for (long t = 0; t < n; ++t) {
    const PolicyDecision decision = policy->select();
    if (on_round) z_now = env.z;
    const StepResult r = step(env, params, decision.action_index);
    policy->observe(decision, r.reward);

    trace.action_indices.push_back(decision.action_index);
    trace.rewards.push_back(r.reward);
    const double regret = r.x_star - r.chosen_mean;
    trace.pseudo_regret.push_back(regret);
    trace.cumulative_regret += regret;
    if (on_round)
      on_round(RoundRecord{t, z_now, decision.action_index, r.reward, r.x_star,
                           r.chosen_mean});
  }
  return trace;
}

double percent_regret_decrease(double r_baseline, double r_kode) {
  if (r_baseline <= 0.0)
    throw ParameterError("percent_regret_decrease: baseline regret not positive");
  return 100.0 * (r_baseline - r_kode) / r_baseline;
}

void validate(const ExperimentConfig& config) {
  if (config.d < 1 || config.k < 2)
    throw ParameterError("config: need d >= 1 and k >= 2");
  if (config.horizon < 1 || config.num_instances < 1 || config.repeats < 1)
    throw ParameterError("config: counts must be at least 1");
  if (config.burn_in < 0) throw ParameterError("config: negative burn_in");
  if (config.alpha <= 0.0 || config.alpha >= 1.0)
    throw ParameterError("config: alpha outside (0,1)");
  if (config.nu_samples < 10000)
    throw ParameterError("config: nu_samples must be at least 1e4");
  if (config.workers < 1) throw ParameterError("config: workers must be >= 1");
  if (config.roster.empty()) throw ParameterError("config: empty policy roster");
  for (std::size_t i = 0; i < config.roster.size(); ++i)
    for (std::size_t j = i + 1; j < config.roster.size(); ++j)
      if (config.roster[i] == config.roster[j])
        throw ParameterError("config: duplicate policy in roster");
  if (config.hyper.sw_window < 1)
    throw ParameterError("config: sw_ucb window must be positive");
  if (config.hyper.rexp3_batch.has_value() && *config.hyper.rexp3_batch < 1)
    throw ParameterError("config: rexp3 batch must be positive");
  if (config.hyper.rexp3_clip_sigmas <= 0.0)
    throw ParameterError("config: rexp3 clip_sigmas must be positive");
  if (config.hyper.oful_lambda <= 0.0)
    throw ParameterError("config: oful lambda must be positive");
  if (config.hyper.oful_delta <= 0.0 || config.hyper.oful_delta >= 1.0)
    throw ParameterError("config: oful delta outside (0,1)");
  if (config.pearson_permutations < 1)
    throw ParameterError("config: pearson permutations must be positive");
}

std::uint64_t instance_seed(const ExperimentConfig& config, long instance) {
  return mix_seed({config.base_seed, stream::instance,
                   static_cast<std::uint64_t>(instance)});
}

std::uint64_t env_seed(const ExperimentConfig& config, long instance,
                       long repeat) {
  return mix_seed({config.base_seed, stream::env,
                   static_cast<std::uint64_t>(instance),
                   static_cast<std::uint64_t>(repeat)});
}

std::uint64_t policy_seed(const ExperimentConfig& config, long instance,
                          PolicyKind kind, long repeat) {
  return mix_seed({config.base_seed, stream::policy,
                   static_cast<std::uint64_t>(instance),
                   policy_stream_id(kind),
                   static_cast<std::uint64_t>(repeat)});
}

std::uint64_t bounds_seed(const ExperimentConfig& config, long instance) {
  return mix_seed({config.base_seed, stream::quantile,
                   static_cast<std::uint64_t>(instance)});
}

namespace {

InstanceResult run_one_instance(const ExperimentConfig& config, long index) {
  InstanceResult result;
  result.index = index;
  result.seed = instance_seed(config, index);
  try {
    const LgdsParams params =
        generate_instance(config.d, config.k, result.seed);
    const Eigen::MatrixXd z = solve_lyapunov(params.gamma, params.q);
    PolicyContext ctx;
    ctx.horizon = config.horizon;
    ctx.trace_z = z.trace();
    ctx.hyper = config.hyper;

    result.bounds = compute_bound_report(params, config.horizon, config.alpha,
                                         config.nu_samples,
                                         bounds_seed(config, index));

    result.mean_regret.resize(config.roster.size(), 0.0);
    for (std::size_t p = 0; p < config.roster.size(); ++p) {
      const PolicyKind kind = config.roster[p];
      double total = 0.0;
      for (long r = 0; r < config.repeats; ++r) {
        const std::uint64_t ps = policy_seed(config, index, kind, r);
        const PolicyFactory factory = [&](const EnvState& env) {
          return make_policy(kind, params, ctx, ps, &env);
        };
        total += run_episode(params, factory, config.horizon,
                             env_seed(config, index, r), config.burn_in)
                     .cumulative_regret;
      }
      result.mean_regret[p] = total / static_cast<double>(config.repeats);
    }

    result.pct_decrease.assign(config.roster.size(), std::nullopt);
    const auto kode_it = std::find(config.roster.begin(), config.roster.end(),
                                   PolicyKind::kode);
    if (kode_it != config.roster.end()) {
      const auto kode_idx =
          static_cast<std::size_t>(kode_it - config.roster.begin());
      for (std::size_t p = 0; p < config.roster.size(); ++p) {
        if (p == kode_idx) continue;
        if (result.mean_regret[p] > 0.0)
          result.pct_decrease[p] = percent_regret_decrease(
              result.mean_regret[p], result.mean_regret[kode_idx]);
      }
    }
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

std::string csv_comment(const ExperimentConfig& config) {
  // Execution details are kept out of the data files so outputs stay
  // byte-identical across worker counts and output locations.
  nlohmann::json j = config_to_json(config);
  j.erase("workers");
  j.erase("out_dir");
  return "# config: " + j.dump() + "\n";
}

void write_instances_csv(const ExperimentConfig& config,
                         const std::vector<InstanceResult>& results,
                         SuiteReport& report) {
  std::ostringstream out;
  out << csv_comment(config);
  out << "instance,seed,failed,u_tilde,log10_u_tilde,nu,theta_s,"
         "regret_bound_per_round,regret_bound_n,dominance_ok,inflation";
  for (PolicyKind kind : config.roster) out << ",regret_" << policy_name(kind);
  for (PolicyKind kind : config.roster)
    if (kind != PolicyKind::kode) out << ",pct_dec_" << policy_name(kind);
  out << "\n";

  for (const auto& r : results) {
    out << r.index << "," << r.seed << "," << (r.failed ? 1 : 0);
    if (r.failed) {
      const long scalar_cols = 8;
      const long policy_cols = static_cast<long>(config.roster.size());
      long baseline_cols = 0;
      for (PolicyKind kind : config.roster)
        if (kind != PolicyKind::kode) ++baseline_cols;
      for (long c = 0; c < scalar_cols + policy_cols + baseline_cols; ++c)
        out << ",NA";
      out << "\n";
      continue;
    }
    const double ut = r.bounds.u_tilde;
    out << "," << format_double(ut);
    out << ","
        << (ut > 0.0 ? format_double(std::log10(ut)) : std::string("NA"));
    out << "," << format_double(r.bounds.nu);
    out << "," << format_optional(r.bounds.theta_s);
    out << "," << format_double(r.bounds.regret_bound_per_round);
    out << "," << format_double(r.bounds.regret_bound_n);
    out << "," << (r.bounds.dominance_ok ? 1 : 0);
    out << "," << format_double(r.bounds.inflation);
    for (double regret : r.mean_regret) out << "," << format_double(regret);
    for (std::size_t p = 0; p < config.roster.size(); ++p)
      if (config.roster[p] != PolicyKind::kode)
        out << "," << format_optional(r.pct_decrease[p]);
    out << "\n";
  }
  const auto path = std::filesystem::path(config.out_dir) / "instances.csv";
  write_text_file(path, out.str());
  report.files.push_back("instances.csv");
}

void write_boxplot_csv(const ExperimentConfig& config,
                       const std::string& baseline,
                       const std::vector<double>& samples,
                       SuiteReport& report) {
  std::ostringstream out;
  out << csv_comment(config);
  out << "kind,value\n";
  for (double v : samples) out << "sample," << format_double(v) << "\n";
  if (!samples.empty()) {
    const BoxplotStats stats = boxplot_stats(samples);
    out << "median," << format_double(stats.median) << "\n";
    out << "q1," << format_double(stats.q1) << "\n";
    out << "q3," << format_double(stats.q3) << "\n";
    out << "whisker_low," << format_double(stats.whisker_low) << "\n";
    out << "whisker_high," << format_double(stats.whisker_high) << "\n";
    out << "outliers," << stats.outliers << "\n";
  }
  const std::string name = "boxplot_" + baseline + ".csv";
  write_text_file(std::filesystem::path(config.out_dir) / name, out.str());
  report.files.push_back(name);
}

struct CorrelationRow {
  std::string label;
  std::optional<PearsonResult> pearson;
};

void write_correlation_csv(const ExperimentConfig& config,
                           const std::vector<CorrelationRow>& rows,
                           SuiteReport& report) {
  std::ostringstream out;
  out << csv_comment(config);
  out << "baseline,r,p_value,m,meets_r_0.4\n";
  for (const auto& row : rows) {
    out << row.label;
    if (row.pearson.has_value()) {
      out << "," << format_double(row.pearson->r);
      out << "," << format_double(row.pearson->p_value);
      out << "," << row.pearson->m;
      out << "," << (row.pearson->r >= 0.4 ? 1 : 0);
    } else {
      out << ",NA,NA,0,NA";
    }
    out << "\n";
  }
  const auto path = std::filesystem::path(config.out_dir) / "correlation.csv";
  write_text_file(path, out.str());
  report.files.push_back("correlation.csv");
}

void write_summary_json(const ExperimentConfig& config, SuiteReport& report) {
  nlohmann::json j;
  j["config"] = config_to_json(config);
  j["instances_attempted"] = report.instances_attempted;
  j["instances_failed"] = report.instances_failed;
  j["pct_decrease_excluded"] = report.pct_decrease_excluded;
  j["u_tilde_zero"] = report.u_tilde_zero;
  j["versions"]["kodesim"] = "0.1.0";
  j["versions"]["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                           std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION);
  report.files.push_back("summary.json");
  j["files"] = report.files;
  write_text_file(std::filesystem::path(config.out_dir) / "summary.json",
                  j.dump(2) + "\n");
}

}  // namespace

SuiteReport run_suite(const ExperimentConfig& config) {
  validate(config);

  std::vector<InstanceResult> results(
      static_cast<std::size_t>(config.num_instances));
  std::atomic<long> next{0};
  const auto worker = [&] {
    while (true) {
      const long i = next.fetch_add(1);
      if (i >= config.num_instances) break;
      results[static_cast<std::size_t>(i)] = run_one_instance(config, i);
    }
  };
  const int extra =
      static_cast<int>(std::min<long>(config.workers, config.num_instances)) - 1;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(std::max(0, extra)));
  for (int w = 0; w < extra; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SuiteReport report;
  report.instances_attempted = config.num_instances;
  for (const auto& r : results)
    if (r.failed) ++report.instances_failed;

  // Percent-decrease distributions and the log10(u~) correlation per
  // baseline, aggregated in instance order.
  std::vector<CorrelationRow> corr_rows;
  std::vector<double> pooled_pct, pooled_log_u;
  for (std::size_t p = 0; p < config.roster.size(); ++p) {
    const PolicyKind kind = config.roster[p];
    if (kind == PolicyKind::kode) continue;
    const std::string name(policy_name(kind));
    std::vector<double> samples, xs, ys;
    long excluded = 0;
    for (const auto& r : results) {
      if (r.failed) continue;
      if (!r.pct_decrease[p].has_value()) {
        ++excluded;
        continue;
      }
      const double pct = *r.pct_decrease[p];
      samples.push_back(pct);
      if (r.bounds.u_tilde > 0.0) {
        xs.push_back(std::log10(r.bounds.u_tilde));
        ys.push_back(pct);
      }
    }
    report.pct_decrease_excluded[name] = excluded;
    write_boxplot_csv(config, name, samples, report);
    CorrelationRow row;
    row.label = name;
    try {
      row.pearson = config.pearson_permutation
                        ? pearson_r_permutation(xs, ys,
                                                config.pearson_permutations,
                                                config.base_seed)
                        : pearson_r(xs, ys);
    } catch (const Error&) {
      row.pearson = std::nullopt;
    }
    corr_rows.push_back(std::move(row));
    pooled_log_u.insert(pooled_log_u.end(), xs.begin(), xs.end());
    pooled_pct.insert(pooled_pct.end(), ys.begin(), ys.end());
  }
  for (const auto& r : results)
    if (!r.failed && r.bounds.u_tilde <= 0.0) ++report.u_tilde_zero;

  if (!corr_rows.empty()) {
    CorrelationRow all;
    all.label = "all";
    try {
      all.pearson = config.pearson_permutation
                        ? pearson_r_permutation(pooled_log_u, pooled_pct,
                                                config.pearson_permutations,
                                                config.base_seed)
                        : pearson_r(pooled_log_u, pooled_pct);
    } catch (const Error&) {
      all.pearson = std::nullopt;
    }
    corr_rows.push_back(std::move(all));
    write_correlation_csv(config, corr_rows, report);
  }

  write_instances_csv(config, results, report);
  write_summary_json(config, report);
  report.results = std::move(results);
  return report;
}

}  // namespace kode
