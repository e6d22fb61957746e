#include "kode/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "kode/bounds.hpp"
#include "kode/errors.hpp"
#include "kode/experiments.hpp"
#include "kode/io.hpp"
#include "kode/kalman.hpp"
#include "kode/matops.hpp"

namespace kode {

int cmd_generate(const GenerateOptions& opts) {
  const LgdsParams params = generate_instance(opts.d, opts.k, opts.seed);
  save_instance(params, opts.out_path);
  std::cout << "wrote " << opts.out_path << "\n";
  if (opts.print_stats) {
    std::cout << "d=" << opts.d << " k=" << opts.k << " seed=" << opts.seed
              << "\n";
    std::cout << "spectral_radius=" << format_double(spectral_radius(params.gamma))
              << "\n";
    std::cout << "sigma2=" << format_double(params.sigma2) << "\n";
    std::cout << "tr_q=" << format_double(params.q.trace()) << "\n";
    std::cout << "tr_sigma0=" << format_double(params.sigma0.trace()) << "\n";
  }
  return 0;
}

int cmd_bounds(const BoundsOptions& opts) {
  const LgdsParams params = load_instance(opts.instance_path);
  const std::uint64_t seed = opts.seed.value_or(params.seed);
  const BoundReport report = compute_bound_report(
      params, opts.horizon, opts.alpha, opts.nu_samples, seed);

  std::cout << "instance=" << opts.instance_path << " d=" << params.dim()
            << " k=" << params.num_actions() << "\n";
  std::cout << "p_bar_trace=" << format_double(report.p_bar.trace())
            << " dominance_ok=" << (report.dominance_ok ? 1 : 0)
            << " inflation=" << format_double(report.inflation) << "\n";
  std::cout << "regret_bound_per_round="
            << format_double(report.regret_bound_per_round)
            << " regret_bound_n=" << format_double(report.regret_bound_n)
            << " horizon=" << opts.horizon << "\n";
  std::cout << "nu=" << format_double(report.nu)
            << " alpha=" << format_double(report.alpha)
            << " theta_s=" << format_optional(report.theta_s) << "\n";
  std::cout << "u_tilde=" << format_double(report.u_tilde) << " log10_u_tilde="
            << (report.u_tilde > 0.0
                    ? format_double(std::log10(report.u_tilde))
                    : std::string("NA"))
            << "\n";

  if (opts.out_dir.has_value()) {
    const std::filesystem::path dir(*opts.out_dir);
    std::ostringstream csv;
    csv << "instance,seed,u_tilde,log10_u_tilde,nu,alpha,theta_s,"
           "regret_bound_per_round,regret_bound_n,dominance_ok,inflation\n";
    csv << opts.instance_path << "," << seed << ","
        << format_double(report.u_tilde) << ","
        << (report.u_tilde > 0.0 ? format_double(std::log10(report.u_tilde))
                                 : std::string("NA"))
        << "," << format_double(report.nu) << ","
        << format_double(report.alpha) << ","
        << format_optional(report.theta_s) << ","
        << format_double(report.regret_bound_per_round) << ","
        << format_double(report.regret_bound_n) << ","
        << (report.dominance_ok ? 1 : 0) << ","
        << format_double(report.inflation) << "\n";
    write_text_file(dir / "bounds.csv", csv.str());

    nlohmann::json detail;
    detail["instance"] = opts.instance_path;
    detail["seed"] = seed;
    detail["horizon"] = opts.horizon;
    detail["alpha"] = report.alpha;
    detail["nu"] = report.nu;
    detail["nu_samples"] = opts.nu_samples;
    detail["theta_s"] = report.theta_s.has_value()
                            ? nlohmann::json(*report.theta_s)
                            : nlohmann::json(nullptr);
    detail["u_tilde"] = report.u_tilde;
    detail["regret_bound_per_round"] = report.regret_bound_per_round;
    detail["regret_bound_n"] = report.regret_bound_n;
    detail["dominance_ok"] = report.dominance_ok;
    detail["inflation"] = report.inflation;
    auto flatten = [](const Eigen::MatrixXd& m) {
      std::vector<double> flat;
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
      return flat;
    };
    detail["p_bar"] = flatten(report.p_bar);
    detail["z_lyapunov"] = flatten(report.z_lyapunov);
    write_text_file(dir / "bounds.json", detail.dump(2) + "\n");
    std::cout << "wrote " << (dir / "bounds.csv").string() << " and "
              << (dir / "bounds.json").string() << "\n";
  }
  return 0;
}

int cmd_run(const RunOptions& opts) {
  ExperimentConfig config = load_config(opts.config_path);
  if (opts.seed.has_value()) config.base_seed = *opts.seed;
  if (opts.workers.has_value()) config.workers = *opts.workers;
  if (opts.out_dir.has_value()) config.out_dir = *opts.out_dir;
  if (opts.alpha.has_value()) config.alpha = *opts.alpha;
  validate(config);

  if (opts.dry_run) {
    std::cout << "dry run: nothing will be written\n";
    std::cout << config_to_json(config).dump(2) << "\n";
    std::cout << "seed schedule (env stream is shared across policies within "
                 "a repeat):\n";
    for (long i = 0; i < config.num_instances; ++i) {
      std::cout << "instance " << i << ": seed=" << instance_seed(config, i)
                << " env_seeds=[";
      for (long r = 0; r < config.repeats; ++r) {
        if (r > 0) std::cout << ",";
        std::cout << env_seed(config, i, r);
      }
      std::cout << "]\n";
    }
    std::cout << "policy stream ids:";
    for (PolicyKind kind : config.roster)
      std::cout << " " << policy_name(kind) << "=" << policy_stream_id(kind);
    std::cout << "\n";
    return 0;
  }

  const SuiteReport report = run_suite(config);
  std::cout << "instances=" << report.instances_attempted
            << " failed=" << report.instances_failed
            << " u_tilde_zero=" << report.u_tilde_zero << "\n";
  for (const auto& [name, count] : report.pct_decrease_excluded)
    if (count > 0)
      std::cout << "pct_decrease_excluded[" << name << "]=" << count << "\n";
  for (const auto& f : report.files)
    std::cout << "wrote " << (std::filesystem::path(config.out_dir) / f).string()
              << "\n";
  return report.instances_failed > 0 ? 1 : 0;
}

int cmd_episode(const EpisodeOptions& opts) {
  const LgdsParams params = load_instance(opts.instance_path);
  const PolicyKind kind = policy_kind_from_name(opts.policy);
  const Eigen::MatrixXd z = solve_lyapunov(params.gamma, params.q);

  PolicyContext ctx;
  ctx.horizon = opts.n;
  ctx.trace_z = z.trace();

  const std::uint64_t ep_env_seed = mix_seed({opts.seed, stream::env});
  const std::uint64_t ep_policy_seed = mix_seed({opts.seed, stream::policy});
  const PolicyFactory factory = [&](const EnvState& env) {
    return make_policy(kind, params, ctx, ep_policy_seed, &env);
  };

  // A shadow predictor fed the same actions and rewards provides the
  // alignment diagnostics for every policy, not just the filter-based one.
  KalmanState shadow = kalman_init(params);
  std::ostringstream csv;
  csv << "t,action,reward,pseudo_regret,angle,theta_bound\n";
  const RoundCallback on_round = [&](const RoundRecord& r) {
    std::string angle_text = "NA";
    if (r.z.norm() > 0.0 && shadow.z_hat.norm() > 0.0)
      angle_text = format_double(angle(r.z, shadow.z_hat));
    std::string theta_text = "NA";
    if (shadow.z_hat.squaredNorm() > 0.0 || shadow.p.trace() > 0.0) {
      const auto bound = online_angle_bound(shadow.z_hat, shadow.p);
      if (bound.has_value()) theta_text = format_double(*bound);
    }
    csv << r.t << "," << r.action_index << "," << format_double(r.reward)
        << "," << format_double(r.x_star_mean - r.chosen_mean) << ","
        << angle_text << "," << theta_text << "\n";
    shadow = kalman_update(
        shadow, params.actions[static_cast<std::size_t>(r.action_index)],
        r.reward, params);
  };

  run_episode(params, factory, opts.n, ep_env_seed, opts.burn_in, on_round);

  if (opts.out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(opts.out_path, csv.str());
    std::cout << "wrote " << opts.out_path << "\n";
  }
  return 0;
}

}  // namespace kode
