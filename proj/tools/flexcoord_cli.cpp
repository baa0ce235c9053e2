// Command-line runner: scenario generation, training experiments, reference
// evaluation and the agent-count scaling benchmark.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flexcoord/harness.hpp"
#include "flexcoord/oracle.hpp"
#include "flexcoord/util.hpp"

using namespace flexcoord;
using nlohmann::json;

namespace {

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& cfg, std::string& method_name) {
    cmd->add_option("--method", method_name,
                    "facmac | facmac+supervised | iql | iql+marginal | iql+opt | iql+opt+marginal");
    cmd->add_option("--homes", cfg.n_homes, "number of homes");
    cmd->add_option("--days", cfg.n_days, "scenario length in days");
    cmd->add_option("--eval-days", cfg.n_eval_days, "evaluation days at the scenario end");
    cmd->add_option("--episodes", cfg.episodes, "training episodes");
    cmd->add_option("--eval-every", cfg.eval_every, "evaluation cadence in episodes");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--scenario", cfg.scenario_dir, "load a scenario directory instead of generating");
    cmd->add_option("--preset", cfg.preset, "default | sanity | cooperation");
    cmd->add_flag("--gate-discharge", cfg.env_options.gate_discharge_by_availability,
                  "gate battery discharge by EV availability");
    cmd->add_flag("--local-obs", cfg.env_options.observe_local_state,
                  "append per-home state to observations");

    cmd->add_option("--flex-window", cfg.profile.flex_window, "flexible-load window, steps");
    cmd->add_option("--flexible-share", cfg.profile.flexible_share, "flexible share of demand");
    cmd->add_option("--pv-peak", cfg.profile.pv_peak, "PV bell peak, kWh/step");
    cmd->add_option("--export-charge", cfg.profile.export_charge, "distribution charge on exports");
    cmd->add_option("--storage-cost", cfg.profile.storage_cost, "battery throughput cost");
    cmd->add_option("--scc", cfg.profile.social_cost_carbon, "social cost of carbon");
    cmd->add_option("--trip-kwh", cfg.profile.trip_kwh, "daily EV trip energy");

    cmd->add_option("--lr-actor", cfg.facmac.lr_actor, "actor learning rate");
    cmd->add_option("--lr-critic", cfg.facmac.lr_critic, "critic/mixer learning rate");
    cmd->add_option("--gamma", cfg.facmac.gamma, "discount factor (also applied to tabular)");
    cmd->add_option("--tau", cfg.facmac.tau, "target soft-update fraction");
    cmd->add_option("--batch", cfg.facmac.batch_size, "batch size");
    cmd->add_option("--buffer", cfg.facmac.buffer_capacity, "replay capacity");
    cmd->add_option("--updates", cfg.facmac.updates_per_episode, "updates per episode");
    cmd->add_option("--sigma-start", cfg.facmac.sigma_start, "exploration noise at start");
    cmd->add_option("--sigma-end", cfg.facmac.sigma_end, "exploration noise floor");
    cmd->add_option("--supervised-weight", cfg.facmac.supervised_weight, "imitation penalty C");
    cmd->add_option("--demo-fraction", cfg.facmac.demo_fraction, "demonstrator share per batch");
    cmd->add_option("--hysteresis-ratio", cfg.facmac.hysteresis_ratio,
                    "negative-TD gradient scale (1 = off)");
    cmd->add_flag("--no-hysteresis", [&cfg](std::int64_t) { cfg.facmac.hysteretic = false; },
                  "disable hysteretic critic updates");
    cmd->add_flag("--no-conv", [&cfg](std::int64_t) { cfg.facmac.conv_actor = false; },
                  "drop the actor's convolutional layer");
    cmd->add_flag("--per-agent-actor", [&cfg](std::int64_t) { cfg.facmac.shared_actor = false; },
                  "individual actor parameters per agent");

    cmd->add_option("--iql-alpha", cfg.iql.alpha, "tabular learning rate");
    cmd->add_option("--iql-beta", cfg.iql.beta, "tabular rate for negative errors");
    cmd->add_flag("--iql-hysteretic", cfg.iql.hysteretic, "hysteretic tabular updates");
    cmd->add_option("--iql-eps-start", cfg.iql.eps_start, "epsilon-greedy start");
    cmd->add_option("--iql-eps-end", cfg.iql.eps_end, "epsilon-greedy floor");
    cmd->add_option("--iql-gamma", cfg.iql.gamma, "tabular discount factor");
    cmd->add_option("--iql-obs-bins", cfg.iql.obs_bins, "observation bins");
    cmd->add_option("--iql-action-bins", cfg.iql.action_bins, "bins per action axis");
}

int resolve_method(const std::string& name, ExperimentConfig& cfg) {
    auto m = method_from_string(name);
    if (!m) {
        std::cerr << "unknown method: " << name << "\n";
        return 1;
    }
    cfg.method = *m;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for cooperative home-energy flexibility"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string method_name = "facmac";

    // generate
    auto* generate = app.add_subcommand("generate", "write a synthetic scenario CSV directory");
    std::string gen_out = "scenario";
    generate->add_option("--out", gen_out, "target directory")->required();
    add_experiment_flags(generate, cfg, method_name);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a method and write result records");
    train_cmd->add_option("--out", cfg.output_dir, "output directory");
    std::vector<std::uint64_t> train_seeds;
    train_cmd->add_option("--seeds", train_seeds,
                          "repeat over these seeds and write percentile summary");
    add_experiment_flags(train_cmd, cfg, method_name);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "baseline and day-ahead optimum references");
    bool eval_trace = false;
    bool eval_dump_lp = false;
    eval_cmd->add_flag("--trace", eval_trace, "write a baseline episode trace CSV to --out");
    eval_cmd->add_flag("--dump-lp", eval_dump_lp,
                       "write the first evaluation day's problem in plain text to --out");
    eval_cmd->add_option("--out", cfg.output_dir, "output directory");
    add_experiment_flags(eval_cmd, cfg, method_name);

    // benchmark-scaling
    auto* bench = app.add_subcommand("benchmark-scaling", "training-time growth versus homes");
    std::vector<int> sizes{3, 5, 10};
    std::vector<std::uint64_t> seeds{1, 2};
    std::vector<std::string> bench_methods{"facmac", "iql+opt+marginal"};
    bench->add_option("--sizes", sizes, "home counts (need at least three)");
    bench->add_option("--seeds", seeds, "seeds per size");
    bench->add_option("--methods", bench_methods, "methods to time");
    bench->add_option("--out", cfg.output_dir, "output directory");
    add_experiment_flags(bench, cfg, method_name);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            if (resolve_method(method_name, cfg)) return 1;
            const ScenarioData sc = build_scenario(cfg);
            save_scenario_csv(sc, gen_out);
            std::cout << "wrote scenario (" << sc.n_homes << " homes, " << sc.n_days
                      << " days) to " << gen_out << "\n";
            return 0;
        }
        if (*train_cmd) {
            if (resolve_method(method_name, cfg)) return 1;
            if (!train_seeds.empty()) {
                const auto records = run_experiment_seeds(cfg, train_seeds);
                std::vector<double> savings;
                for (const auto& r : records) savings.push_back(r.savings_per_home_month);
                std::sort(savings.begin(), savings.end());
                std::cout << records.size() << " runs; median savings "
                          << format_double(savings[savings.size() / 2])
                          << " per home and month; summary in " << cfg.output_dir
                          << "/summary.json\n";
                return 0;
            }
            const MetricsRecord record = run_experiment(cfg);
            std::cout << "baseline " << format_double(record.baseline_cost_per_day)
                      << "/day, optimum " << format_double(record.optimal_cost_per_day)
                      << "/day, " << to_string(cfg.method) << " "
                      << format_double(record.method_cost_per_day) << "/day\n"
                      << "savings " << format_double(record.savings_per_home_month)
                      << " per home and month; records in " << cfg.output_dir << "\n";
            return 0;
        }
        if (*eval_cmd) {
            if (resolve_method(method_name, cfg)) return 1;
            cfg.check();
            const ScenarioData sc = build_scenario(cfg);
            const auto days = evaluation_days(sc, cfg.n_eval_days);
            double base = 0.0, opt = 0.0;
            for (int day : days) {
                base += baseline_rollout(sc, day, cfg.env_options);
                auto day_lp = build_day_lp(sc, day, cfg.env_options);
                auto sol = solve_day_lp(day_lp, sc);
                if (sol.status != LpStatus::Optimal)
                    throw std::runtime_error(std::string("optimisation failed: ") +
                                             to_string(sol.status));
                opt += sol.objective;
            }
            base /= days.size();
            opt /= days.size();
            std::cout << "baseline " << format_double(base) << "/day\n"
                      << "day-ahead optimum " << format_double(opt) << "/day\n"
                      << "available savings " << format_double(compute_savings(base, opt, sc.n_homes))
                      << " per home and month\n";
            if (eval_dump_lp) {
                std::filesystem::create_directories(cfg.output_dir);
                auto day_lp = build_day_lp(sc, days.front(), cfg.env_options);
                std::ofstream f(std::filesystem::path(cfg.output_dir) / "day_problem.txt");
                f << day_lp.lp().dump();
                std::cout << "problem written to " << cfg.output_dir << "/day_problem.txt\n";
            }
            if (eval_trace) {
                std::filesystem::create_directories(cfg.output_dir);
                Environment env(sc, days.front(), cfg.env_options);
                EnvState state = env.reset();
                std::string trace = episode_trace_header();
                JointAction inflexible{std::vector<double>(sc.n_homes, 1.0),
                                       std::vector<double>(sc.n_homes, 0.0),
                                       std::vector<double>(sc.n_homes, 1.0)};
                for (int t = 0; t < sc.horizon; ++t) {
                    EnvState pre = state;
                    const StepOutcome out = env.step(state, inflexible);
                    append_episode_trace(trace, env, pre, inflexible, out);
                }
                std::ofstream f(std::filesystem::path(cfg.output_dir) / "baseline_trace.csv");
                f << trace;
                std::cout << "trace written to " << cfg.output_dir << "/baseline_trace.csv\n";
            }
            return 0;
        }
        if (*bench) {
            std::vector<Method> methods;
            for (const auto& name : bench_methods) {
                auto m = method_from_string(name);
                if (!m) {
                    std::cerr << "unknown method: " << name << "\n";
                    return 1;
                }
                methods.push_back(*m);
            }
            const ScalingReport report = scaling_benchmark(methods, sizes, cfg.episodes, seeds, cfg);
            json out;
            out["points"] = json::array();
            for (const auto& p : report.points)
                out["points"].push_back({{"method", p.method},
                                         {"n_homes", p.n_homes},
                                         {"seed", p.seed},
                                         {"train_seconds", p.train_seconds}});
            out["fits"] = json::array();
            for (const auto& [name, fit] : report.fits) {
                out["fits"].push_back({{"method", name},
                                       {"linear", {{"a", fit.lin_a}, {"b", fit.lin_b}}},
                                       {"quadratic",
                                        {{"a", fit.quad_a}, {"b", fit.quad_b}, {"c", fit.quad_c}}},
                                       {"rss_linear", fit.rss_linear},
                                       {"rss_quadratic", fit.rss_quadratic},
                                       {"order", fit.order}});
                std::cout << name << ": t(n) ~ " << format_double(fit.lin_a) << " + "
                          << format_double(fit.lin_b) << " n (rss " << format_double(fit.rss_linear)
                          << ") | quadratic c=" << format_double(fit.quad_c) << " (rss "
                          << format_double(fit.rss_quadratic) << ") -> order " << fit.order << "\n";
            }
            std::filesystem::create_directories(cfg.output_dir);
            std::ofstream f(std::filesystem::path(cfg.output_dir) / "scaling.json");
            f << out.dump(2) << "\n";
            std::cout << "scaling report in " << cfg.output_dir << "/scaling.json\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
