#include "flexcoord/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flexcoord/oracle.hpp"
#include "flexcoord/util.hpp"

namespace flexcoord {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr double kDaysPerMonth = 365.25 / 12.0;
} // namespace

double compute_savings(double baseline_cost_per_day, double method_cost_per_day, int n_homes) {
    if (n_homes < 1) throw std::invalid_argument("compute_savings: n_homes must be >= 1");
    if (!std::isfinite(baseline_cost_per_day) || !std::isfinite(method_cost_per_day))
        throw std::invalid_argument("compute_savings: non-finite cost");
    return (baseline_cost_per_day - method_cost_per_day) * kDaysPerMonth / n_homes;
}

EvaluationBreakdown evaluate_policies(const PolicySet& policy, const ScenarioData& sc,
                                      const std::vector<int>& days, EnvOptions options) {
    if (days.empty()) throw std::invalid_argument("evaluate_policies: no evaluation days");
    EvaluationBreakdown out;
    for (int day : days) {
        Environment env(sc, day, options);
        EnvState state = env.reset();
        for (int t = 0; t < sc.horizon; ++t) {
            JointAction joint;
            joint.battery.resize(sc.n_homes);
            joint.heating.resize(sc.n_homes);
            joint.consumption.resize(sc.n_homes);
            for (int i = 0; i < sc.n_homes; ++i) {
                ActionTriple a{};
                if (policy.method == Method::Facmac || policy.method == Method::FacmacSupervised)
                    a = policy.facmac->act(env.observe(state, i, ObservationMode::Window), i);
                else
                    a = policy.iql->greedy(i, env.observe(state, i, ObservationMode::Scalar)[0]);
                joint.battery[i] = a[0];
                joint.heating[i] = a[1];
                joint.consumption[i] = a[2];
            }
            const StepOutcome step = env.step(state, joint);
            out.grid_energy += step.grid_energy_cost;
            out.carbon += step.carbon_cost;
            out.distribution += step.distribution_cost;
            out.storage += step.storage_cost;
        }
    }
    const double scale = 1.0 / static_cast<double>(days.size());
    out.grid_energy *= scale;
    out.carbon *= scale;
    out.distribution *= scale;
    out.storage *= scale;
    out.cost_per_day = out.grid_energy + out.carbon + out.distribution + out.storage;
    return out;
}

// ----------------------------------------------------------------- presets --

ScenarioData sanity_scenario(std::uint64_t seed, int n_days) {
    ProfileTemplate tpl;
    tpl.trip_kwh = 0.0;
    tpl.battery_min_frac = 1.0; // battery pinned at capacity
    tpl.battery_initial_frac = 1.0;
    tpl.flexible_share = 0.0; // the single load is injected below
    tpl.demand_base = 0.3;
    tpl.demand_morning = 0.0;
    tpl.demand_evening = 0.0;
    tpl.demand_noise = 0.02;
    tpl.pv_peak = 0.0;
    tpl.comfort_low = 19.0; // heating fully determined
    tpl.comfort_high = 19.0;
    tpl.flex_window = 8;
    ScenarioData sc = generate_profiles(seed, 1, n_days, tpl);

    // block tariff: cheap night, expensive working hours, cheap evening; the
    // morning load's window reaches the cheap block
    for (int t = 0; t < sc.n_steps(); ++t) {
        const int hour = t % 24;
        sc.grid.wholesale_price[t] = hour < 7 ? 0.10 : (hour < 16 ? 0.32 : 0.08);
        sc.grid.carbon_intensity[t] = 1e-4;
    }
    sc.grid.grid_cost_coeff = grid_cost_coefficient(sc.grid.wholesale_price,
                                                    sc.grid.carbon_intensity,
                                                    sc.grid.social_cost_carbon);
    for (int d = 0; d < n_days; ++d) sc.homes.flexible_demand[0][d * 24 + 8] = 8.0;
    return sc;
}

ScenarioData cooperation_scenario(std::uint64_t seed, int n_homes, int n_days) {
    ProfileTemplate tpl;
    tpl.trip_kwh = 0.0;
    tpl.battery_min_frac = 1.0;
    tpl.battery_initial_frac = 1.0;
    tpl.flexible_share = 0.5;
    tpl.flex_window = 5; // morning windows land in the solar valley, evening in the night
    tpl.demand_base = 0.35;
    tpl.demand_morning = 0.9;
    tpl.demand_evening = 1.2;
    tpl.demand_noise = 0.05;
    tpl.pv_peak = 2.0;
    tpl.export_charge = 0.05;
    tpl.price_night = 0.07;
    tpl.price_day = 0.15;
    tpl.price_peak = 0.30;
    tpl.price_noise = 0.004;
    tpl.comfort_low = 19.0;
    tpl.comfort_high = 19.0;
    return generate_profiles(seed, n_homes, n_days, tpl);
}

ScenarioData build_scenario(const ExperimentConfig& config) {
    if (!config.scenario_dir.empty()) {
        auto loaded = load_scenario_csv(config.scenario_dir);
        if (!loaded.scenario) {
            std::string msg = "scenario " + config.scenario_dir + " failed validation:";
            for (const auto& v : loaded.violations) msg += "\n  " + v.to_string();
            throw std::runtime_error(msg);
        }
        return *std::move(loaded.scenario);
    }
    ScenarioData sc;
    if (config.preset == "sanity") sc = sanity_scenario(config.seed, config.n_days);
    else if (config.preset == "cooperation")
        sc = cooperation_scenario(config.seed, config.n_homes, config.n_days);
    else sc = generate_profiles(config.seed, config.n_homes, config.n_days, config.profile);
    const auto violations = validate(sc);
    if (!violations.empty()) {
        std::string msg = "generated scenario failed validation:";
        for (const auto& v : violations) msg += "\n  " + v.to_string();
        throw std::runtime_error(msg);
    }
    return sc;
}

// -------------------------------------------------------------- experiment --

void ExperimentConfig::check() const {
    if (n_homes < 1) throw std::invalid_argument("n_homes must be >= 1");
    if (n_days < 1) throw std::invalid_argument("n_days must be >= 1");
    if (n_eval_days < 1 || n_eval_days > n_days)
        throw std::invalid_argument("n_eval_days must lie in [1, n_days]");
    if (preset != "default" && preset != "sanity" && preset != "cooperation")
        throw std::invalid_argument("unknown preset: " + preset);
    if (preset == "sanity" && n_homes != 1)
        throw std::invalid_argument("the sanity preset is a single-home scenario");
    if (output_dir.empty()) throw std::invalid_argument("output_dir must be set");
    train_config().check();
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig t;
    t.method = method;
    t.episodes = episodes;
    t.eval_every = eval_every;
    t.n_eval_days = n_eval_days;
    t.seed = seed;
    t.facmac = facmac;
    t.iql = iql;
    t.env_options = env_options;
    return t;
}

namespace {

json config_json(const ExperimentConfig& c) {
    json j;
    j["method"] = to_string(c.method);
    j["n_homes"] = c.n_homes;
    j["n_days"] = c.n_days;
    j["n_eval_days"] = c.n_eval_days;
    j["episodes"] = c.episodes;
    j["eval_every"] = c.eval_every;
    j["seed"] = c.seed;
    j["scenario_dir"] = c.scenario_dir;
    j["preset"] = c.preset;
    const ProfileTemplate& p = c.profile;
    j["profile"] = {{"price_night", p.price_night},
                    {"price_day", p.price_day},
                    {"price_peak", p.price_peak},
                    {"price_noise", p.price_noise},
                    {"carbon_base", p.carbon_base},
                    {"carbon_swing", p.carbon_swing},
                    {"social_cost_carbon", p.social_cost_carbon},
                    {"export_charge", p.export_charge},
                    {"storage_cost", p.storage_cost},
                    {"grid_loss_term", p.grid_loss_term},
                    {"demand_base", p.demand_base},
                    {"demand_morning", p.demand_morning},
                    {"demand_evening", p.demand_evening},
                    {"demand_noise", p.demand_noise},
                    {"flexible_share", p.flexible_share},
                    {"flex_window", p.flex_window},
                    {"pv_peak", p.pv_peak},
                    {"pv_noise", p.pv_noise},
                    {"temp_mean", p.temp_mean},
                    {"temp_swing", p.temp_swing},
                    {"temp_noise", p.temp_noise},
                    {"comfort_low", p.comfort_low},
                    {"comfort_high", p.comfort_high},
                    {"heat_cap", p.heat_cap},
                    {"commute_leave", p.commute_leave},
                    {"commute_return", p.commute_return},
                    {"trip_kwh", p.trip_kwh},
                    {"battery_capacity", p.battery_capacity},
                    {"battery_min_frac", p.battery_min_frac},
                    {"battery_initial_frac", p.battery_initial_frac},
                    {"battery_max_charge", p.battery_max_charge},
                    {"battery_max_discharge", p.battery_max_discharge},
                    {"battery_eta", p.battery_eta}};
    const FacmacConfig& f = c.facmac;
    j["facmac"] = {{"conv_actor", f.conv_actor},
                   {"shared_actor", f.shared_actor},
                   {"conv_channels", f.conv_channels},
                   {"actor_hidden", f.actor_hidden},
                   {"critic_hidden", f.critic_hidden},
                   {"mixer_hidden", f.mixer_hidden},
                   {"lr_actor", f.lr_actor},
                   {"lr_critic", f.lr_critic},
                   {"gamma", f.gamma},
                   {"tau", f.tau},
                   {"hysteretic", f.hysteretic},
                   {"hysteresis_ratio", f.hysteresis_ratio},
                   {"supervised_weight", f.supervised_weight},
                   {"batch_size", f.batch_size},
                   {"buffer_capacity", f.buffer_capacity},
                   {"updates_per_episode", f.updates_per_episode},
                   {"sigma_start", f.sigma_start},
                   {"sigma_end", f.sigma_end},
                   {"demo_fraction", f.demo_fraction}};
    const IqlConfig& q = c.iql;
    j["iql"] = {{"obs_bins", q.obs_bins},
                {"action_bins", q.action_bins},
                {"alpha", q.alpha},
                {"beta", q.beta},
                {"hysteretic", q.hysteretic},
                {"gamma", q.gamma},
                {"eps_start", q.eps_start},
                {"eps_end", q.eps_end}};
    j["env"] = {{"gate_discharge_by_availability", c.env_options.gate_discharge_by_availability}};
    return j;
}

void write_file_or_throw(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void save_policy_files(const fs::path& dir, const PolicySet& policy) {
    if (policy.facmac) {
        std::ostringstream nets;
        std::vector<std::pair<std::string, const Network*>> sections;
        for (std::size_t k = 0; k < policy.facmac->actors.size(); ++k)
            sections.emplace_back("actor" + std::to_string(k), &policy.facmac->actors[k]);
        for (std::size_t i = 0; i < policy.facmac->critics.size(); ++i)
            sections.emplace_back("critic" + std::to_string(i), &policy.facmac->critics[i]);
        save_networks(nets, sections);
        write_file_or_throw(dir / "networks.txt", nets.str());

        std::string mixer = "mixer v1\n" + std::to_string(policy.facmac->mixer.n_agents()) + " " +
                            std::to_string(policy.facmac->mixer.state_dim()) + " " +
                            std::to_string(policy.facmac->mixer.hidden()) + "\n";
        for (double v : policy.facmac->mixer.params()) mixer += format_double(v) + "\n";
        write_file_or_throw(dir / "mixer.txt", mixer);
    }
    if (policy.iql) {
        std::ostringstream tables;
        for (std::size_t i = 0; i < policy.iql->tables.size(); ++i) {
            tables << "agent " << i << "\n";
            policy.iql->tables[i].dump(tables);
        }
        write_file_or_throw(dir / "qtables.txt", tables.str());
    }
}

} // namespace

MetricsRecord run_experiment(const ExperimentConfig& config) {
    config.check();
    const ScenarioData sc = build_scenario(config);
    const auto eval_days = evaluation_days(sc, config.n_eval_days);
    MetricsRecord record;
    record.seed = config.seed;

    double optimal_total = 0.0;
    for (int day : eval_days) {
        auto day_lp = build_day_lp(sc, day, config.env_options);
        auto sol = solve_day_lp(day_lp, sc);
        if (sol.status != LpStatus::Optimal)
            throw std::runtime_error(std::string("day-ahead optimisation failed: ") +
                                     to_string(sol.status) + " " + sol.message);
        optimal_total += sol.objective;
    }
    record.optimal_cost_per_day = optimal_total / static_cast<double>(eval_days.size());

    TrainResult trained = train(sc, config.train_config());
    record.baseline_cost_per_day = trained.baseline_cost_per_day;
    record.train_seconds = trained.train_seconds;
    if (record.optimal_cost_per_day > record.baseline_cost_per_day + 1e-7)
        throw std::runtime_error("reference ordering violated: optimiser above baseline");

    const EvaluationBreakdown eval =
        evaluate_policies(trained.policy, sc, eval_days, config.env_options);
    record.method_cost_per_day = eval.cost_per_day;
    record.grid_energy_cost = eval.grid_energy;
    record.carbon_cost = eval.carbon;
    record.distribution_cost = eval.distribution;
    record.storage_cost = eval.storage;
    record.savings_per_home_month =
        compute_savings(record.baseline_cost_per_day, record.method_cost_per_day, sc.n_homes);

    // prepare all file contents before touching the filesystem
    json results;
    results["config"] = config_json(config);
    results["seed"] = record.seed;
    results["baseline_cost_per_day"] = record.baseline_cost_per_day;
    results["optimal_cost_per_day"] = record.optimal_cost_per_day;
    results["method_cost_per_day"] = record.method_cost_per_day;
    results["savings_per_home_month"] = record.savings_per_home_month;
    results["breakdown"] = {{"grid_energy", record.grid_energy_cost},
                            {"carbon", record.carbon_cost},
                            {"distribution", record.distribution_cost},
                            {"storage", record.storage_cost}};

    std::string curve = "episode,eval_cost_per_day,savings_per_home_month,wall_seconds\n";
    for (const CurvePoint& p : trained.curve)
        curve += std::to_string(p.episode) + ',' + format_double(p.eval_cost_per_day) + ',' +
                 format_double(p.savings_per_home_month) + ',' + format_double(p.wall_seconds) +
                 '\n';

    json timing;
    timing["train_seconds"] = record.train_seconds;

    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    try {
        write_file_or_throw(dir / "results.json", results.dump(2) + "\n");
        written.push_back(dir / "results.json");
        write_file_or_throw(dir / "curve.csv", curve);
        written.push_back(dir / "curve.csv");
        write_file_or_throw(dir / "timing.json", timing.dump(2) + "\n");
        written.push_back(dir / "timing.json");
        save_policy_files(dir, trained.policy);
    } catch (...) {
        for (const auto& p : written) fs::remove(p);
        throw;
    }
    return record;
}

std::vector<MetricsRecord> run_experiment_seeds(const ExperimentConfig& config,
                                                const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("run_experiment_seeds: no seeds");
    std::vector<MetricsRecord> records;
    for (const std::uint64_t seed : seeds) {
        ExperimentConfig per_seed = config;
        per_seed.seed = seed;
        per_seed.output_dir =
            (fs::path(config.output_dir) / ("seed_" + std::to_string(seed))).string();
        records.push_back(run_experiment(per_seed));
    }
    std::vector<double> savings;
    for (const auto& r : records) savings.push_back(r.savings_per_home_month);
    std::sort(savings.begin(), savings.end());
    auto pct = [&](double p) {
        const double idx = p * (savings.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, savings.size() - 1);
        return savings[lo] + (idx - lo) * (savings[hi] - savings[lo]);
    };
    json summary;
    summary["seeds"] = seeds;
    summary["savings_per_home_month"] = {{"p25", pct(0.25)}, {"p50", pct(0.50)}, {"p75", pct(0.75)}};
    summary["records"] = json::array();
    for (std::size_t k = 0; k < records.size(); ++k)
        summary["records"].push_back({{"seed", records[k].seed},
                                      {"baseline_cost_per_day", records[k].baseline_cost_per_day},
                                      {"optimal_cost_per_day", records[k].optimal_cost_per_day},
                                      {"method_cost_per_day", records[k].method_cost_per_day},
                                      {"savings_per_home_month", records[k].savings_per_home_month}});
    fs::create_directories(config.output_dir);
    write_file_or_throw(fs::path(config.output_dir) / "summary.json", summary.dump(2) + "\n");
    return records;
}

// ----------------------------------------------------------------- scaling --

PolynomialFit fit_growth(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 3)
        throw std::invalid_argument("fit_growth: need at least three samples");
    PolynomialFit fit;

    // normal equations for degree 1 and 2
    auto solve = [&](int degree, double* coef) {
        const int k = degree + 1;
        double a[3][3] = {};
        double b[3] = {};
        for (const auto& [n, t] : samples) {
            double powers[5] = {1, n, n * n, n * n * n, n * n * n * n};
            for (int r = 0; r < k; ++r) {
                b[r] += powers[r] * t;
                for (int c = 0; c < k; ++c) a[r][c] += powers[r + c];
            }
        }
        // Gaussian elimination with partial pivoting
        int idx[3] = {0, 1, 2};
        for (int col = 0; col < k; ++col) {
            int piv = col;
            for (int r = col + 1; r < k; ++r)
                if (std::abs(a[idx[r]][col]) > std::abs(a[idx[piv]][col])) piv = r;
            std::swap(idx[col], idx[piv]);
            for (int r = 0; r < k; ++r) {
                if (r == col) continue;
                const double f = a[idx[r]][col] / a[idx[col]][col];
                for (int c = col; c < k; ++c) a[idx[r]][c] -= f * a[idx[col]][c];
                b[idx[r]] -= f * b[idx[col]];
            }
        }
        for (int r = 0; r < k; ++r) coef[r] = b[idx[r]] / a[idx[r]][r];
    };
    double lin[2] = {};
    double quad[3] = {};
    solve(1, lin);
    solve(2, quad);
    fit.lin_a = lin[0];
    fit.lin_b = lin[1];
    fit.quad_a = quad[0];
    fit.quad_b = quad[1];
    fit.quad_c = quad[2];

    double n_max = 0.0;
    for (const auto& [n, t] : samples) {
        const double r1 = t - (lin[0] + lin[1] * n);
        const double r2 = t - (quad[0] + quad[1] * n + quad[2] * n * n);
        fit.rss_linear += r1 * r1;
        fit.rss_quadratic += r2 * r2;
        n_max = std::max(n_max, n);
    }

    fit.quadratic_fits_better = fit.rss_quadratic < 0.5 * fit.rss_linear;
    const double t_at_max = fit.quad_a + fit.quad_b * n_max + fit.quad_c * n_max * n_max;
    const double quad_share =
        std::abs(t_at_max) > 0.0 ? fit.quad_c * n_max * n_max / std::abs(t_at_max) : 0.0;
    fit.order = (fit.quadratic_fits_better && fit.quad_c > 0.0 && quad_share >= 0.2) ? 2 : 1;
    return fit;
}

ScalingReport scaling_benchmark(const std::vector<Method>& methods,
                                const std::vector<int>& home_counts, int episodes,
                                const std::vector<std::uint64_t>& seeds,
                                const ExperimentConfig& base) {
    if (home_counts.size() < 3)
        throw std::invalid_argument("scaling_benchmark: need at least three sizes");
    if (methods.empty() || seeds.empty())
        throw std::invalid_argument("scaling_benchmark: methods and seeds must be non-empty");

    ScalingReport report;
    for (const Method method : methods) {
        std::vector<std::pair<double, double>> samples;
        for (const int n : home_counts) {
            for (const std::uint64_t seed : seeds) {
                // a fresh day per episode so per-episode work is not amortised
                const std::uint64_t sc_seed = derive_seed(seed, "scaling" + std::to_string(n));
                ScenarioData sc =
                    generate_profiles(sc_seed, n, episodes + base.n_eval_days, base.profile);
                TrainConfig t = base.train_config();
                t.method = method;
                t.episodes = episodes;
                t.eval_every = std::max(episodes, 1);
                t.seed = seed;
                const TrainResult r = train(sc, t);
                report.points.push_back({to_string(method), n, seed, r.train_seconds});
                samples.emplace_back(static_cast<double>(n), r.train_seconds);
            }
        }
        report.fits.emplace_back(to_string(method), fit_growth(samples));
    }
    return report;
}

} // namespace flexcoord
