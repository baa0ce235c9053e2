#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexcoord/marl.hpp"
#include "flexcoord/profiles.hpp"

namespace flexcoord {

// ------------------------------------------------------------- experiments --

struct ExperimentConfig {
    Method method = Method::Facmac;
    int n_homes = 1;
    int n_days = 1;        // scenario length; evaluation uses the last n_eval_days
    int n_eval_days = 1;
    int episodes = 500;
    int eval_every = 50;
    std::uint64_t seed = 1;
    std::string scenario_dir;  // load instead of generating when set
    std::string preset = "default"; // default | sanity | cooperation
    std::string output_dir = "runs/out";
    ProfileTemplate profile;
    FacmacConfig facmac;
    IqlConfig iql;
    EnvOptions env_options;

    void check() const; // throws std::invalid_argument
    TrainConfig train_config() const;
};

struct MetricsRecord {
    std::uint64_t seed = 0;
    double baseline_cost_per_day = 0.0;
    double optimal_cost_per_day = 0.0; // day-ahead optimiser reference
    double method_cost_per_day = 0.0;
    double savings_per_home_month = 0.0;
    // evaluation cost breakdown, currency/day
    double grid_energy_cost = 0.0;
    double carbon_cost = 0.0;
    double distribution_cost = 0.0;
    double storage_cost = 0.0;
    double train_seconds = 0.0; // volatile: reported separately from the record file
};

// (baseline - method) scaled to one home and one month (365.25/12 days).
double compute_savings(double baseline_cost_per_day, double method_cost_per_day, int n_homes);

struct EvaluationBreakdown {
    double cost_per_day = 0.0;
    double grid_energy = 0.0;
    double carbon = 0.0;
    double distribution = 0.0;
    double storage = 0.0;
};

// Deterministic rollouts over the evaluation days with per-term cost accounting.
EvaluationBreakdown evaluate_policies(const PolicySet& policy, const ScenarioData& scenario,
                                      const std::vector<int>& days, EnvOptions options = {});

// End-to-end: scenario -> references -> training -> evaluation -> files.
// Writes results.json (byte-stable across reruns), curve.csv and timing.json
// into config.output_dir. Returns the record.
MetricsRecord run_experiment(const ExperimentConfig& config);

// One run_experiment per seed (scenario and initialization both vary with
// the seed) into <output_dir>/seed_<s>/, plus a summary.json with the
// 25th/50th/75th percentile savings across seeds.
std::vector<MetricsRecord> run_experiment_seeds(const ExperimentConfig& config,
                                                const std::vector<std::uint64_t>& seeds);

// ----------------------------------------------------------------- scaling --

struct PolynomialFit {
    // t(n) ~ a + b n (+ c n^2)
    double lin_a = 0.0, lin_b = 0.0;
    double quad_a = 0.0, quad_b = 0.0, quad_c = 0.0;
    double rss_linear = 0.0, rss_quadratic = 0.0;
    int order = 1; // 2 when the quadratic term is positive and carries weight
    bool quadratic_fits_better = false;
};

// Least-squares fits of both polynomial orders over (size, seconds) samples.
// order = 2 requires: the quadratic fit at least halves the residual, c > 0,
// and c n_max^2 explains at least 20% of the fitted time at the largest size.
PolynomialFit fit_growth(const std::vector<std::pair<double, double>>& samples);

struct ScalingPoint {
    std::string method;
    int n_homes = 0;
    std::uint64_t seed = 0;
    double train_seconds = 0.0;
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    std::vector<std::pair<std::string, PolynomialFit>> fits; // per method
};

// Trains every method at every size (per seed) on fresh synthetic scenarios
// with a fresh day per episode, timing the training loop only.
ScalingReport scaling_benchmark(const std::vector<Method>& methods,
                                const std::vector<int>& home_counts, int episodes,
                                const std::vector<std::uint64_t>& seeds,
                                const ExperimentConfig& base);

// ----------------------------------------------------------------- presets --

// Single home, pinned battery and comfort band, one large morning flexible
// load, strong block price spread: the learnable gap is the load shift.
ScenarioData sanity_scenario(std::uint64_t seed, int n_days = 1);

// Several homes with midday PV surplus, an elevated export charge and
// morning/evening flexible demand whose windows reach the PV valley and the
// cheap night. Battery and comfort pinned.
ScenarioData cooperation_scenario(std::uint64_t seed, int n_homes = 3, int n_days = 1);

ScenarioData build_scenario(const ExperimentConfig& config); // preset dispatch + validation

} // namespace flexcoord
