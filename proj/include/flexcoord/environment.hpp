#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexcoord/profiles.hpp"

namespace flexcoord {

struct InfeasibleScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One outstanding flexible demand: `amount` kWh to be consumed by the end of
// within-day step `deadline`.
struct FlexEntry {
    double amount = 0.0;
    int deadline = 0;
};

struct EnvState {
    int t = 0;                                    // within-day step index
    std::vector<double> battery_energy;           // E_i, kWh at the start of step t
    std::vector<double> temp_mass;                // T_m
    std::vector<double> temp_air;                 // T_air
    std::vector<std::vector<FlexEntry>> flex_queue;
    double cumulative_grid_cost = 0.0;
    double cumulative_distribution_cost = 0.0;
    double cumulative_storage_cost = 0.0;
};

struct JointAction {
    std::vector<double> battery;     // a_bat in [-1, 1]
    std::vector<double> heating;     // a_heat in [0, 1]
    std::vector<double> consumption; // a_cons in [0, 1]
};

// Physical decisions for one home after action translation. All kWh.
struct HomeDecision {
    double charge = 0.0;    // b_in, battery-side
    double discharge = 0.0; // b_out, battery-side
    double heating = 0.0;   // h
    double consumption = 0.0; // c, fixed + flexible
};

struct StepOutcome {
    std::vector<HomeDecision> decisions;
    std::vector<double> home_import;  // p_i, kWh (negative = export)
    std::vector<double> loss_charge;  // eps_ch = b_in (1/eta_ch - 1)
    std::vector<double> loss_discharge; // eps_dis = b_out (1 - eta_dis)
    double substation_import = 0.0;   // g
    double reward = 0.0;              // -(c_g + c_d + c_s) for the step
    double grid_energy_cost = 0.0;    // price part of c_g
    double carbon_cost = 0.0;         // carbon part of c_g
    double distribution_cost = 0.0;   // c_d
    double storage_cost = 0.0;        // c_s
    std::vector<bool> overwarm;       // exogenous heat pushed T_air past the ceiling
};

enum class ObservationMode { Scalar, Window };

inline constexpr int kObservationWindow = 24;

// Charging/discharging room at one step. All flows battery-side kWh.
struct BatteryRange {
    double charge_forced = 0.0;    // minimum b_in to keep future trips and the
                                   // end-of-day restore reachable
    double charge_max = 0.0;
    double discharge_forced = 0.0; // minimum b_out to keep the end-of-day
                                   // restore reachable from above
    double discharge_max = 0.0;
};

struct HeatingRange {
    double low = 0.0;
    double high = 0.0;
    bool overwarm = false;
};

struct ConsumptionRange {
    double low = 0.0;
    double high = 0.0;
};

// Backward feasibility envelope for one home and one day, both of length
// horizon+1 indexed by step. reserve[t] is the minimum battery level at the
// start of step t from which all remaining trips and the end-of-day level can
// still be met; ceiling[t] the maximum level from which the end-of-day level
// can still be reached by discharging. reserve[T] = ceiling[T] = initial.
struct BatteryEnvelope {
    std::vector<double> reserve;
    std::vector<double> ceiling;
};

// Throws InfeasibleScenario when trips cannot be served (reserve above
// capacity, reserve above ceiling, or initial level below reserve).
BatteryEnvelope compute_battery_envelope(const ScenarioData& scenario, int home, int day,
                                         bool gate_discharge_by_availability = false);

struct EnvOptions {
    // The default discharge cap ignores EV availability; the flag applies it.
    bool gate_discharge_by_availability = false;
    // Appends [E/capacity, normalized T_air, queued flexible share] to every
    // observation; off by default, which keeps observations agent-independent.
    bool observe_local_state = false;
};

// One day of the multi-home Dec-POMDP. Holds the scenario reference and the
// precomputed battery envelopes; the mutable state is passed explicitly so
// that rollouts can be forked cheaply (marginal-reward resimulation).
class Environment {
public:
    Environment(const ScenarioData& scenario, int day, EnvOptions options = {});

    EnvState reset() const;

    int horizon() const { return scenario_->horizon; }
    int n_homes() const { return scenario_->n_homes; }
    int day() const { return day_; }
    const ScenarioData& scenario() const { return *scenario_; }
    int global_step(int t) const { return day_ * scenario_->horizon + t; }

    BatteryRange battery_feasible_range(const EnvState& state, int home) const;
    HeatingRange heating_feasible_range(const EnvState& state, int home) const;
    ConsumptionRange consumption_feasible_range(const EnvState& state, int home) const;

    // Maps bounded agent actions onto feasible physical decisions. Does not
    // mutate the state (queue accounting happens in step()).
    std::vector<HomeDecision> translate_actions(const EnvState& state, const JointAction& action) const;

    // Advances dynamics one step and returns the realized decisions,
    // balances and reward.
    StepOutcome step(EnvState& state, const JointAction& action) const;

    std::vector<double> observe(const EnvState& state, int home, ObservationMode mode) const;
    std::vector<double> global_state(const EnvState& state) const;

    bool done(const EnvState& state) const { return state.t >= scenario_->horizon; }

    // Sum of queued flexible energy for one home.
    static double queued_flex_energy(const EnvState& state, int home);

private:
    const ScenarioData* scenario_;
    int day_ = 0;
    EnvOptions options_;
    std::vector<BatteryEnvelope> envelopes_; // per home
    std::vector<double> daily_flex_total_;   // per home, for state normalization

    // New flexible demand at step t is visible to the ranges of step t; step()
    // enqueues it before translating.
    void enqueue_arrivals(EnvState& state) const;
};

// r = -(C_g[t] (g + eps_g) + C_d sum max(-p,0) + C_s sum (b_in + b_out))
double step_reward(const std::vector<double>& home_import, double substation_import,
                   const std::vector<double>& charge, const std::vector<double>& discharge,
                   const GridSignals& grid, int global_step);

// Initial temperatures at day start: midpoint of the comfort band at the
// day's first step (shared with the optimiser's initial condition rows).
void initial_temperatures(const ScenarioData& scenario, int home, int day,
                          double& temp_mass, double& temp_air);

// Appends one CSV row per (step, home) with actions, decisions and costs.
std::string episode_trace_header();
void append_episode_trace(std::string& out, const Environment& env, const EnvState& pre_state,
                          const JointAction& action, const StepOutcome& outcome);

} // namespace flexcoord
