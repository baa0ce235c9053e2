#include "flexcoord/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flexcoord/util.hpp"

namespace flexcoord {

namespace {
constexpr double kTol = 1e-9;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
} // namespace

BatteryEnvelope compute_battery_envelope(const ScenarioData& scenario, int home, int day,
                                         bool gate_discharge_by_availability) {
    const int T = scenario.horizon;
    const BatteryParams& bat = scenario.battery[home];
    BatteryEnvelope env;
    env.reserve.assign(T + 1, 0.0);
    env.ceiling.assign(T + 1, 0.0);
    env.reserve[T] = bat.initial;
    env.ceiling[T] = bat.initial;
    for (int t = T - 1; t >= 0; --t) {
        const int g = day * T + t;
        const double mu = scenario.homes.ev_availability[home][g];
        const double trip = scenario.homes.ev_trip_demand[home][g];
        const double charge_cap = mu * bat.max_charge;
        const double discharge_cap = (gate_discharge_by_availability ? mu : 1.0) * bat.max_discharge;
        const double need = std::max(mu * bat.min_level, env.reserve[t + 1] + trip - charge_cap);
        if (need > bat.capacity + kTol) {
            throw InfeasibleScenario("home " + std::to_string(home) + " day " + std::to_string(day) +
                                     " step " + std::to_string(t) + ": required reserve " +
                                     format_double(need) + " kWh exceeds capacity; trips cannot be served");
        }
        env.reserve[t] = std::max(need, 0.0);
        env.ceiling[t] = std::min(bat.capacity, env.ceiling[t + 1] + discharge_cap + trip);
        if (env.reserve[t] > env.ceiling[t] + kTol) {
            throw InfeasibleScenario("home " + std::to_string(home) + " day " + std::to_string(day) +
                                     " step " + std::to_string(t) +
                                     ": required reserve exceeds the dischargeable ceiling");
        }
    }
    if (env.reserve[0] > bat.initial + kTol) {
        throw InfeasibleScenario("home " + std::to_string(home) + " day " + std::to_string(day) +
                                 ": initial level " + format_double(bat.initial) +
                                 " kWh is below the required reserve " + format_double(env.reserve[0]));
    }
    return env;
}

void initial_temperatures(const ScenarioData& scenario, int home, int day,
                          double& temp_mass, double& temp_air) {
    const int g = day * scenario.horizon;
    const double lo = scenario.homes.temp_low[home][g];
    const double hi = scenario.homes.temp_high[home][g];
    temp_air = 0.5 * (lo + hi);
    temp_mass = temp_air;
}

Environment::Environment(const ScenarioData& scenario, int day, EnvOptions options)
    : scenario_(&scenario), day_(day), options_(options) {
    if (day < 0 || day >= scenario.n_days) throw std::out_of_range("Environment: day out of range");
    envelopes_.reserve(scenario.n_homes);
    daily_flex_total_.assign(scenario.n_homes, 0.0);
    for (int i = 0; i < scenario.n_homes; ++i) {
        envelopes_.push_back(
            compute_battery_envelope(scenario, i, day, options.gate_discharge_by_availability));
        for (int t = 0; t < scenario.horizon; ++t)
            daily_flex_total_[i] += scenario.homes.flexible_demand[i][global_step(t)];
    }
}

EnvState Environment::reset() const {
    const int n = scenario_->n_homes;
    EnvState s;
    s.t = 0;
    s.battery_energy.resize(n);
    s.temp_mass.resize(n);
    s.temp_air.resize(n);
    s.flex_queue.assign(n, {});
    for (int i = 0; i < n; ++i) {
        s.battery_energy[i] = scenario_->battery[i].initial;
        initial_temperatures(*scenario_, i, day_, s.temp_mass[i], s.temp_air[i]);
    }
    enqueue_arrivals(s);
    return s;
}

void Environment::enqueue_arrivals(EnvState& state) const {
    const int g = global_step(state.t);
    const int deadline = scenario_->flex_deadline(state.t);
    for (int i = 0; i < scenario_->n_homes; ++i) {
        const double amount = scenario_->homes.flexible_demand[i][g];
        if (amount > 0.0) state.flex_queue[i].push_back({amount, deadline});
    }
}

BatteryRange Environment::battery_feasible_range(const EnvState& state, int home) const {
    const int t = state.t;
    const int g = global_step(t);
    const BatteryParams& bat = scenario_->battery[home];
    const BatteryEnvelope& env = envelopes_[home];
    const double mu = scenario_->homes.ev_availability[home][g];
    const double trip = scenario_->homes.ev_trip_demand[home][g];
    const double after_trip = state.battery_energy[home] - trip;
    const double charge_cap = mu * bat.max_charge;
    const double discharge_cap =
        (options_.gate_discharge_by_availability ? mu : 1.0) * bat.max_discharge;
    const double need = env.reserve[t + 1] - after_trip; // <0 when above reserve
    const double room = env.ceiling[t + 1] - after_trip; // <0 when above ceiling

    BatteryRange r;
    r.charge_max = std::max(0.0, std::min(charge_cap, room));
    r.charge_forced = clamp(need, 0.0, r.charge_max);
    r.discharge_max = std::max(0.0, std::min(discharge_cap, -need));
    r.discharge_forced = clamp(-room, 0.0, r.discharge_max);
    return r;
}

HeatingRange Environment::heating_feasible_range(const EnvState& state, int home) const {
    const int t = state.t;
    const int g = global_step(t);
    const auto& kappa = scenario_->thermal[home].kappa;
    const double cap = scenario_->thermal[home].heat_cap;
    const double base_air = kappa[1][0] + kappa[1][1] * state.temp_mass[home] +
                            kappa[1][2] * scenario_->homes.external_temp[g] +
                            kappa[1][3] * scenario_->homes.solar_heat_flow[g];
    // heating at t controls T_air at t+1; bounds index clamps at the day end
    const int b = day_ * scenario_->horizon + std::min(t + 1, scenario_->horizon - 1);
    const double lo = scenario_->homes.temp_low[home][b];
    const double hi = scenario_->homes.temp_high[home][b];
    HeatingRange r;
    r.low = std::min(std::max(0.0, (lo - base_air) / kappa[1][4]), cap);
    r.high = std::max(r.low, std::min(cap, (hi - base_air) / kappa[1][4]));
    r.overwarm = base_air > hi + kTol;
    return r;
}

ConsumptionRange Environment::consumption_feasible_range(const EnvState& state, int home) const {
    const int g = global_step(state.t);
    ConsumptionRange r;
    r.low = r.high = scenario_->homes.fixed_demand[home][g];
    for (const FlexEntry& e : state.flex_queue[home]) {
        if (e.deadline <= state.t) r.low += e.amount;
        r.high += e.amount;
    }
    return r;
}

std::vector<HomeDecision> Environment::translate_actions(const EnvState& state,
                                                         const JointAction& action) const {
    const int n = scenario_->n_homes;
    std::vector<HomeDecision> out(n);
    for (int i = 0; i < n; ++i) {
        const BatteryRange br = battery_feasible_range(state, i);
        const double a = clamp(action.battery[i], -1.0, 1.0);
        HomeDecision& d = out[i];
        if (a >= 0.0) {
            d.charge = br.charge_forced + a * (br.charge_max - br.charge_forced);
            d.discharge = br.discharge_forced; // zero unless above the ceiling
        } else if (br.charge_forced > 0.0) {
            d.charge = br.charge_forced; // discharging while a charge is forced: clamp to a = 0
        } else {
            d.discharge = std::max(br.discharge_forced, -a * br.discharge_max);
        }

        const HeatingRange hr = heating_feasible_range(state, i);
        const double ah = clamp(action.heating[i], 0.0, 1.0);
        d.heating = (1.0 - ah) * hr.low + ah * hr.high;

        const ConsumptionRange cr = consumption_feasible_range(state, i);
        const double ac = clamp(action.consumption[i], 0.0, 1.0);
        d.consumption = (1.0 - ac) * cr.low + ac * cr.high;
    }
    return out;
}

double step_reward(const std::vector<double>& home_import, double substation_import,
                   const std::vector<double>& charge, const std::vector<double>& discharge,
                   const GridSignals& grid, int global_step) {
    double exports = 0.0;
    for (double p : home_import) exports += std::max(-p, 0.0);
    double throughput = 0.0;
    for (std::size_t i = 0; i < charge.size(); ++i) throughput += charge[i] + discharge[i];
    const double grid_cost =
        grid.grid_cost_coeff[global_step] * (substation_import + grid.grid_loss_term);
    return -(grid_cost + grid.export_charge * exports + grid.storage_cost * throughput);
}

StepOutcome Environment::step(EnvState& state, const JointAction& action) const {
    if (done(state)) throw std::logic_error("Environment::step: episode already finished");
    const int n = scenario_->n_homes;
    const int t = state.t;
    const int g = global_step(t);

    StepOutcome out;
    out.decisions = translate_actions(state, action);
    out.home_import.resize(n);
    out.loss_charge.resize(n);
    out.loss_discharge.resize(n);
    out.overwarm.resize(n);

    for (int i = 0; i < n; ++i) {
        HomeDecision& d = out.decisions[i];
        const BatteryParams& bat = scenario_->battery[i];

        // battery level balance including the trip consumption
        state.battery_energy[i] +=
            d.charge - d.discharge - scenario_->homes.ev_trip_demand[i][g];

        // thermal recursion
        const auto& kappa = scenario_->thermal[i].kappa;
        const double in[5] = {1.0, state.temp_mass[i], scenario_->homes.external_temp[g],
                              scenario_->homes.solar_heat_flow[g], d.heating};
        double tm = 0.0, ta = 0.0;
        for (int k = 0; k < 5; ++k) {
            tm += kappa[0][k] * in[k];
            ta += kappa[1][k] * in[k];
        }
        out.overwarm[i] = heating_feasible_range(state, i).overwarm;
        state.temp_mass[i] = tm;
        state.temp_air[i] = ta;

        // flexible queue: due-now entries are always fully consumed, the rest
        // of the budget goes earliest-deadline-first
        auto& queue = state.flex_queue[i];
        double flex_budget = d.consumption - scenario_->homes.fixed_demand[i][g];
        double allocated = 0.0;
        for (FlexEntry& e : queue) {
            double take;
            if (e.deadline <= t) {
                take = e.amount;
            } else {
                take = clamp(flex_budget - allocated, 0.0, e.amount);
            }
            e.amount -= take;
            allocated += take;
        }
        std::erase_if(queue, [](const FlexEntry& e) { return e.amount <= 1e-12; });
        d.consumption = scenario_->homes.fixed_demand[i][g] + allocated;

        out.home_import[i] = d.consumption + d.heating + d.charge / bat.eta_ch -
                             bat.eta_dis * d.discharge -
                             scenario_->homes.pv_generation[i][g];
        out.loss_charge[i] = d.charge * (1.0 / bat.eta_ch - 1.0);
        out.loss_discharge[i] = d.discharge * (1.0 - bat.eta_dis);
        out.substation_import += out.home_import[i];
    }

    const GridSignals& grid = scenario_->grid;
    double exports = 0.0, throughput = 0.0;
    for (int i = 0; i < n; ++i) {
        exports += std::max(-out.home_import[i], 0.0);
        throughput += out.decisions[i].charge + out.decisions[i].discharge;
    }
    out.grid_energy_cost =
        grid.wholesale_price[g] * (out.substation_import + grid.grid_loss_term);
    out.carbon_cost = grid.carbon_intensity[g] * grid.social_cost_carbon *
                      (out.substation_import + grid.grid_loss_term);
    out.distribution_cost = grid.export_charge * exports;
    out.storage_cost = grid.storage_cost * throughput;
    out.reward = -(out.grid_energy_cost + out.carbon_cost + out.distribution_cost +
                   out.storage_cost);

    state.cumulative_grid_cost += out.grid_energy_cost + out.carbon_cost;
    state.cumulative_distribution_cost += out.distribution_cost;
    state.cumulative_storage_cost += out.storage_cost;

    state.t += 1;
    if (!done(state)) enqueue_arrivals(state);
    return out;
}

std::vector<double> Environment::observe(const EnvState& state, int home,
                                         ObservationMode mode) const {
    const auto& cg = scenario_->grid.grid_cost_coeff;
    const int last = scenario_->n_steps() - 1;
    const int g = std::min(global_step(state.t), last);
    std::vector<double> obs;
    if (mode == ObservationMode::Scalar) {
        obs = {cg[g]};
    } else {
        obs.resize(kObservationWindow);
        for (int j = 0; j < kObservationWindow; ++j) obs[j] = cg[std::min(g + j, last)];
    }
    if (options_.observe_local_state) {
        const int b = day_ * scenario_->horizon + std::min(state.t, scenario_->horizon - 1);
        obs.push_back(state.battery_energy[home] / scenario_->battery[home].capacity);
        const double lo = scenario_->homes.temp_low[home][b];
        const double hi = scenario_->homes.temp_high[home][b];
        obs.push_back(hi > lo ? (state.temp_air[home] - lo) / (hi - lo) : 0.0);
        obs.push_back(daily_flex_total_[home] > 0.0
                          ? queued_flex_energy(state, home) / daily_flex_total_[home]
                          : 0.0);
    }
    return obs;
}

double Environment::queued_flex_energy(const EnvState& state, int home) {
    double total = 0.0;
    for (const FlexEntry& e : state.flex_queue[home]) total += e.amount;
    return total;
}

std::vector<double> Environment::global_state(const EnvState& state) const {
    const int n = scenario_->n_homes;
    const int T = scenario_->horizon;
    const auto& cg = scenario_->grid.grid_cost_coeff;
    const int last = scenario_->n_steps() - 1;
    const int g = std::min(global_step(state.t), last);
    std::vector<double> s(kObservationWindow);
    for (int j = 0; j < kObservationWindow; ++j) s[j] = cg[std::min(g + j, last)];
    s.reserve(kObservationWindow + 3 * n + 1);
    const int b = day_ * T + std::min(state.t, T - 1);
    for (int i = 0; i < n; ++i) s.push_back(state.battery_energy[i] / scenario_->battery[i].capacity);
    for (int i = 0; i < n; ++i) {
        const double lo = scenario_->homes.temp_low[i][b];
        const double hi = scenario_->homes.temp_high[i][b];
        s.push_back(hi > lo ? (state.temp_air[i] - lo) / (hi - lo) : 0.0);
    }
    for (int i = 0; i < n; ++i)
        s.push_back(daily_flex_total_[i] > 0.0 ? queued_flex_energy(state, i) / daily_flex_total_[i]
                                               : 0.0);
    s.push_back(static_cast<double>(state.t) / T);
    return s;
}

std::string episode_trace_header() {
    return "day,t,home,obs_hash,a_bat,a_heat,a_cons,b_in,b_out,h,c,p,reward\n";
}

void append_episode_trace(std::string& out, const Environment& env, const EnvState& pre_state,
                          const JointAction& action, const StepOutcome& outcome) {
    for (int i = 0; i < env.n_homes(); ++i) {
        char hash[32];
        std::snprintf(hash, sizeof hash, "%016llx",
                      static_cast<unsigned long long>(
                          hash_doubles(env.observe(pre_state, i, ObservationMode::Window))));
        out += std::to_string(env.day()) + ',' + std::to_string(pre_state.t) + ',' +
               std::to_string(i) + ',' + hash + ',' + format_double(action.battery[i]) + ',' +
               format_double(action.heating[i]) + ',' + format_double(action.consumption[i]) +
               ',' + format_double(outcome.decisions[i].charge) + ',' +
               format_double(outcome.decisions[i].discharge) + ',' +
               format_double(outcome.decisions[i].heating) + ',' +
               format_double(outcome.decisions[i].consumption) + ',' +
               format_double(outcome.home_import[i]) + ',' + format_double(outcome.reward) + '\n';
    }
}

} // namespace flexcoord
