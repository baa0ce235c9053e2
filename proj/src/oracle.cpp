#include "flexcoord/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "flexcoord/util.hpp"

namespace flexcoord {

long day_lp_variable_count(int n_homes, int horizon, int n_flex) {
    long window_total = 0;
    for (int t = 0; t < horizon; ++t)
        window_total += std::min(horizon - 1, t + n_flex) - t + 1;
    return horizon + 6L * n_homes * horizon + 2L * n_homes * (horizon + 1) +
           n_homes * window_total;
}

int DayLp::deadline(int t_demand) const { return scenario_->flex_deadline(t_demand); }

double DayLp::consumption(const LpSolution& sol, int i, int t) const {
    double c = scenario_->homes.fixed_demand[i][day_ * T_ + t];
    for (int td = std::max(0, t - scenario_->homes.flex_window); td <= t; ++td)
        if (t <= deadline(td)) c += sol.x[var_partial(i, td, t)];
    return c;
}

DayLp::DayLp(const ScenarioData& sc, int day, EnvOptions options)
    : scenario_(&sc), day_(day), T_(sc.horizon), n_(sc.n_homes) {
    const GridSignals& grid = sc.grid;
    const HomeProfiles& homes = sc.homes;
    auto at = [&](int t) { return day * T_ + t; };

    window_prefix_.assign(T_ + 1, 0);
    for (int t = 0; t < T_; ++t)
        window_prefix_[t + 1] = window_prefix_[t] + (deadline(t) - t + 1);
    window_total_ = window_prefix_[T_];

    // variables, in the layout order the accessors assume
    for (int t = 0; t < T_; ++t)
        lp_.add_variable("g[" + std::to_string(t) + "]", -kLpInf, kLpInf, grid.grid_cost_coeff[at(t)]);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t)
            lp_.add_variable("p[" + std::to_string(i) + "][" + std::to_string(t) + "]", -kLpInf,
                             kLpInf);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t)
            lp_.add_variable("e[" + std::to_string(i) + "][" + std::to_string(t) + "]", 0.0, kLpInf,
                             grid.export_charge);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t)
            lp_.add_variable("bin[" + std::to_string(i) + "][" + std::to_string(t) + "]", 0.0,
                             homes.ev_availability[i][at(t)] * sc.battery[i].max_charge,
                             grid.storage_cost);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t) {
            const double gate =
                options.gate_discharge_by_availability ? homes.ev_availability[i][at(t)] : 1.0;
            lp_.add_variable("bout[" + std::to_string(i) + "][" + std::to_string(t) + "]", 0.0,
                             gate * sc.battery[i].max_discharge, grid.storage_cost);
        }
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t)
            lp_.add_variable("E[" + std::to_string(i) + "][" + std::to_string(t) + "]",
                             homes.ev_availability[i][at(t)] * sc.battery[i].min_level,
                             sc.battery[i].capacity);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t)
            lp_.add_variable("h[" + std::to_string(i) + "][" + std::to_string(t) + "]", 0.0,
                             sc.thermal[i].heat_cap);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t <= T_; ++t)
            lp_.add_variable("Tm[" + std::to_string(i) + "][" + std::to_string(t) + "]", -kLpInf,
                             kLpInf);
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t <= T_; ++t)
            lp_.add_variable("Tair[" + std::to_string(i) + "][" + std::to_string(t) + "]", -kLpInf,
                             kLpInf);
    chat_base_ = lp_.n_vars();
    for (int i = 0; i < n_; ++i)
        for (int td = 0; td < T_; ++td)
            for (int tc = td; tc <= deadline(td); ++tc)
                lp_.add_variable("chat[" + std::to_string(i) + "][" + std::to_string(td) + "][" +
                                     std::to_string(tc) + "]",
                                 0.0, kLpInf);
    lp_.objective_constant = 0.0;
    for (int t = 0; t < T_; ++t)
        lp_.objective_constant += grid.grid_cost_coeff[at(t)] * grid.grid_loss_term;

    // substation balance
    for (int t = 0; t < T_; ++t) {
        std::vector<std::pair<int, double>> terms{{var_g(t), 1.0}};
        for (int i = 0; i < n_; ++i) terms.emplace_back(var_p(i, t), -1.0);
        lp_.add_row("substation[" + std::to_string(t) + "]", RowOp::Equal, 0.0, std::move(terms));
    }
    // home bus balance (total consumption expanded into partials)
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t) {
            std::vector<std::pair<int, double>> terms{{var_p(i, t), 1.0},
                                                      {var_heat(i, t), -1.0},
                                                      {var_charge(i, t), -1.0 / sc.battery[i].eta_ch},
                                                      {var_discharge(i, t), sc.battery[i].eta_dis}};
            for (int td = std::max(0, t - homes.flex_window); td <= t; ++td)
                if (t <= deadline(td)) terms.emplace_back(var_partial(i, td, t), -1.0);
            lp_.add_row("bus[" + std::to_string(i) + "][" + std::to_string(t) + "]", RowOp::Equal,
                        homes.fixed_demand[i][at(t)] - homes.pv_generation[i][at(t)],
                        std::move(terms));
        }
    // battery level recursion and day-boundary conditions
    for (int i = 0; i < n_; ++i) {
        for (int t = 0; t + 1 < T_; ++t)
            lp_.add_row("battery[" + std::to_string(i) + "][" + std::to_string(t) + "]",
                        RowOp::Equal, -homes.ev_trip_demand[i][at(t)],
                        {{var_energy(i, t + 1), 1.0},
                         {var_energy(i, t), -1.0},
                         {var_charge(i, t), -1.0},
                         {var_discharge(i, t), 1.0}});
        lp_.add_row("battery_start[" + std::to_string(i) + "]", RowOp::Equal,
                    sc.battery[i].initial, {{var_energy(i, 0), 1.0}});
        lp_.add_row("battery_end[" + std::to_string(i) + "]", RowOp::Equal,
                    sc.battery[i].initial + homes.ev_trip_demand[i][at(T_ - 1)],
                    {{var_energy(i, T_ - 1), 1.0},
                     {var_charge(i, T_ - 1), 1.0},
                     {var_discharge(i, T_ - 1), -1.0}});
    }
    // every flexible demand fully met inside its window
    for (int i = 0; i < n_; ++i)
        for (int td = 0; td < T_; ++td) {
            std::vector<std::pair<int, double>> terms;
            for (int tc = td; tc <= deadline(td); ++tc)
                terms.emplace_back(var_partial(i, td, tc), 1.0);
            lp_.add_row("demand[" + std::to_string(i) + "][" + std::to_string(td) + "]",
                        RowOp::Equal, homes.flexible_demand[i][at(td)], std::move(terms));
        }
    // export linearisation: e >= -p, e >= 0
    for (int i = 0; i < n_; ++i)
        for (int t = 0; t < T_; ++t)
            lp_.add_row("export[" + std::to_string(i) + "][" + std::to_string(t) + "]",
                        RowOp::GreaterEqual, 0.0, {{var_e(i, t), 1.0}, {var_p(i, t), 1.0}});
    // thermal recursion and comfort band
    for (int i = 0; i < n_; ++i) {
        const auto& k = sc.thermal[i].kappa;
        double tm0, ta0;
        initial_temperatures(sc, i, day, tm0, ta0);
        lp_.add_row("mass_start[" + std::to_string(i) + "]", RowOp::Equal, tm0,
                    {{var_temp_mass(i, 0), 1.0}});
        lp_.add_row("air_start[" + std::to_string(i) + "]", RowOp::Equal, ta0,
                    {{var_temp_air(i, 0), 1.0}});
        for (int t = 0; t < T_; ++t) {
            const double drive_m =
                k[0][0] + k[0][2] * homes.external_temp[at(t)] + k[0][3] * homes.solar_heat_flow[at(t)];
            const double drive_a =
                k[1][0] + k[1][2] * homes.external_temp[at(t)] + k[1][3] * homes.solar_heat_flow[at(t)];
            lp_.add_row("mass[" + std::to_string(i) + "][" + std::to_string(t + 1) + "]",
                        RowOp::Equal, drive_m,
                        {{var_temp_mass(i, t + 1), 1.0},
                         {var_temp_mass(i, t), -k[0][1]},
                         {var_heat(i, t), -k[0][4]}});
            lp_.add_row("air[" + std::to_string(i) + "][" + std::to_string(t + 1) + "]",
                        RowOp::Equal, drive_a,
                        {{var_temp_air(i, t + 1), 1.0},
                         {var_temp_mass(i, t), -k[1][1]},
                         {var_heat(i, t), -k[1][4]}});
            const int bidx = at(std::min(t + 1, T_ - 1));
            lp_.add_row("comfort_lo[" + std::to_string(i) + "][" + std::to_string(t + 1) + "]",
                        RowOp::GreaterEqual, homes.temp_low[i][bidx],
                        {{var_temp_air(i, t + 1), 1.0}});
            lp_.add_row("comfort_hi[" + std::to_string(i) + "][" + std::to_string(t + 1) + "]",
                        RowOp::LessEqual, homes.temp_high[i][bidx],
                        {{var_temp_air(i, t + 1), 1.0}});
        }
    }
}

LpSolution solve_day_lp(const DayLp& day_lp, const ScenarioData& sc) {
    LpSolution sol = solve_lp(day_lp.lp());
    if (sol.status != LpStatus::Optimal) return sol;

    const int T = day_lp.horizon();
    const int n = day_lp.n_homes();
    const int day = day_lp.day();
    // cancel residual simultaneous charge/discharge, then restore the
    // dependent variables and the objective
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < T; ++t) {
            double& bin = sol.x[day_lp.var_charge(i, t)];
            double& bout = sol.x[day_lp.var_discharge(i, t)];
            const double overlap = std::min(bin, bout);
            if (overlap > 0.0) {
                bin -= overlap;
                bout -= overlap;
            }
        }
    for (int t = 0; t < T; ++t) {
        double g = 0.0;
        for (int i = 0; i < n; ++i) {
            const int gt = day * T + t;
            const double p = day_lp.consumption(sol, i, t) + sol.x[day_lp.var_heat(i, t)] +
                             sol.x[day_lp.var_charge(i, t)] / sc.battery[i].eta_ch -
                             sc.battery[i].eta_dis * sol.x[day_lp.var_discharge(i, t)] -
                             sc.homes.pv_generation[i][gt];
            sol.x[day_lp.var_p(i, t)] = p;
            sol.x[day_lp.var_e(i, t)] = std::max(-p, 0.0);
            g += p;
        }
        sol.x[day_lp.var_g(t)] = g;
    }
    sol.objective = day_lp.lp().objective_constant;
    for (int j = 0; j < day_lp.lp().n_vars(); ++j)
        sol.objective += day_lp.lp().objective[j] * sol.x[j];
    const double viol = max_violation(day_lp.lp(), sol.x);
    if (viol > 1e-7)
        sol.message = "post-processed solution violates a row by " + format_double(viol);
    return sol;
}

JointAction default_action(int n_homes) {
    return {std::vector<double>(n_homes, 0.0), std::vector<double>(n_homes, 0.0),
            std::vector<double>(n_homes, 1.0)};
}

namespace {

double invert_interval(double value, double low, double high) {
    if (high - low <= 1e-12) return 0.0; // degenerate range, convention
    return std::clamp((value - low) / (high - low), 0.0, 1.0);
}

} // namespace

Demonstration extract_demonstrations(const DayLp& day_lp, const LpSolution& sol,
                                     const ScenarioData& sc, EnvOptions options) {
    if (sol.status != LpStatus::Optimal)
        throw std::invalid_argument("extract_demonstrations: solution is not optimal");
    Environment env(sc, day_lp.day(), options);
    EnvState state = env.reset();
    const int T = day_lp.horizon();
    const int n = day_lp.n_homes();

    Demonstration demo;
    demo.actions.reserve(T);
    for (int t = 0; t < T; ++t) {
        JointAction action = default_action(n);
        for (int i = 0; i < n; ++i) {
            const double lp_in = sol.x[day_lp.var_charge(i, t)];
            const double lp_out = sol.x[day_lp.var_discharge(i, t)];
            const BatteryRange br = env.battery_feasible_range(state, i);
            if (lp_out > 1e-12 && br.discharge_max > 1e-12)
                action.battery[i] = -std::clamp(lp_out / br.discharge_max, 0.0, 1.0);
            else
                action.battery[i] = invert_interval(lp_in, br.charge_forced, br.charge_max);

            const HeatingRange hr = env.heating_feasible_range(state, i);
            action.heating[i] = invert_interval(sol.x[day_lp.var_heat(i, t)], hr.low, hr.high);

            const ConsumptionRange cr = env.consumption_feasible_range(state, i);
            action.consumption[i] = invert_interval(day_lp.consumption(sol, i, t), cr.low, cr.high);
        }
        const StepOutcome out = env.step(state, action);
        for (int i = 0; i < n; ++i) {
            const double d_in = std::abs(out.decisions[i].charge - sol.x[day_lp.var_charge(i, t)]);
            const double d_out =
                std::abs(out.decisions[i].discharge - sol.x[day_lp.var_discharge(i, t)]);
            const double d_h = std::abs(out.decisions[i].heating - sol.x[day_lp.var_heat(i, t)]);
            const double d_c =
                std::abs(out.decisions[i].consumption - day_lp.consumption(sol, i, t));
            const double worst = std::max({d_in, d_out, d_h, d_c});
            if (worst > 1e-6)
                throw ReplayMismatch("home " + std::to_string(i) + " step " + std::to_string(t) +
                                     ": replayed decision deviates by " + format_double(worst) +
                                     " kWh");
        }
        demo.cost -= out.reward;
        demo.actions.push_back(std::move(action));
    }
    return demo;
}

double baseline_rollout(const ScenarioData& sc, int day, EnvOptions options) {
    Environment env(sc, day, options);
    EnvState state = env.reset();
    const int n = sc.n_homes;
    JointAction inflexible{std::vector<double>(n, 1.0), std::vector<double>(n, 0.0),
                           std::vector<double>(n, 1.0)};
    double cost = 0.0;
    for (int t = 0; t < sc.horizon; ++t) cost -= env.step(state, inflexible).reward;
    return cost;
}

double marginal_reward(const Environment& env, const EnvState& state, const JointAction& action,
                       int agent) {
    EnvState with = state;
    const double r_joint = env.step(with, action).reward;
    JointAction swapped = action;
    swapped.battery[agent] = 0.0;
    swapped.heating[agent] = 0.0;
    swapped.consumption[agent] = 1.0;
    EnvState without = state;
    const double r_default = env.step(without, swapped).reward;
    return r_joint - r_default;
}

} // namespace flexcoord
