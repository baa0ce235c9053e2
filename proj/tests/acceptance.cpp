// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Heavy criteria (learning, scaling) run real training; the whole
// suite is budgeted for a workstation-class machine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flexcoord/environment.hpp"
#include "flexcoord/harness.hpp"
#include "flexcoord/marl.hpp"
#include "flexcoord/neural.hpp"
#include "flexcoord/oracle.hpp"
#include "flexcoord/profiles.hpp"
#include "flexcoord/util.hpp"

#include "grad_oracles.hpp"

using namespace flexcoord;
using flexcoord::testing::max_relative_gradient_error;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double idx = p * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (idx - lo) * (v[hi] - v[lo]);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------- 1 --

Outcome criterion1_feasibility_fuzz() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    long steps_done = 0;
    int scenarios_used = 0;
    long overwarm_steps = 0;
    const long target_steps = 100000;
    const double tol = 1e-9;

    for (int variant = 0; steps_done < target_steps || scenarios_used < 50; ++variant) {
        ProfileTemplate tpl;
        const int n_homes = 1 + variant % 3;
        const int n_days = 1 + variant % 2;
        tpl.battery_initial_frac = (variant % 4 == 1) ? 0.45 : (variant % 4 == 2 ? 0.7 : 1.0);
        tpl.trip_kwh = (variant % 5 == 0) ? 0.0 : (variant % 5 == 3 ? 9.0 : 6.0);
        tpl.pv_peak = variant % 3 == 0 ? 2.0 : 0.8;
        tpl.flexible_share = variant % 2 == 0 ? 0.35 : 0.55;
        auto sc = generate_profiles(90000 + variant, n_homes, n_days, tpl);
        if (!validate(sc).empty()) return {false, "generated scenario failed validation"};
        ++scenarios_used;
        EnvOptions opts;
        opts.gate_discharge_by_availability = variant % 2 == 1;

        for (int day = 0; day < n_days; ++day) {
            Environment env(sc, day, opts);
            const int episodes = 14 / n_days + 1;
            for (int ep = 0; ep < episodes; ++ep) {
                EnvState state = env.reset();
                std::vector<double> flex_seen(n_homes, 0.0), flex_served(n_homes, 0.0);
                for (int t = 0; t < sc.horizon; ++t) {
                    JointAction a;
                    a.battery.resize(n_homes);
                    a.heating.resize(n_homes);
                    a.consumption.resize(n_homes);
                    for (int i = 0; i < n_homes; ++i) {
                        a.battery[i] = sym(rng);
                        a.heating[i] = unit(rng);
                        a.consumption[i] = unit(rng);
                    }
                    const StepOutcome out = env.step(state, a);
                    ++steps_done;
                    const int g = env.global_step(t);
                    for (int i = 0; i < n_homes; ++i) {
                        const auto& bat = sc.battery[i];
                        const auto& d = out.decisions[i];
                        const double mu = sc.homes.ev_availability[i][g];
                        if (d.charge > mu * bat.max_charge + tol)
                            return {false, "charge above the availability cap"};
                        const double gate = opts.gate_discharge_by_availability ? mu : 1.0;
                        if (d.discharge > gate * bat.max_discharge + tol)
                            return {false, "discharge above its cap"};
                        if (d.charge < -tol || d.discharge < -tol || d.heating < -tol ||
                            d.consumption < -tol || state.battery_energy[i] < -tol)
                            return {false, "negative flow or battery level"};
                        if (d.charge > 0.0 && d.discharge > 0.0)
                            return {false, "simultaneous charge and discharge"};
                        const double mu_next =
                            t + 1 < sc.horizon
                                ? sc.homes.ev_availability[i][env.global_step(t + 1)]
                                : 1.0;
                        if (state.battery_energy[i] < mu_next * bat.min_level - tol ||
                            state.battery_energy[i] > bat.capacity + tol)
                            return {false, "battery level outside its bounds"};
                        const int bidx = env.global_step(std::min(t + 1, sc.horizon - 1));
                        if (out.overwarm[i]) {
                            ++overwarm_steps;
                        } else if (state.temp_air[i] < sc.homes.temp_low[i][bidx] - tol ||
                                   state.temp_air[i] > sc.homes.temp_high[i][bidx] + tol) {
                            return {false, "air temperature left the comfort band"};
                        }
                        flex_seen[i] += sc.homes.flexible_demand[i][g];
                        flex_served[i] += d.consumption - sc.homes.fixed_demand[i][g];
                    }
                }
                for (int i = 0; i < n_homes; ++i) {
                    if (std::abs(state.battery_energy[i] - sc.battery[i].initial) > tol)
                        return {false, "end-of-day battery level not restored"};
                    if (std::abs(flex_seen[i] - flex_served[i]) > 1e-7)
                        return {false, "flexible demand not fully served"};
                    if (!state.flex_queue[i].empty())
                        return {false, "flexible queue not empty at the day end"};
                }
            }
        }
    }
    const double secs = elapsed_since(t0);
    if (secs >= 120.0) return {false, "runtime " + fmt(secs) + " s exceeds the 2-minute budget"};
    return {true, std::to_string(steps_done) + " random steps over " +
                      std::to_string(scenarios_used) + " scenarios, " +
                      std::to_string(overwarm_steps) + " flagged over-warm steps, " + fmt(secs) +
                      " s"};
}

// ---------------------------------------------------------------------- 2 --

namespace brute {

ScenarioData tiny_base(int n_homes, int T) {
    ScenarioData sc;
    sc.n_homes = n_homes;
    sc.horizon = T;
    sc.n_days = 1;
    sc.grid.wholesale_price.assign(T, 0.1);
    sc.grid.carbon_intensity.assign(T, 0.0);
    sc.grid.grid_cost_coeff.assign(T, 0.1);
    auto zeros = [&] { return std::vector<std::vector<double>>(n_homes, std::vector<double>(T, 0.0)); };
    auto ones = [&] { return std::vector<std::vector<double>>(n_homes, std::vector<double>(T, 1.0)); };
    sc.homes.ev_availability = ones();
    sc.homes.ev_trip_demand = zeros();
    sc.homes.fixed_demand = zeros();
    sc.homes.flexible_demand = zeros();
    sc.homes.pv_generation = zeros();
    sc.homes.external_temp.assign(T, 10.0);
    sc.homes.solar_heat_flow.assign(T, 0.0);
    sc.homes.temp_low = zeros();
    sc.homes.temp_high = std::vector<std::vector<double>>(n_homes, std::vector<double>(T, 100.0));
    BatteryParams bat;
    bat.capacity = 5.0;
    bat.min_level = 5.0;
    bat.initial = 5.0;
    bat.max_charge = 4.0;
    bat.max_discharge = 4.0;
    bat.eta_ch = 1.0;
    bat.eta_dis = 1.0;
    sc.battery.assign(n_homes, bat);
    ThermalParams tp;
    tp.kappa[0] = {0.0, 0.5, 0.5, 0.0, 0.0};
    tp.kappa[1] = {0.0, 0.0, 1.0, 0.0, 1.0};
    tp.heat_cap = 100.0;
    sc.thermal.assign(n_homes, tp);
    return sc;
}

// minimum cost of serving one home's flexible demands on a 0.1 kWh grid
double enumerate_flexible(const ScenarioData& sc, int home) {
    const int T = sc.horizon;
    const int w = sc.homes.flex_window;
    double best_total = 0.0;
    // demands are independent in cost: optimise each separately
    for (int td = 0; td < T; ++td) {
        const double d = sc.homes.flexible_demand[home][td];
        if (d <= 0.0) continue;
        const int cells = sc.flex_deadline(td) - td + 1;
        const int units = static_cast<int>(std::round(d / 0.1));
        // cheapest step in the window takes everything (costs are linear)
        double best = 1e18;
        for (int k = 0; k < cells; ++k) best = std::min(best, sc.grid.grid_cost_coeff[td + k]);
        best_total += best * units * 0.1;
        (void)w;
    }
    for (int t = 0; t < T; ++t)
        best_total += sc.grid.grid_cost_coeff[t] * sc.homes.fixed_demand[home][t];
    return best_total;
}

// exhaustive battery flows on a 0.5 kWh grid (eta = 1, no export charge)
double enumerate_battery(const ScenarioData& sc, int home) {
    const int T = sc.horizon;
    const auto& bat = sc.battery[home];
    const int lim = static_cast<int>(std::round(bat.max_charge / 0.5));
    std::vector<int> flow(T, -lim);
    double best = 1e18;
    while (true) {
        double e = bat.initial, cost = 0.0;
        bool ok = true;
        for (int t = 0; t < T && ok; ++t) {
            const double f = 0.5 * flow[t];
            const double mu = sc.homes.ev_availability[home][t];
            if (f > mu * bat.max_charge + 1e-9) ok = false;
            e += f - sc.homes.ev_trip_demand[home][t];
            const double floor = t + 1 < T ? sc.homes.ev_availability[home][t + 1] * bat.min_level
                                           : bat.initial;
            const double cap = t + 1 < T ? bat.capacity : bat.initial;
            if (e < floor - 1e-9 || e > cap + 1e-9) ok = false;
            if (ok) {
                const double p = sc.homes.fixed_demand[home][t] + std::max(f, 0.0) -
                                 std::max(-f, 0.0);
                cost += sc.grid.grid_cost_coeff[t] * p +
                        sc.grid.storage_cost * std::abs(f);
            }
        }
        if (ok) best = std::min(best, cost);
        int k = 0;
        while (k < T && flow[k] == lim) {
            flow[k] = -lim;
            ++k;
        }
        if (k == T) break;
        ++flow[k];
    }
    return best;
}

} // namespace brute

Outcome criterion2_oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<int> grid_price(1, 15);
    std::uniform_int_distribution<int> grid_demand(5, 25);
    int checked = 0;

    for (int inst = 0; inst < 12; ++inst) { // flexible-load instances
        const int n = 1 + inst % 2;
        const int T = 3 + inst % 2;
        auto sc = brute::tiny_base(n, T);
        sc.homes.flex_window = 1 + inst % 2;
        for (int t = 0; t < T; ++t) {
            const double price = 0.1 * grid_price(rng);
            sc.grid.wholesale_price[t] = price;
            sc.grid.grid_cost_coeff[t] = price;
        }
        for (int i = 0; i < n; ++i) {
            sc.homes.flexible_demand[i][0] = 0.1 * grid_demand(rng);
            if (T > 3) sc.homes.flexible_demand[i][1] = 0.1 * grid_demand(rng);
            sc.homes.fixed_demand[i][T - 1] = 0.1 * grid_demand(rng);
        }
        auto day_lp = build_day_lp(sc, 0);
        auto sol = solve_day_lp(day_lp, sc);
        if (sol.status != LpStatus::Optimal) return {false, "flexible instance not optimal"};
        double want = 0.0;
        for (int i = 0; i < n; ++i) want += brute::enumerate_flexible(sc, i);
        if (std::abs(sol.objective - want) > 1e-6 * std::max(1.0, std::abs(want)))
            return {false, "flexible instance " + std::to_string(inst) + ": simplex " +
                               fmt(sol.objective) + " vs enumeration " + fmt(want)};
        ++checked;
    }

    for (int inst = 0; inst < 10; ++inst) { // battery instances
        const int n = 1 + inst % 2;
        auto sc = brute::tiny_base(n, 4);
        for (auto& b : sc.battery) {
            b.capacity = 8.0;
            b.min_level = 0.0;
            b.initial = inst % 2 == 0 ? 4.0 : 6.0;
        }
        sc.grid.storage_cost = inst % 3 == 0 ? 0.05 : 0.0;
        for (int t = 0; t < 4; ++t) {
            const double price = 0.1 * grid_price(rng);
            sc.grid.wholesale_price[t] = price;
            sc.grid.grid_cost_coeff[t] = price;
        }
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < 4; ++t) sc.homes.fixed_demand[i][t] = 0.5 * (1 + (t + i) % 3);
        auto day_lp = build_day_lp(sc, 0);
        auto sol = solve_day_lp(day_lp, sc);
        if (sol.status != LpStatus::Optimal) return {false, "battery instance not optimal"};
        double want = 0.0;
        for (int i = 0; i < n; ++i) want += brute::enumerate_battery(sc, i);
        if (std::abs(sol.objective - want) > 1e-6 * std::max(1.0, std::abs(want)))
            return {false, "battery instance " + std::to_string(inst) + ": simplex " +
                               fmt(sol.objective) + " vs enumeration " + fmt(want)};
        ++checked;
    }

    const double secs = elapsed_since(t0);
    if (secs >= 60.0) return {false, "runtime " + fmt(secs) + " s exceeds the 1-minute budget"};
    return {true, std::to_string(checked) + " instances matched within 1e-6 relative, " +
                      fmt(secs) + " s"};
}

// ---------------------------------------------------------------------- 3 --

Outcome criterion3_duality() {
    double worst = 0.0;
    for (int k = 0; k < 21; ++k) {
        ProfileTemplate tpl;
        if (k % 3 == 1) tpl.battery_initial_frac = 0.5; // exercise forced-discharge paths
        if (k % 3 == 2) tpl.trip_kwh = 9.0;
        const int n = 1 + k % 3;
        auto sc = generate_profiles(3000 + k, n, 1, tpl);
        auto day_lp = build_day_lp(sc, 0);
        auto sol = solve_day_lp(day_lp, sc);
        if (sol.status != LpStatus::Optimal)
            return {false, "instance " + std::to_string(k) + " did not solve"};
        Demonstration demo;
        try {
            demo = extract_demonstrations(day_lp, sol, sc);
        } catch (const ReplayMismatch& e) {
            return {false, std::string("replay mismatch: ") + e.what()};
        }
        Environment env(sc, 0);
        EnvState state = env.reset();
        double reward = 0.0;
        for (int t = 0; t < sc.horizon; ++t) reward += env.step(state, demo.actions[t]).reward;
        worst = std::max(worst, std::abs(reward + sol.objective));
    }
    if (worst > 1e-6) return {false, "worst |replay reward + objective| = " + fmt(worst)};
    return {true, "21 day scenarios, worst deviation " + fmt(worst)};
}

// ---------------------------------------------------------------------- 4 --

Outcome criterion4_gradients() {
    double worst = 0.0; // across passing checks; failed draws retry and do not pollute it
    auto note = [&](double err) {
        if (err < 1e-4) worst = std::max(worst, err);
        return err < 1e-4;
    };

    // layers: conv + dense + mixed heads under a squared-error loss
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        bool ok = false;
        for (std::uint64_t attempt : {seed, seed + 104729}) {
            NetworkSpec spec{{conv1d(2, 3, 6, Activation::Tanh), dense(18, 10, Activation::Relu),
                              dense_heads(10, {Activation::Tanh, Activation::Sigmoid,
                                               Activation::Linear})}};
            Network net(spec, attempt);
            std::mt19937_64 rng(attempt * 17 + 3);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            std::vector<double> input(spec.input_size()), target(spec.output_size());
            for (double& v : input) v = u(rng);
            for (double& v : target) v = u(rng);
            auto loss = [&] {
                auto y = net.forward(input);
                double e = 0.0;
                for (std::size_t j = 0; j < y.size(); ++j)
                    e += (y[j] - target[j]) * (y[j] - target[j]);
                return e;
            };
            Network::Cache cache;
            auto y = net.forward(input, &cache);
            std::vector<double> dy(y.size());
            for (std::size_t j = 0; j < y.size(); ++j) dy[j] = 2.0 * (y[j] - target[j]);
            std::vector<double> grad(net.params().size(), 0.0);
            net.backward(cache, dy, grad);
            if (note(max_relative_gradient_error(net.params(), loss, grad))) {
                ok = true;
                break;
            }
        }
        if (!ok) return {false, "layer gradients seed " + std::to_string(seed) + " err " + fmt(worst)};
    }

    // mixer
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        MixingNetwork mixer(3, 5, 6, 500 + seed);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::vector<double> q(3), s(5);
        for (double& v : q) v = u(rng);
        for (double& v : s) v = 0.5 * u(rng);
        MixingNetwork::Cache cache;
        mixer.forward(q, s, &cache);
        std::vector<double> grad(mixer.params().size(), 0.0);
        mixer.backward(cache, 1.0, grad);
        auto loss = [&] { return mixer.forward(q, s); };
        if (!note(max_relative_gradient_error(mixer.params(), loss, grad, 1e-7)))
            return {false, "mixer gradients seed " + std::to_string(seed)};
    }

    // critic loss (plain and hysteretic with sign-stable samples), actor
    // path, supervised term, through small policies. Rectifier kinks within
    // the finite-difference step are possible at unlucky seeds, so each seed
    // gets one retry with an independent draw; a systematic gradient bug
    // fails both.
    for (std::uint64_t base_seed = 1; base_seed <= 20; ++base_seed) {
      std::string first_failure;
      bool seed_ok = false;
      for (const std::uint64_t seed : {base_seed, base_seed + 104729}) {
        FacmacConfig fc;
        fc.conv_actor = false;
        fc.actor_hidden = 6;
        fc.critic_hidden = 6;
        fc.mixer_hidden = 4;
        fc.hysteretic = base_seed % 2 == 0;
        fc.hysteresis_ratio = 0.5;
        FacmacPolicy policy(fc, 2, 4, 6, 900 + seed);
        std::mt19937_64 rng(seed * 13);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<Transition> storage;
        for (int k = 0; k < 4; ++k) {
            Transition tr;
            tr.obs.resize(2);
            tr.next_obs.resize(2);
            tr.actions.resize(2);
            for (int i = 0; i < 2; ++i) {
                tr.obs[i].resize(4);
                tr.next_obs[i].resize(4);
                for (double& v : tr.obs[i]) v = u(rng);
                for (double& v : tr.next_obs[i]) v = u(rng);
                tr.actions[i] = {u(rng), std::abs(u(rng)), std::abs(u(rng))};
            }
            tr.state.resize(6);
            tr.next_state.resize(6);
            for (double& v : tr.state) v = u(rng);
            for (double& v : tr.next_state) v = u(rng);
            tr.reward = 2.0 * u(rng); // keeps TD errors away from zero
            tr.done = k % 2 == 0;
            tr.demonstrator = true;
            storage.push_back(std::move(tr));
        }
        std::vector<const Transition*> batch;
        for (auto& tr : storage) batch.push_back(&tr);

        // effective critic loss whose gradient critic_gradients computes
        auto critic_loss = [&] {
            double total = 0.0;
            std::vector<double> q(2), qn(2);
            for (const Transition* tr : batch) {
                double y = tr->reward;
                if (!tr->done) {
                    for (int i = 0; i < 2; ++i) {
                        const auto an = policy.target_actor(i).forward(tr->next_obs[i]);
                        auto in = tr->next_obs[i];
                        in.insert(in.end(), an.begin(), an.end());
                        qn[i] = policy.target_critics[i].forward(in)[0];
                    }
                    y += policy.cfg.gamma * policy.target_mixer.forward(qn, tr->next_state);
                }
                for (int i = 0; i < 2; ++i) {
                    auto in = tr->obs[i];
                    in.insert(in.end(), tr->actions[i].begin(), tr->actions[i].end());
                    q[i] = policy.critics[i].forward(in)[0];
                }
                const double delta = y - policy.mixer.forward(q, tr->state);
                const double w =
                    policy.cfg.hysteretic && delta < 0.0 ? policy.cfg.hysteresis_ratio : 1.0;
                total += w * delta * delta / batch.size();
            }
            return total;
        };
        std::vector<std::vector<double>> cg(2);
        for (int i = 0; i < 2; ++i) cg[i].assign(policy.critics[i].params().size(), 0.0);
        std::vector<double> mg(policy.mixer.params().size(), 0.0);
        critic_gradients(policy, batch, cg, mg);
        if (!note(max_relative_gradient_error(policy.critics[0].params(), critic_loss, cg[0], 1e-7))) {
            if (first_failure.empty()) first_failure = "critic path";
            continue;
        }
        if (!note(max_relative_gradient_error(policy.mixer.params(), critic_loss, mg, 1e-7))) {
            if (first_failure.empty()) first_failure = "mixer path";
            continue;
        }

        // actor path including the supervised term
        const double c_weight = base_seed % 2 == 0 ? 1.3 : 0.0;
        auto actor_loss = [&] {
            double total = 0.0;
            std::vector<double> q(2);
            for (const Transition* tr : batch) {
                double pen = 0.0;
                for (int i = 0; i < 2; ++i) {
                    const auto mu = policy.actor(i).forward(tr->obs[i]);
                    auto in = tr->obs[i];
                    in.insert(in.end(), mu.begin(), mu.end());
                    q[i] = policy.critics[i].forward(in)[0];
                    if (tr->demonstrator && c_weight > 0.0)
                        for (int axis = 0; axis < 3; ++axis)
                            pen += c_weight * (mu[axis] - tr->actions[i][axis]) *
                                   (mu[axis] - tr->actions[i][axis]);
                }
                total += (-policy.mixer.forward(q, tr->state) + pen) / batch.size();
            }
            return total;
        };
        std::vector<std::vector<double>> ag(1);
        ag[0].assign(policy.actors[0].params().size(), 0.0);
        actor_gradients(policy, batch, c_weight, ag);
        if (!note(max_relative_gradient_error(policy.actors[0].params(), actor_loss, ag[0], 1e-7))) {
            if (first_failure.empty()) first_failure = "actor path";
            continue;
        }
        seed_ok = true;
        break;
      }
      if (!seed_ok)
          return {false, first_failure + " gradients failed both draws of seed " +
                             std::to_string(base_seed)};
    }
    return {true, "layers, mixer, critic loss, actor path, supervised term; worst rel err " +
                      fmt(worst)};
}

// ---------------------------------------------------------------------- 5 --

Outcome criterion5_monotonicity() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> eps(1e-4, 0.5);
    int violations = 0;
    for (int probe = 0; probe < 1000; ++probe) {
        const int n = 1 + probe % 5;
        MixingNetwork mixer(n, 7, 8, 4000 + probe % 37);
        std::vector<double> q(n), s(7);
        for (double& v : q) v = u(rng);
        for (double& v : s) v = 0.3 * u(rng);
        const int agent = probe % n;
        const double base = mixer.forward(q, s);
        q[agent] += eps(rng);
        if (mixer.forward(q, s) < base - 1e-12) ++violations;
    }
    if (violations > 0)
        return {false, std::to_string(violations) + " of 1000 probes decreased Q_tot"};
    return {true, "1000 probes, zero violations"};
}

// ---------------------------------------------------------------------- 6 --

Outcome criterion6_learning_sanity() {
    const auto t0 = std::chrono::steady_clock::now();
    auto sc = sanity_scenario(42);
    auto day_lp = build_day_lp(sc, 0);
    auto sol = solve_day_lp(day_lp, sc);
    if (sol.status != LpStatus::Optimal) return {false, "reference optimisation failed"};
    const double baseline = baseline_rollout(sc, 0);
    const double gap = baseline - sol.objective;
    if (gap <= 0.0) return {false, "sanity scenario has no baseline-to-optimum gap"};

    std::vector<double> closures;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg;
        cfg.method = Method::Facmac;
        cfg.episodes = 600; // well under the 2000-episode allowance
        cfg.eval_every = 600;
        cfg.seed = seed;
        const TrainResult r = train(sc, cfg);
        closures.push_back((r.baseline_cost_per_day - r.curve.back().eval_cost_per_day) / gap);
    }
    const double median = percentile(closures, 0.5);
    const double secs = elapsed_since(t0);
    if (secs >= 600.0) return {false, "runtime " + fmt(secs) + " s exceeds the 10-minute budget"};
    if (median < 0.5)
        return {false, "median gap closure " + fmt(100 * median) + "% below 50% (" + fmt(secs) +
                           " s)"};
    return {true, "median gap closure " + fmt(100 * median) + "% over 5 seeds, " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------------- 7 --

Outcome criterion7_cooperation() {
    const auto t0 = std::chrono::steady_clock::now();
    auto sc = cooperation_scenario(7, 3, 1);

    auto run_method = [&](Method method, int episodes) {
        std::vector<double> savings;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            TrainConfig cfg;
            cfg.method = method;
            cfg.episodes = episodes;
            cfg.eval_every = episodes;
            cfg.seed = seed;
            const TrainResult r = train(sc, cfg);
            savings.push_back(r.curve.back().savings_per_home_month);
        }
        return savings;
    };
    const auto facmac = run_method(Method::Facmac, 1000);
    const auto iql = run_method(Method::IqlOptMarginal, 400);

    auto positive = [](const std::vector<double>& v) {
        return static_cast<int>(std::count_if(v.begin(), v.end(), [](double s) { return s > 0.0; }));
    };
    const int facmac_pos = positive(facmac);
    const int iql_pos = positive(iql);
    const double facmac_med = percentile(facmac, 0.5);
    const double iql_med = percentile(iql, 0.5);
    const double rel_gap = std::abs(facmac_med - iql_med) / std::max(std::abs(iql_med), 1e-9);
    const double secs = elapsed_since(t0);

    std::string detail = "facmac " + std::to_string(facmac_pos) + "/5 positive (median " +
                         fmt(facmac_med) + "), iql+opt+marginal " + std::to_string(iql_pos) +
                         "/5 positive (median " + fmt(iql_med) + "), method gap " +
                         fmt(100 * rel_gap) + "%, " + fmt(secs) + " s";
    if (facmac_pos < 4 || iql_pos < 4 || rel_gap > 0.30) return {false, detail};
    return {true, detail};
}

// ---------------------------------------------------------------------- 8 --

Outcome criterion8_scaling(std::string* report_out) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig base;
    base.n_eval_days = 1;
    base.eval_every = 1 << 20;
    const ScalingReport report = scaling_benchmark({Method::Facmac, Method::IqlOptMarginal},
                                                   {3, 5, 10}, 20, {1, 2, 3}, base);

    std::string lines;
    for (const auto& p : report.points)
        lines += "    " + p.method + " n=" + std::to_string(p.n_homes) + " seed=" +
                 std::to_string(p.seed) + ": " + fmt(p.train_seconds) + " s\n";
    int facmac_order = 0, iql_order = 0;
    for (const auto& [name, fit] : report.fits) {
        lines += "    " + name + ": linear " + fmt(fit.lin_a) + " + " + fmt(fit.lin_b) +
                 " n (rss " + fmt(fit.rss_linear) + "); quadratic " + fmt(fit.quad_a) + " + " +
                 fmt(fit.quad_b) + " n + " + fmt(fit.quad_c) + " n^2 (rss " +
                 fmt(fit.rss_quadratic) + ") -> order " + std::to_string(fit.order) + "\n";
        if (name == "facmac") facmac_order = fit.order;
        if (name == "iql+opt+marginal") iql_order = fit.order;
    }
    if (report_out) *report_out = lines;
    const double secs = elapsed_since(t0);
    if (secs >= 1800.0) return {false, "runtime " + fmt(secs) + " s exceeds the 30-minute budget"};
    if (facmac_order >= iql_order)
        return {false, "facmac order " + std::to_string(facmac_order) + " not below iql order " +
                           std::to_string(iql_order) + " (" + fmt(secs) + " s)"};
    return {true, "facmac order " + std::to_string(facmac_order) + " < iql+opt+marginal order " +
                      std::to_string(iql_order) + ", " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------------- 9 --

Outcome criterion9_ablation() {
    // bit-exact equivalence of the hysteresis toggle at beta = alpha
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Transition> storage;
    for (int k = 0; k < 6; ++k) {
        Transition tr;
        tr.obs.assign(2, std::vector<double>(4));
        tr.next_obs.assign(2, std::vector<double>(4));
        tr.actions.resize(2);
        for (int i = 0; i < 2; ++i) {
            for (double& v : tr.obs[i]) v = u(rng);
            for (double& v : tr.next_obs[i]) v = u(rng);
            tr.actions[i] = {u(rng), std::abs(u(rng)), std::abs(u(rng))};
        }
        tr.state.assign(6, 0.1 * k);
        tr.next_state.assign(6, 0.2 * k);
        tr.reward = u(rng);
        storage.push_back(std::move(tr));
    }
    std::vector<const Transition*> batch;
    for (auto& tr : storage) batch.push_back(&tr);

    FacmacConfig fc;
    fc.conv_actor = false;
    fc.actor_hidden = 6;
    fc.critic_hidden = 6;
    fc.mixer_hidden = 4;
    fc.hysteretic = false;
    FacmacPolicy plain(fc, 2, 4, 6, 1234);
    fc.hysteretic = true;
    fc.hysteresis_ratio = 1.0;
    FacmacPolicy unity(fc, 2, 4, 6, 1234);
    critic_update(plain, batch);
    critic_update(unity, batch);
    for (int i = 0; i < 2; ++i)
        if (plain.critics[i].params() != unity.critics[i].params())
            return {false, "beta = alpha does not reproduce the plain update bit-exactly"};
    if (plain.mixer.params() != unity.mixer.params())
        return {false, "beta = alpha mixer update differs"};

    // toggles independently exercised on short cooperative trainings
    auto sc = cooperation_scenario(7, 2, 1);
    auto p25 = [&](bool hyst, bool conv) {
        std::vector<double> savings;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            TrainConfig cfg;
            cfg.method = Method::Facmac;
            cfg.episodes = 150;
            cfg.eval_every = 150;
            cfg.seed = seed;
            cfg.facmac.hysteretic = hyst;
            cfg.facmac.conv_actor = conv;
            savings.push_back(train(sc, cfg).curve.back().savings_per_home_month);
        }
        return percentile(savings, 0.25);
    };
    const double full = p25(true, true);
    const double no_hyst = p25(false, true);
    const double no_conv = p25(true, false);

    // architecture check: dropping the convolution changes the actor
    FacmacConfig with_conv;
    FacmacConfig without_conv;
    without_conv.conv_actor = false;
    FacmacPolicy a(with_conv, 1, kObservationWindow, kObservationWindow + 4, 1);
    FacmacPolicy b(without_conv, 1, kObservationWindow, kObservationWindow + 4, 1);
    if (a.actors[0].params().size() == b.actors[0].params().size())
        return {false, "convolution toggle does not change the actor architecture"};

    return {true, "toggles run; 25th-percentile savings: full " + fmt(full) + ", no-hysteresis " +
                      fmt(no_hyst) + " (delta " + fmt(full - no_hyst) + "), no-conv " +
                      fmt(no_conv) + " (delta " + fmt(full - no_conv) +
                      "); beta = alpha is bit-exact"};
}

// --------------------------------------------------------------------- 10 --

Outcome criterion10_determinism() {
    namespace fs = std::filesystem;
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    const fs::path root = fs::temp_directory_path() / "flexcoord_acceptance_det";
    fs::remove_all(root);

    for (const char* method : {"iql+opt+marginal", "facmac"}) {
        ExperimentConfig cfg;
        cfg.method = *method_from_string(method);
        cfg.preset = "cooperation";
        cfg.n_homes = 2;
        cfg.episodes = method_is_tabular(cfg.method) ? 40 : 5;
        cfg.eval_every = 10;
        cfg.facmac.updates_per_episode = 4;
        cfg.seed = 21;
        cfg.output_dir = (root / (std::string(method) + "_a")).string();
        run_experiment(cfg);
        cfg.output_dir = (root / (std::string(method) + "_b")).string();
        run_experiment(cfg);

        const fs::path a = root / (std::string(method) + "_a");
        const fs::path b = root / (std::string(method) + "_b");
        if (slurp(a / "results.json") != slurp(b / "results.json"))
            return {false, std::string(method) + ": results.json differs between identical runs"};
        for (const char* extra : {"qtables.txt", "networks.txt", "mixer.txt"}) {
            if (fs::exists(a / extra) &&
                slurp(a / extra) != slurp(b / extra))
                return {false, std::string(method) + ": " + extra + " differs between runs"};
        }
    }
    fs::remove_all(root);
    return {true, "repeated runs byte-identical for a tabular and an actor-critic method"};
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int a = 1; a < argc; ++a) {
        if (std::strncmp(argv[a], "--only", 6) == 0 && a + 1 < argc) {
            std::stringstream ss(argv[++a]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.push_back(std::stoi(tok));
        }
    }
    auto wanted = [&](int id) {
        return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
    };

    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    std::string scaling_lines;
    const std::vector<Entry> criteria{
        {1, "feasibility fuzzing", criterion1_feasibility_fuzz},
        {2, "oracle equivalence", criterion2_oracle_equivalence},
        {3, "reward/optimum duality", criterion3_duality},
        {4, "gradient suite", criterion4_gradients},
        {5, "mixer monotonicity", criterion5_monotonicity},
        {6, "learning sanity (single home)", criterion6_learning_sanity},
        {7, "learning cooperation (three homes)", criterion7_cooperation},
        {8, "scaling direction", [&] { return criterion8_scaling(&scaling_lines); }},
        {9, "hysteresis/convolution ablation", criterion9_ablation},
        {10, "experiment determinism", criterion10_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted(c.id)) continue;
        Outcome result;
        try {
            result = c.run();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s — %s\n", result.pass ? "PASS" : "FAIL", c.id, c.name,
                    result.detail.c_str());
        if (c.id == 8 && !scaling_lines.empty()) std::fputs(scaling_lines.c_str(), stdout);
        std::fflush(stdout);
        if (!result.pass) ++failures;
    }
    return failures;
}
