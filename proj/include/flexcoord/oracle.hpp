#pragma once

#include <stdexcept>
#include <vector>

#include "flexcoord/environment.hpp"
#include "flexcoord/lp.hpp"
#include "flexcoord/profiles.hpp"

namespace flexcoord {

struct ReplayMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Day-ahead minimisation of grid + distribution + storage costs subject to
// the full physical constraint set, with charge/discharge exclusivity
// relaxed (price spreads make simultaneous flows suboptimal; residuals are
// cancelled in post-processing). Keeps the variable layout for readback.
class DayLp {
public:
    DayLp(const ScenarioData& scenario, int day, EnvOptions options = {});

    const LinearProgram& lp() const { return lp_; }
    int day() const { return day_; }
    int horizon() const { return T_; }
    int n_homes() const { return n_; }

    int var_g(int t) const { return t; }
    int var_p(int i, int t) const { return T_ + i * T_ + t; }
    int var_e(int i, int t) const { return T_ + n_ * T_ + i * T_ + t; }
    int var_charge(int i, int t) const { return T_ + 2 * n_ * T_ + i * T_ + t; }
    int var_discharge(int i, int t) const { return T_ + 3 * n_ * T_ + i * T_ + t; }
    int var_energy(int i, int t) const { return T_ + 4 * n_ * T_ + i * T_ + t; }
    int var_heat(int i, int t) const { return T_ + 5 * n_ * T_ + i * T_ + t; }
    int var_temp_mass(int i, int t) const { return T_ + 6 * n_ * T_ + i * (T_ + 1) + t; }
    int var_temp_air(int i, int t) const {
        return T_ + 6 * n_ * T_ + n_ * (T_ + 1) + i * (T_ + 1) + t;
    }
    // partial consumption at t_consume of the flexible demand arriving at t_demand
    int var_partial(int i, int t_demand, int t_consume) const {
        return chat_base_ + i * window_total_ + window_prefix_[t_demand] + (t_consume - t_demand);
    }
    int deadline(int t_demand) const; // within-day clamp of t_demand + flex_window

    double consumption(const LpSolution& sol, int i, int t) const;

private:
    const ScenarioData* scenario_;
    int day_ = 0, T_ = 0, n_ = 0;
    int chat_base_ = 0, window_total_ = 0;
    std::vector<int> window_prefix_;
    LinearProgram lp_;
};

// Documented closed form asserted by the shape tests.
long day_lp_variable_count(int n_homes, int horizon, int n_flex);

inline DayLp build_day_lp(const ScenarioData& scenario, int day, EnvOptions options = {}) {
    return DayLp(scenario, day, options);
}

// solve_lp plus exclusivity cancellation and consistency restore of the
// dependent variables (p, g, e) and the objective.
LpSolution solve_day_lp(const DayLp& day_lp, const ScenarioData& scenario);

struct Demonstration {
    std::vector<JointAction> actions; // one per step
    double cost = 0.0;                // realized cost of replaying the actions
};

// Inverts the three translation maps at every replayed state. Degenerate
// ranges map to action 0. Throws ReplayMismatch when the replay fails to
// reproduce the optimiser's decisions within 1e-6 kWh.
Demonstration extract_demonstrations(const DayLp& day_lp, const LpSolution& sol,
                                     const ScenarioData& scenario, EnvOptions options = {});

// (a_bat, a_heat, a_cons) = (0, 0, 1): no battery action beyond what is
// forced, minimal heating, immediate consumption.
JointAction default_action(int n_homes);

// Inflexible reference policy: charge whenever possible, never discharge,
// heat minimally, consume every load at its demand step. Returns the day cost.
double baseline_rollout(const ScenarioData& scenario, int day, EnvOptions options = {});

// r(joint) - r(joint with agent's triple replaced by the default action),
// both evaluated by independent single-step simulations from copies of state.
double marginal_reward(const Environment& env, const EnvState& state, const JointAction& action,
                       int agent);

} // namespace flexcoord
