#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace flexcoord {

// Grid-side price and carbon signals shared by all homes.
// grid_cost_coeff[t] = wholesale_price[t] + carbon_intensity[t] * social_cost_carbon.
struct GridSignals {
    std::vector<double> wholesale_price;  // currency/kWh
    std::vector<double> carbon_intensity; // tCO2/kWh
    double social_cost_carbon = 0.0;      // currency/tCO2
    std::vector<double> grid_cost_coeff;  // currency/kWh
    double export_charge = 0.0;           // C_d, currency/kWh exported
    double storage_cost = 0.0;            // C_s, currency/kWh battery throughput
    double grid_loss_term = 0.0;          // eps_g, kWh added to every substation import
};

// Per-home exogenous series. Outer index: home, inner: global step (horizon * n_days).
// External temperature and solar heat flow are shared across homes.
struct HomeProfiles {
    std::vector<std::vector<double>> ev_availability; // mu, 1 when EV is at home
    std::vector<std::vector<double>> ev_trip_demand;  // kWh consumed driving during the step
    std::vector<std::vector<double>> fixed_demand;    // kWh, must be met at its own step
    std::vector<std::vector<double>> flexible_demand; // kWh, may be met within flex_window steps
    std::vector<std::vector<double>> pv_generation;   // kWh
    std::vector<double> external_temp;                // degC
    std::vector<double> solar_heat_flow;              // kW
    std::vector<std::vector<double>> temp_low;        // degC comfort floor
    std::vector<std::vector<double>> temp_high;       // degC comfort ceiling
    int flex_window = 0;                              // n_flex, steps a flexible load may wait
};

struct BatteryParams {
    double capacity = 0.0;      // kWh
    double min_level = 0.0;     // kWh floor while the EV is at home
    double initial = 0.0;       // kWh at the start (and end) of every day
    double max_charge = 0.0;    // kWh/step
    double max_discharge = 0.0; // kWh/step
    double eta_ch = 1.0;
    double eta_dis = 1.0;
};

// Linear recursive building model:
//   [T_m, T_air]^{t+1} = kappa * [1, T_m^t, T_e^t, phi^t, h^t]^T
struct ThermalParams {
    std::array<std::array<double, 5>, 2> kappa{};
    double heat_cap = std::numeric_limits<double>::infinity(); // kWh/step
};

struct ScenarioData {
    GridSignals grid;
    HomeProfiles homes;
    std::vector<BatteryParams> battery; // one per home
    std::vector<ThermalParams> thermal; // one per home
    int n_homes = 0;
    int horizon = 24; // T, steps per day
    int n_days = 1;
    std::uint64_t seed = 0;

    int n_steps() const { return horizon * n_days; }
    // Deadline step (within-day) for flexible demand arriving at within-day step t.
    int flex_deadline(int t) const {
        int d = t + homes.flex_window;
        return d < horizon - 1 ? d : horizon - 1;
    }
};

// One broken invariant / parse failure. home or step is -1 when not applicable.
struct Violation {
    std::string field;
    int home = -1;
    int step = -1;
    std::string message;
    std::string to_string() const;
};

// C_g[t] = price[t] + intensity[t] * scc.
// Throws std::invalid_argument on length mismatch, negative scc, or non-finite input.
std::vector<double> grid_cost_coefficient(const std::vector<double>& price,
                                          const std::vector<double>& intensity,
                                          double social_cost_carbon);

// Shape knobs for the synthetic generator. Defaults give a UK-winter-flavoured
// day: time-of-use price spread, morning/evening demand peaks, a midday PV
// bell, overnight EV availability with a daytime commute, and cold exteriors.
struct ProfileTemplate {
    // time-of-use blocks, currency/kWh
    double price_night = 0.08; // hours [0, 7)
    double price_day = 0.16;   // hours [7, 17) and [21, 24)
    double price_peak = 0.30;  // hours [17, 21)
    double price_noise = 0.006;

    double carbon_base = 2.0e-4;  // tCO2/kWh
    double carbon_swing = 0.6e-4; // higher at the evening peak, lower at midday
    double social_cost_carbon = 70.0;
    double export_charge = 0.01;
    double storage_cost = 0.005;
    double grid_loss_term = 0.0;

    double demand_base = 0.35;    // kWh/step
    double demand_morning = 0.7;  // extra on hours [7, 10)
    double demand_evening = 1.2;  // extra on hours [17, 22)
    double demand_noise = 0.08;   // multiplicative
    double flexible_share = 0.35; // fraction of household demand that may shift
    int flex_window = 8;

    double pv_peak = 0.8; // kWh/step at solar noon
    double pv_noise = 0.10;

    double temp_mean = 5.0;  // degC
    double temp_swing = 3.0; // day/night amplitude
    double temp_noise = 0.4;
    double comfort_low = 18.0;
    double comfort_high = 21.0;
    double heat_cap = 10.0; // kWh/step

    // EV: away [commute_leave, commute_return), trip energy split between the
    // first and last away step. trip_kwh = 0 removes driving entirely.
    int commute_leave = 7;
    int commute_return = 17;
    double trip_kwh = 6.0;

    double battery_capacity = 39.0;
    double battery_min_frac = 0.10;    // min_level = frac * capacity
    double battery_initial_frac = 1.0; // initial = frac * capacity; full battery keeps the
                                       // inflexible baseline free of end-of-day restore flows
    double battery_max_charge = 6.6;   // kWh/step
    double battery_max_discharge = 6.6;
    double battery_eta = 0.95; // symmetric charge/discharge efficiency
};

// Pure function of (seed, n_homes, n_days, template); output always validates.
ScenarioData generate_profiles(std::uint64_t seed, int n_homes, int n_days,
                               const ProfileTemplate& tpl = {});

// Every violated invariant, exhaustively. Empty result means the scenario is usable.
std::vector<Violation> validate(const ScenarioData& scenario);

// CSV scenario directory: grid.csv, home_<i>.csv, thermal.csv, meta.json.
// Round-trip exact (floats written with shortest round-trip formatting).
void save_scenario_csv(const ScenarioData& scenario, const std::string& directory);

struct ScenarioLoadResult {
    std::optional<ScenarioData> scenario; // set only when violations is empty
    std::vector<Violation> violations;
};

ScenarioLoadResult load_scenario_csv(const std::string& directory);

// Default thermal coefficients: a two-node (building mass + algebraic air
// node) RC model discretised at 1 h. Mass time constant ~100 h, steady-state
// heating of ~1.75 kW holds 19 degC indoors against 5 degC outside.
ThermalParams default_thermal_params(double heat_cap = 10.0);

} // namespace flexcoord
