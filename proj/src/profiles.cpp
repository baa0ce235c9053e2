#include "flexcoord/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flexcoord/environment.hpp"
#include "flexcoord/util.hpp"

namespace flexcoord {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Violation::to_string() const {
    std::string s = field;
    if (home >= 0) s += " home " + std::to_string(home);
    if (step >= 0) s += " step " + std::to_string(step);
    return s + ": " + message;
}

std::vector<double> grid_cost_coefficient(const std::vector<double>& price,
                                          const std::vector<double>& intensity,
                                          double social_cost_carbon) {
    if (price.size() != intensity.size())
        throw std::invalid_argument("grid_cost_coefficient: series length mismatch");
    if (social_cost_carbon < 0.0)
        throw std::invalid_argument("grid_cost_coefficient: negative social cost of carbon");
    std::vector<double> cg(price.size());
    for (std::size_t t = 0; t < price.size(); ++t) {
        if (!std::isfinite(price[t]) || !std::isfinite(intensity[t]))
            throw std::invalid_argument("grid_cost_coefficient: non-finite input at step " +
                                        std::to_string(t));
        cg[t] = price[t] + intensity[t] * social_cost_carbon;
    }
    return cg;
}

ThermalParams default_thermal_params(double heat_cap) {
    const double g_mass_air = 0.5;  // kW/degC, building mass <-> indoor air coupling
    const double g_air_ext = 0.125; // kW/degC, envelope losses to the exterior
    const double c_mass = 10.0;     // kWh/degC thermal mass
    const double g_total = g_mass_air + g_air_ext;
    // algebraic air node: T_air = w_mass T_m + w_ext T_e + w_gain (phi + h)
    const double w_mass = g_mass_air / g_total;
    const double w_ext = g_air_ext / g_total;
    const double w_gain = 1.0 / g_total;
    // mass ODE c_mass dTm/dt = g_mass_air (T_air - T_m), Crank-Nicolson at 1 h
    const double a = g_mass_air * (1.0 - w_mass) / c_mass;
    const double be = g_mass_air * w_ext / c_mass;
    const double bg = g_mass_air * w_gain / c_mass;
    const double denom = 1.0 + 0.5 * a;
    ThermalParams p;
    p.kappa[0] = {0.0, (1.0 - 0.5 * a) / denom, be / denom, bg / denom, bg / denom};
    p.kappa[1] = {0.0, w_mass * p.kappa[0][1], w_mass * p.kappa[0][2] + w_ext,
                  w_mass * p.kappa[0][3] + w_gain, w_mass * p.kappa[0][4] + w_gain};
    p.heat_cap = heat_cap;
    return p;
}

ScenarioData generate_profiles(std::uint64_t seed, int n_homes, int n_days,
                               const ProfileTemplate& tpl) {
    if (n_homes < 1) throw std::invalid_argument("generate_profiles: n_homes must be >= 1");
    if (n_days < 1) throw std::invalid_argument("generate_profiles: n_days must be >= 1");

    ScenarioData sc;
    sc.n_homes = n_homes;
    sc.horizon = 24;
    sc.n_days = n_days;
    sc.seed = seed;
    const int n = sc.n_steps();

    auto rng = make_rng(seed, "profiles");
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    GridSignals& grid = sc.grid;
    grid.social_cost_carbon = tpl.social_cost_carbon;
    grid.export_charge = tpl.export_charge;
    grid.storage_cost = tpl.storage_cost;
    grid.grid_loss_term = tpl.grid_loss_term;
    grid.wholesale_price.resize(n);
    grid.carbon_intensity.resize(n);
    for (int t = 0; t < n; ++t) {
        const int hour = t % 24;
        double price = tpl.price_day;
        if (hour < 7) price = tpl.price_night;
        else if (hour >= 17 && hour < 21) price = tpl.price_peak;
        price += unit(rng) * tpl.price_noise;
        grid.wholesale_price[t] = std::max(price, 0.01);
        // carbon dips overnight, peaks with the evening demand
        double carbon = tpl.carbon_base +
                        tpl.carbon_swing * std::cos(2.0 * std::numbers::pi * (hour - 18) / 24.0);
        carbon += unit(rng) * 0.05 * tpl.carbon_swing;
        grid.carbon_intensity[t] = std::max(carbon, 1e-5);
    }
    grid.grid_cost_coeff =
        grid_cost_coefficient(grid.wholesale_price, grid.carbon_intensity, grid.social_cost_carbon);

    HomeProfiles& homes = sc.homes;
    homes.flex_window = tpl.flex_window;
    homes.external_temp.resize(n);
    homes.solar_heat_flow.assign(n, 0.0);
    for (int t = 0; t < n; ++t) {
        const int hour = t % 24;
        homes.external_temp[t] = tpl.temp_mean +
                                 tpl.temp_swing * std::cos(2.0 * std::numbers::pi * (hour - 14) / 24.0) +
                                 unit(rng) * tpl.temp_noise;
    }

    auto alloc = [&](std::vector<std::vector<double>>& v) {
        v.assign(n_homes, std::vector<double>(n, 0.0));
    };
    alloc(homes.ev_availability);
    alloc(homes.ev_trip_demand);
    alloc(homes.fixed_demand);
    alloc(homes.flexible_demand);
    alloc(homes.pv_generation);
    alloc(homes.temp_low);
    alloc(homes.temp_high);

    std::uniform_int_distribution<int> jitter(-1, 1);
    for (int i = 0; i < n_homes; ++i) {
        int leave = tpl.commute_leave;
        int back = tpl.commute_return;
        if (tpl.trip_kwh > 0.0) {
            leave = std::clamp(tpl.commute_leave + jitter(rng), 1, 22);
            back = std::clamp(tpl.commute_return + jitter(rng), leave + 2, 23);
        }
        for (int t = 0; t < n; ++t) {
            const int hour = t % 24;
            const bool away = tpl.trip_kwh > 0.0 && hour >= leave && hour < back;
            homes.ev_availability[i][t] = away ? 0.0 : 1.0;
            if (tpl.trip_kwh > 0.0) {
                if (hour == leave) homes.ev_trip_demand[i][t] = 0.5 * tpl.trip_kwh;
                if (hour == back - 1) homes.ev_trip_demand[i][t] += 0.5 * tpl.trip_kwh;
            }

            double demand = tpl.demand_base;
            if (hour >= 7 && hour < 10) demand += tpl.demand_morning;
            if (hour >= 17 && hour < 22) demand += tpl.demand_evening;
            demand *= std::max(1.0 + unit(rng) * tpl.demand_noise, 0.05);
            homes.flexible_demand[i][t] = tpl.flexible_share * demand;
            homes.fixed_demand[i][t] = demand - homes.flexible_demand[i][t];

            const double solar = std::cos(std::numbers::pi * (hour - 12.5) / 8.0);
            double pv = hour >= 9 && hour <= 16 ? tpl.pv_peak * std::max(solar, 0.0) : 0.0;
            if (pv > 0.0) pv *= std::max(1.0 + unit(rng) * tpl.pv_noise, 0.0);
            homes.pv_generation[i][t] = pv;

            homes.temp_low[i][t] = tpl.comfort_low;
            homes.temp_high[i][t] = tpl.comfort_high;
        }
    }

    BatteryParams bat;
    bat.capacity = tpl.battery_capacity;
    bat.min_level = tpl.battery_min_frac * tpl.battery_capacity;
    bat.initial = tpl.battery_initial_frac * tpl.battery_capacity;
    bat.max_charge = tpl.battery_max_charge;
    bat.max_discharge = tpl.battery_max_discharge;
    bat.eta_ch = tpl.battery_eta;
    bat.eta_dis = tpl.battery_eta;
    sc.battery.assign(n_homes, bat);
    sc.thermal.assign(n_homes, default_thermal_params(tpl.heat_cap));
    return sc;
}

namespace {

void check_series(std::vector<Violation>& out, const std::vector<double>& v, int expected,
                  const char* field, int home = -1) {
    if (static_cast<int>(v.size()) != expected) {
        out.push_back({field, home, -1,
                       "length " + std::to_string(v.size()) + ", expected " +
                           std::to_string(expected)});
        return;
    }
    for (int t = 0; t < expected; ++t)
        if (!std::isfinite(v[t])) out.push_back({field, home, t, "non-finite value"});
}

} // namespace

std::vector<Violation> validate(const ScenarioData& sc) {
    std::vector<Violation> out;
    if (sc.n_homes < 1) out.push_back({"n_homes", -1, -1, "must be >= 1"});
    if (sc.horizon < 1) out.push_back({"horizon", -1, -1, "must be >= 1"});
    if (sc.n_days < 1) out.push_back({"n_days", -1, -1, "must be >= 1"});
    if (!out.empty()) return out;
    const int n = sc.n_steps();

    const GridSignals& g = sc.grid;
    check_series(out, g.wholesale_price, n, "wholesale_price");
    check_series(out, g.carbon_intensity, n, "carbon_intensity");
    check_series(out, g.grid_cost_coeff, n, "grid_cost_coeff");
    if (g.social_cost_carbon < 0.0) out.push_back({"social_cost_carbon", -1, -1, "negative"});
    if (g.export_charge < 0.0) out.push_back({"export_charge", -1, -1, "negative"});
    if (g.storage_cost < 0.0) out.push_back({"storage_cost", -1, -1, "negative"});
    if (g.grid_loss_term < 0.0) out.push_back({"grid_loss_term", -1, -1, "negative"});
    if (!out.empty()) return out;
    for (int t = 0; t < n; ++t) {
        const double expect = g.wholesale_price[t] + g.carbon_intensity[t] * g.social_cost_carbon;
        if (std::abs(g.grid_cost_coeff[t] - expect) > 1e-9)
            out.push_back({"grid_cost_coeff", -1, t,
                           "is " + format_double(g.grid_cost_coeff[t]) + ", expected price + intensity*scc = " +
                               format_double(expect)});
    }

    const HomeProfiles& h = sc.homes;
    if (h.flex_window < 0) out.push_back({"flex_window", -1, -1, "negative"});
    auto check_home_series = [&](const std::vector<std::vector<double>>& v, const char* field) {
        if (static_cast<int>(v.size()) != sc.n_homes) {
            out.push_back({field, -1, -1, "outer size " + std::to_string(v.size()) + ", expected " +
                                              std::to_string(sc.n_homes)});
            return false;
        }
        for (int i = 0; i < sc.n_homes; ++i) check_series(out, v[i], n, field, i);
        return true;
    };
    bool shapes_ok = check_home_series(h.ev_availability, "ev_availability");
    shapes_ok &= check_home_series(h.ev_trip_demand, "ev_trip_demand");
    shapes_ok &= check_home_series(h.fixed_demand, "fixed_demand");
    shapes_ok &= check_home_series(h.flexible_demand, "flexible_demand");
    shapes_ok &= check_home_series(h.pv_generation, "pv_generation");
    shapes_ok &= check_home_series(h.temp_low, "temp_low");
    shapes_ok &= check_home_series(h.temp_high, "temp_high");
    check_series(out, h.external_temp, n, "external_temp");
    check_series(out, h.solar_heat_flow, n, "solar_heat_flow");
    if (!shapes_ok || !out.empty()) return out;

    for (int i = 0; i < sc.n_homes; ++i) {
        for (int t = 0; t < n; ++t) {
            const double mu = h.ev_availability[i][t];
            if (mu != 0.0 && mu != 1.0)
                out.push_back({"ev_availability", i, t, "must be 0 or 1"});
            if (h.ev_trip_demand[i][t] < 0.0) out.push_back({"ev_trip_demand", i, t, "negative"});
            if (h.ev_trip_demand[i][t] > 0.0 && mu == 1.0)
                out.push_back({"ev_trip_demand", i, t, "trip during availability"});
            if (h.fixed_demand[i][t] < 0.0) out.push_back({"fixed_demand", i, t, "negative"});
            if (h.flexible_demand[i][t] < 0.0) out.push_back({"flexible_demand", i, t, "negative"});
            if (h.pv_generation[i][t] < 0.0) out.push_back({"pv_generation", i, t, "negative"});
            if (h.temp_low[i][t] > h.temp_high[i][t])
                out.push_back({"temp_bounds", i, t, "temp_low exceeds temp_high"});
        }
    }

    if (static_cast<int>(sc.battery.size()) != sc.n_homes)
        out.push_back({"battery", -1, -1, "expected one parameter set per home"});
    if (static_cast<int>(sc.thermal.size()) != sc.n_homes)
        out.push_back({"thermal", -1, -1, "expected one parameter set per home"});
    if (!out.empty()) return out;

    for (int i = 0; i < sc.n_homes; ++i) {
        const BatteryParams& b = sc.battery[i];
        if (!(0.0 <= b.min_level && b.min_level <= b.initial && b.initial <= b.capacity))
            out.push_back({"battery", i, -1, "need 0 <= min_level <= initial <= capacity"});
        if (!(b.eta_ch > 0.0 && b.eta_ch <= 1.0 && b.eta_dis > 0.0 && b.eta_dis <= 1.0))
            out.push_back({"battery", i, -1, "efficiencies must lie in (0, 1]"});
        if (!(b.max_charge > 0.0) || !(b.max_discharge > 0.0))
            out.push_back({"battery", i, -1, "charge/discharge limits must be positive"});

        const ThermalParams& tp = sc.thermal[i];
        if (!(tp.kappa[1][4] > 0.0))
            out.push_back({"thermal", i, -1, "kappa air/heating coefficient must be positive"});
        if (!(std::abs(tp.kappa[0][1]) < 1.0))
            out.push_back({"thermal", i, -1, "mass temperature recursion does not contract"});
        if (!(tp.heat_cap > 0.0)) out.push_back({"thermal", i, -1, "heat_cap must be positive"});
    }
    if (!out.empty()) return out;

    for (int i = 0; i < sc.n_homes; ++i) {
        for (int d = 0; d < sc.n_days; ++d) {
            try {
                compute_battery_envelope(sc, i, d);
            } catch (const InfeasibleScenario& e) {
                out.push_back({"battery", i, d * sc.horizon, e.what()});
            }
        }
    }
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

} // namespace

void save_scenario_csv(const ScenarioData& sc, const std::string& directory) {
    fs::create_directories(directory);
    const fs::path dir(directory);
    const int n = sc.n_steps();

    std::string grid = "t,price,intensity,cg\n";
    for (int t = 0; t < n; ++t)
        grid += std::to_string(t) + ',' + format_double(sc.grid.wholesale_price[t]) + ',' +
                format_double(sc.grid.carbon_intensity[t]) + ',' +
                format_double(sc.grid.grid_cost_coeff[t]) + '\n';
    write_file(dir / "grid.csv", grid);

    for (int i = 0; i < sc.n_homes; ++i) {
        std::string home = "t,mu,d_ev,d_fixed,d_flex,pv\n";
        for (int t = 0; t < n; ++t)
            home += std::to_string(t) + ',' + format_double(sc.homes.ev_availability[i][t]) + ',' +
                    format_double(sc.homes.ev_trip_demand[i][t]) + ',' +
                    format_double(sc.homes.fixed_demand[i][t]) + ',' +
                    format_double(sc.homes.flexible_demand[i][t]) + ',' +
                    format_double(sc.homes.pv_generation[i][t]) + '\n';
        write_file(dir / ("home_" + std::to_string(i) + ".csv"), home);
    }

    // kappa rows first (row-major 2x5 + heating cap), then one row per step
    std::string thermal = "row,a,b,c,d,e,f,g,h,i,j,k,l\n";
    for (int i = 0; i < sc.n_homes; ++i) {
        thermal += "kappa," + std::to_string(i);
        for (int r = 0; r < 2; ++r)
            for (int k = 0; k < 5; ++k) thermal += ',' + format_double(sc.thermal[i].kappa[r][k]);
        thermal += ',' + format_double(sc.thermal[i].heat_cap) + '\n';
    }
    for (int t = 0; t < n; ++t) {
        thermal += "step," + std::to_string(t) + ',' + format_double(sc.homes.external_temp[t]) +
                   ',' + format_double(sc.homes.solar_heat_flow[t]);
        for (int i = 0; i < sc.n_homes; ++i)
            thermal += ',' + format_double(sc.homes.temp_low[i][t]) + ',' +
                       format_double(sc.homes.temp_high[i][t]);
        thermal += '\n';
    }
    write_file(dir / "thermal.csv", thermal);

    json meta;
    meta["format"] = "flexcoord-scenario-v1";
    meta["n_homes"] = sc.n_homes;
    meta["horizon"] = sc.horizon;
    meta["n_days"] = sc.n_days;
    meta["seed"] = sc.seed;
    meta["social_cost_carbon"] = sc.grid.social_cost_carbon;
    meta["export_charge"] = sc.grid.export_charge;
    meta["storage_cost"] = sc.grid.storage_cost;
    meta["grid_loss_term"] = sc.grid.grid_loss_term;
    meta["flex_window"] = sc.homes.flex_window;
    meta["battery"] = json::array();
    for (const BatteryParams& b : sc.battery)
        meta["battery"].push_back({{"capacity", b.capacity},
                                   {"min_level", b.min_level},
                                   {"initial", b.initial},
                                   {"max_charge", b.max_charge},
                                   {"max_discharge", b.max_discharge},
                                   {"eta_ch", b.eta_ch},
                                   {"eta_dis", b.eta_dis}});
    write_file(dir / "meta.json", meta.dump(2) + "\n");
}

namespace {

struct CsvReader {
    std::vector<std::vector<std::string>> rows;
    bool ok = false;
};

CsvReader read_csv(const fs::path& path, std::vector<Violation>& out) {
    CsvReader r;
    std::ifstream f(path);
    if (!f) {
        out.push_back({path.filename().string(), -1, -1, "file missing"});
        return r;
    }
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (first) { first = false; continue; } // header
        if (line.empty() || line == "\r") continue;
        r.rows.push_back(split_csv_line(line));
    }
    r.ok = true;
    return r;
}

// parses fields [from, from+count) of a row as doubles, reporting failures
bool parse_row(const std::vector<std::string>& row, std::size_t from, std::size_t count,
               double* dest, const char* file, int line_no, std::vector<Violation>& out) {
    if (row.size() < from + count) {
        out.push_back({file, -1, line_no, "malformed row: expected at least " +
                                              std::to_string(from + count) + " fields"});
        return false;
    }
    for (std::size_t k = 0; k < count; ++k) {
        auto v = parse_double(row[from + k]);
        if (!v) {
            out.push_back({file, -1, line_no, "malformed row: field '" + row[from + k] +
                                                  "' is not a number"});
            return false;
        }
        dest[k] = *v;
    }
    return true;
}

} // namespace

ScenarioLoadResult load_scenario_csv(const std::string& directory) {
    ScenarioLoadResult result;
    auto& out = result.violations;
    const fs::path dir(directory);

    std::ifstream meta_file(dir / "meta.json");
    if (!meta_file) {
        out.push_back({"meta.json", -1, -1, "file missing"});
        return result;
    }
    json meta;
    try {
        meta_file >> meta;
    } catch (const json::exception& e) {
        out.push_back({"meta.json", -1, -1, std::string("parse error: ") + e.what()});
        return result;
    }

    ScenarioData sc;
    try {
        sc.n_homes = meta.at("n_homes").get<int>();
        sc.horizon = meta.at("horizon").get<int>();
        sc.n_days = meta.at("n_days").get<int>();
        sc.seed = meta.at("seed").get<std::uint64_t>();
        sc.grid.social_cost_carbon = meta.at("social_cost_carbon").get<double>();
        sc.grid.export_charge = meta.at("export_charge").get<double>();
        sc.grid.storage_cost = meta.at("storage_cost").get<double>();
        sc.grid.grid_loss_term = meta.at("grid_loss_term").get<double>();
        sc.homes.flex_window = meta.at("flex_window").get<int>();
        for (const auto& b : meta.at("battery")) {
            BatteryParams bp;
            bp.capacity = b.at("capacity").get<double>();
            bp.min_level = b.at("min_level").get<double>();
            bp.initial = b.at("initial").get<double>();
            bp.max_charge = b.at("max_charge").get<double>();
            bp.max_discharge = b.at("max_discharge").get<double>();
            bp.eta_ch = b.at("eta_ch").get<double>();
            bp.eta_dis = b.at("eta_dis").get<double>();
            sc.battery.push_back(bp);
        }
    } catch (const json::exception& e) {
        out.push_back({"meta.json", -1, -1, std::string("missing or mistyped key: ") + e.what()});
        return result;
    }
    if (sc.n_homes < 1 || sc.horizon < 1 || sc.n_days < 1) {
        out.push_back({"meta.json", -1, -1, "n_homes, horizon and n_days must be >= 1"});
        return result;
    }
    const int n = sc.n_steps();

    auto grid_csv = read_csv(dir / "grid.csv", out);
    if (grid_csv.ok) {
        sc.grid.wholesale_price.assign(n, 0.0);
        sc.grid.carbon_intensity.assign(n, 0.0);
        sc.grid.grid_cost_coeff.assign(n, 0.0);
        if (static_cast<int>(grid_csv.rows.size()) != n)
            out.push_back({"grid.csv", -1, -1, "expected " + std::to_string(n) + " step rows, got " +
                                                   std::to_string(grid_csv.rows.size())});
        else
            for (int t = 0; t < n; ++t) {
                double v[3];
                if (parse_row(grid_csv.rows[t], 1, 3, v, "grid.csv", t, out)) {
                    sc.grid.wholesale_price[t] = v[0];
                    sc.grid.carbon_intensity[t] = v[1];
                    sc.grid.grid_cost_coeff[t] = v[2];
                }
            }
    }

    auto alloc = [&](std::vector<std::vector<double>>& v) {
        v.assign(sc.n_homes, std::vector<double>(n, 0.0));
    };
    alloc(sc.homes.ev_availability);
    alloc(sc.homes.ev_trip_demand);
    alloc(sc.homes.fixed_demand);
    alloc(sc.homes.flexible_demand);
    alloc(sc.homes.pv_generation);
    alloc(sc.homes.temp_low);
    alloc(sc.homes.temp_high);
    sc.homes.external_temp.assign(n, 0.0);
    sc.homes.solar_heat_flow.assign(n, 0.0);

    for (int i = 0; i < sc.n_homes; ++i) {
        const std::string name = "home_" + std::to_string(i) + ".csv";
        auto csv = read_csv(dir / name, out);
        if (!csv.ok) continue;
        if (static_cast<int>(csv.rows.size()) != n) {
            out.push_back({name, i, -1, "expected " + std::to_string(n) + " step rows, got " +
                                            std::to_string(csv.rows.size())});
            continue;
        }
        for (int t = 0; t < n; ++t) {
            double v[5];
            if (parse_row(csv.rows[t], 1, 5, v, name.c_str(), t, out)) {
                sc.homes.ev_availability[i][t] = v[0];
                sc.homes.ev_trip_demand[i][t] = v[1];
                sc.homes.fixed_demand[i][t] = v[2];
                sc.homes.flexible_demand[i][t] = v[3];
                sc.homes.pv_generation[i][t] = v[4];
            }
        }
    }

    sc.thermal.assign(sc.n_homes, ThermalParams{});
    auto thermal_csv = read_csv(dir / "thermal.csv", out);
    if (thermal_csv.ok) {
        int step_rows = 0;
        for (std::size_t r = 0; r < thermal_csv.rows.size(); ++r) {
            const auto& row = thermal_csv.rows[r];
            if (row.empty()) continue;
            if (row[0] == "kappa") {
                double v[12];
                if (!parse_row(row, 1, 12, v, "thermal.csv", static_cast<int>(r), out)) continue;
                const int i = static_cast<int>(v[0]);
                if (i < 0 || i >= sc.n_homes) {
                    out.push_back({"thermal.csv", i, -1, "kappa row for unknown home"});
                    continue;
                }
                for (int k = 0; k < 5; ++k) {
                    sc.thermal[i].kappa[0][k] = v[1 + k];
                    sc.thermal[i].kappa[1][k] = v[6 + k];
                }
                sc.thermal[i].heat_cap = v[11];
            } else if (row[0] == "step") {
                std::vector<double> v(3 + 2 * sc.n_homes);
                if (!parse_row(row, 1, v.size(), v.data(), "thermal.csv", static_cast<int>(r), out))
                    continue;
                const int t = static_cast<int>(v[0]);
                if (t < 0 || t >= n) {
                    out.push_back({"thermal.csv", -1, t, "step row out of range"});
                    continue;
                }
                sc.homes.external_temp[t] = v[1];
                sc.homes.solar_heat_flow[t] = v[2];
                for (int i = 0; i < sc.n_homes; ++i) {
                    sc.homes.temp_low[i][t] = v[3 + 2 * i];
                    sc.homes.temp_high[i][t] = v[4 + 2 * i];
                }
                ++step_rows;
            } else {
                out.push_back({"thermal.csv", -1, static_cast<int>(r),
                               "unknown row tag '" + row[0] + "'"});
            }
        }
        if (step_rows != n)
            out.push_back({"thermal.csv", -1, -1, "expected " + std::to_string(n) +
                                                      " step rows, got " + std::to_string(step_rows)});
    }

    if (!out.empty()) return result;
    auto invariants = validate(sc);
    out.insert(out.end(), invariants.begin(), invariants.end());
    if (out.empty()) result.scenario = std::move(sc);
    return result;
}

} // namespace flexcoord
