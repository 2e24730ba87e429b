#include "mutum/calibration.hpp"

#include "mutum/csv.hpp"
#include "mutum/errors.hpp"
#include "mutum/locomotion.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mutum::calibration {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

Environment parse_env(const std::string& s) {
    if (s == "dry") return Environment::Dry;
    if (s == "wet") return Environment::Wet;
    if (s == "phantom") return Environment::Phantom;
    if (s == "invivo") return Environment::InVivo;
    throw ValidationError("anchor environment is dry|wet|phantom|invivo", s);
}

// Number of whole steps in [0, max]; grid points are indexed, not accumulated.
int steps_to(double max, double step) {
    return static_cast<int>(std::floor(max / step + 1e-9));
}

// i-th grid value, divided rather than multiplied when 1/step is integral so
// that e.g. 83 * 0.005 prints as 0.415.
double grid_value(int i, double step) {
    const double inv = std::round(1.0 / step);
    return std::abs(1.0 / step - inv) < 1e-9 ? i / inv : i * step;
}

}  // namespace

std::string InclineAnchor::describe() const {
    return std::string(to_string(env)) + " incline " + fmt(angle_deg) + " deg " +
           (pass ? "pass" : "fail");
}

std::string ThermalPointAnchor::describe() const {
    std::string s = "T(" + fmt(t_s) + " s)";
    if (min_c) s += " >= " + fmt(*min_c);
    if (max_c) s += " <= " + fmt(*max_c);
    if (target_c) s += " ~ " + fmt(*target_c);
    return s;
}

std::string ThermalWindowAnchor::describe() const {
    return "T within " + fmt(tol_c) + " of " + fmt(target_c) + " in [" + fmt(t0_s) + ", " +
           fmt(t1_s) + "] s";
}

AnchorSet default_anchors() {
    AnchorSet a;
    a.incline = {{Environment::Dry, 20.0, true},
                 {Environment::Dry, 25.0, false},
                 {Environment::Wet, 50.0, true},
                 {Environment::Wet, 55.0, false}};
    a.friction_max = {{Environment::Dry, 1.0}, {Environment::Wet, 0.8}};
    a.thermal_points = {{90.0, 40.9, std::nullopt, 40.9}, {180.0, std::nullopt, 42.5, 42.0}};
    a.thermal_windows = {{180.0, 240.0, 42.0, 0.5}};
    return a;
}

AnchorSet parse_anchors(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), 0, e.byte);
    }
    AnchorSet a;
    a.incline.clear();
    a.friction_max.clear();
    try {
        if (j.contains("designs")) {
            a.designs.clear();
            for (const auto& d : j.at("designs")) {
                a.designs.push_back(robot::parse_design_kind(d.get<std::string>()));
            }
        }
        if (j.contains("payload")) {
            const auto p = j.at("payload").get<std::string>();
            if (p != "empty" && p != "filled") {
                throw ValidationError("anchor payload is empty|filled", p);
            }
            a.filled_payload = p == "filled";
        }
        for (const auto& e : j.value("incline", json::array())) {
            const auto expect = e.at("expect").get<std::string>();
            if (expect != "pass" && expect != "fail") {
                throw ValidationError("incline expect is pass|fail", expect);
            }
            a.incline.push_back({parse_env(e.at("env").get<std::string>()),
                                 e.at("angle_deg").get<double>(), expect == "pass"});
        }
        const json friction_max = j.value("friction_max", json::object());
        for (const auto& [k, v] : friction_max.items()) {
            a.friction_max[parse_env(k)] = v.get<double>();
        }
        a.thermal_points.clear();
        a.thermal_windows.clear();
        if (j.contains("thermal")) {
            const auto& t = j.at("thermal");
            a.thermal_start_c = t.value("start_c", a.thermal_start_c);
            if (t.contains("fus")) {
                const auto& f = t.at("fus");
                a.fus.electrical_power = f.value("power_w", a.fus.electrical_power);
                a.fus.burst_length = f.value("burst_s", a.fus.burst_length);
                a.fus.period = f.value("period_s", a.fus.period);
                a.fus.duration = f.value("duration_s", a.fus.duration);
            }
            for (const auto& p : t.value("points", json::array())) {
                ThermalPointAnchor pa;
                pa.t_s = p.at("t_s").get<double>();
                if (p.contains("min_c")) pa.min_c = p.at("min_c").get<double>();
                if (p.contains("max_c")) pa.max_c = p.at("max_c").get<double>();
                if (p.contains("target_c")) pa.target_c = p.at("target_c").get<double>();
                a.thermal_points.push_back(pa);
            }
            for (const auto& w : t.value("windows", json::array())) {
                a.thermal_windows.push_back({w.at("t0_s").get<double>(), w.at("t1_s").get<double>(),
                                             w.at("target_c").get<double>(),
                                             w.at("tol_c").get<double>()});
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError("anchor file schema", e.what());
    }
    for (const auto& w : a.thermal_windows) {
        if (!(w.t1_s >= w.t0_s && w.t0_s >= 0.0 && w.tol_c >= 0.0)) {
            throw ValidationError("thermal window 0 <= t0 <= t1, tol >= 0", w.describe());
        }
    }
    return a;
}

AnchorSet load_anchors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open anchors " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_anchors(ss.str());
}

namespace {

struct LoadCase {
    double weight;
    double area;
};

// Signed margins in tan θ units; satisfied when >= 0 (pass) or > 0 (fail).
double anchor_margin(const InclineAnchor& a, const LoadCase& c, double mu, double sigma) {
    const double threshold = mu + sigma * c.area / c.weight;
    const double t = std::tan(a.angle_deg * kPi / 180.0);
    return a.pass ? threshold - t : t - threshold;
}

bool satisfied(const InclineAnchor& a, double margin) {
    return a.pass ? margin >= 0.0 : margin > 0.0;
}

// Improvement needed to move off an earlier grid point; keeps the search
// from trading a zero adhesion for a negligible margin gain.
constexpr double kMarginTieTolerance = 1e-3;

FrictionFit fit_environment(const std::vector<InclineAnchor>& anchors,
                            const std::vector<LoadCase>& cases, double mu_max, const GridSpec& grid,
                            std::vector<std::string>& violated) {
    const int n_mu = steps_to(mu_max, grid.friction_step);
    const int n_sigma = steps_to(grid.adhesion_max, grid.adhesion_step);

    FrictionFit best;
    bool found = false;
    FrictionFit compromise;
    double compromise_score = -std::numeric_limits<double>::infinity();

    for (int is = 0; is <= n_sigma; ++is) {
        const double sigma = grid_value(is, grid.adhesion_step);
        for (int im = 0; im <= n_mu; ++im) {
            const double mu = grid_value(im, grid.friction_step);
            double worst = std::numeric_limits<double>::infinity();
            bool ok = true;
            for (const auto& a : anchors) {
                for (const auto& c : cases) {
                    const double m = anchor_margin(a, c, mu, sigma);
                    worst = std::min(worst, m);
                    ok = ok && satisfied(a, m);
                }
            }
            if (ok) {
                if (!found || worst > best.margin + kMarginTieTolerance) {
                    best = {mu, sigma, worst};
                    found = true;
                }
            } else if (worst > compromise_score) {
                compromise_score = worst;
                compromise = {mu, sigma, worst};
            }
        }
    }
    if (!found) {
        for (const auto& a : anchors) {
            for (const auto& c : cases) {
                if (!satisfied(a, anchor_margin(a, c, compromise.friction_coefficient,
                                                compromise.adhesion_stress))) {
                    violated.push_back(a.describe() + " (best compromise mu = " +
                                       csv::format_double(compromise.friction_coefficient) +
                                       ", adhesion = " + csv::format_double(compromise.adhesion_stress) +
                                       " Pa)");
                    break;
                }
            }
        }
    }
    return best;
}

struct ThermalScore {
    bool ok = false;
    double objective = 0.0;
    double worst_violation = 0.0;
};

ThermalScore score_thermal(const AnchorSet& a, const thermics::ThermalParams& p, double sample,
                           std::vector<std::string>* violated) {
    thermics::FusConfig fus = a.fus;
    fus.absorbed_fraction = p.absorbed_fraction;
    thermics::ThermalState s;
    s.ambient_c = a.thermal_start_c;
    s.temperature_c = a.thermal_start_c;
    s.capacitance = p.capacitance;
    s.conductance = p.conductance;

    auto temperature_at = [&](double t) {
        return t > 0.0 ? thermics::heat_step(s, fus, 0.0, t).temperature_c : s.temperature_c;
    };

    ThermalScore out{true, 0.0, 0.0};
    auto violate = [&](const std::string& what, double by) {
        out.ok = false;
        out.worst_violation = std::max(out.worst_violation, by);
        if (violated) violated->push_back(what);
    };

    for (const auto& pa : a.thermal_points) {
        const double T = temperature_at(pa.t_s);
        if (pa.min_c && T < *pa.min_c) violate(pa.describe(), *pa.min_c - T);
        if (pa.max_c && T > *pa.max_c) violate(pa.describe(), T - *pa.max_c);
        if (pa.target_c) out.objective += std::abs(T - *pa.target_c);
    }
    for (const auto& w : a.thermal_windows) {
        double best = std::numeric_limits<double>::infinity();
        thermics::ThermalState cur = s;
        double now = 0.0;
        const int n = static_cast<int>(std::floor((w.t1_s - w.t0_s) / sample + 1e-9));
        for (int i = 0; i <= n; ++i) {
            const double t = w.t0_s + i * sample;
            if (t > now) {
                cur = thermics::heat_step(cur, fus, now, t - now);
                now = t;
            }
            best = std::min(best, std::abs(cur.temperature_c - w.target_c));
        }
        if (best > w.tol_c) violate(w.describe(), best - w.tol_c);
        out.objective += best;
    }
    return out;
}

}  // namespace

CalibrationResult calibrate(const AnchorSet& anchors, const GridSpec& grid) {
    CalibrationResult result;
    std::vector<std::string> violated;

    std::map<Environment, std::vector<InclineAnchor>> by_env;
    for (const auto& a : anchors.incline) {
        by_env[a.env].push_back(a);
    }
    std::vector<LoadCase> cases;
    for (const auto kind : anchors.designs) {
        const auto design = robot::stock_design(kind);
        const auto payload = anchors.filled_payload ? robot::filled_payload(design)
                                                    : robot::empty_payload();
        cases.push_back({robot::robot_mass(design, payload) * kGravity, design.contact_area()});
    }
    if (cases.empty() && !by_env.empty()) {
        throw ValidationError("incline anchors need at least one design", "designs empty");
    }
    for (const auto& [env, list] : by_env) {
        const auto it = anchors.friction_max.find(env);
        const double mu_max = it != anchors.friction_max.end() ? it->second : 2.0;
        const std::size_t before = violated.size();
        const auto fit = fit_environment(list, cases, mu_max, grid, violated);
        if (violated.size() == before) {
            result.friction[env] = fit;
        }
    }

    if (!anchors.thermal_points.empty() || !anchors.thermal_windows.empty()) {
        const int n_af = steps_to(1.0, grid.fraction_step);
        const int n_g = steps_to(grid.conductance_max, grid.conductance_step);
        const int n_c = steps_to(grid.capacitance_max, grid.capacitance_step);
        std::optional<thermics::ThermalParams> best;
        double best_objective = std::numeric_limits<double>::infinity();
        thermics::ThermalParams compromise;
        double compromise_violation = std::numeric_limits<double>::infinity();
        for (int ia = 1; ia <= n_af; ++ia) {
            for (int ig = 1; ig <= n_g; ++ig) {
                for (int ic = 1; ic <= n_c; ++ic) {
                    const thermics::ThermalParams p{grid_value(ic, grid.capacitance_step),
                                                    grid_value(ig, grid.conductance_step),
                                                    grid_value(ia, grid.fraction_step)};
                    const auto sc = score_thermal(anchors, p, grid.window_sample, nullptr);
                    if (sc.ok) {
                        if (sc.objective < best_objective - 1e-9) {
                            best_objective = sc.objective;
                            best = p;
                        }
                    } else if (sc.worst_violation < compromise_violation) {
                        compromise_violation = sc.worst_violation;
                        compromise = p;
                    }
                }
            }
        }
        if (best) {
            result.thermal = best;
            result.thermal_objective = best_objective;
        } else {
            score_thermal(anchors, compromise, grid.window_sample, &violated);
        }
    }

    if (!violated.empty()) {
        throw CalibrationInfeasible(violated);
    }
    return result;
}

LocomotionParams apply(const CalibrationResult& result, Environment env) {
    auto p = default_params(env);
    // Phantom and in-vivo tissue share the wet-gelatin grip.
    const Environment source = env == Environment::Dry ? Environment::Dry : Environment::Wet;
    const auto it = result.friction.find(source);
    if (it != result.friction.end()) {
        p.friction_coefficient = it->second.friction_coefficient;
        p.adhesion_stress = it->second.adhesion_stress;
    }
    return p;
}

std::string to_json(const CalibrationResult& result) {
    json j = json::object();
    json loco = json::object();
    for (const auto& [env, fit] : result.friction) {
        loco[std::string(to_string(env))] = {{"friction_coefficient", fit.friction_coefficient},
                                             {"adhesion_stress_pa", fit.adhesion_stress},
                                             {"min_margin_tan", fit.margin}};
    }
    j["locomotion"] = loco;
    if (result.thermal) {
        j["thermal"] = {{"capacitance_j_per_c", result.thermal->capacitance},
                        {"conductance_w_per_c", result.thermal->conductance},
                        {"absorbed_fraction", result.thermal->absorbed_fraction},
                        {"objective_c", result.thermal_objective}};
    }
    return j.dump(2) + "\n";
}

}  // namespace mutum::calibration
