#include "mutum/harness.hpp"

#include "mutum/csv.hpp"
#include "mutum/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace mutum::harness {

using nlohmann::ordered_json;

std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::VelocitySweep: return "velocity-sweep";
        case Experiment::InclineLadder: return "incline-ladder";
        case Experiment::MeltCurveSweep: return "melt-curve-sweep";
        case Experiment::ReleaseSchedule: return "release-schedule";
        case Experiment::FusPhantom: return "fus-phantom";
        case Experiment::DesignComparison: return "design-comparison";
    }
    return "unknown";
}

Experiment parse_experiment(std::string_view text) {
    for (const auto e : {Experiment::VelocitySweep, Experiment::InclineLadder,
                         Experiment::MeltCurveSweep, Experiment::ReleaseSchedule,
                         Experiment::FusPhantom, Experiment::DesignComparison}) {
        if (to_string(e) == text) {
            return e;
        }
    }
    throw ValidationError("known experiment name", std::string(text));
}

std::string_view to_string(PayloadVariant p) {
    return p == PayloadVariant::Empty ? "empty" : "filled";
}

PayloadVariant parse_payload_variant(std::string_view text) {
    if (text == "empty") return PayloadVariant::Empty;
    if (text == "filled") return PayloadVariant::Filled;
    throw ValidationError("payload is empty|filled", std::string(text));
}

robot::PayloadSpec make_payload(PayloadVariant variant, const robot::MicrorobotDesign& design) {
    return variant == PayloadVariant::Empty ? robot::empty_payload() : robot::filled_payload(design);
}

void ExperimentConfig::validate() const {
    if (designs.empty()) {
        throw ValidationError("at least one design", "designs empty");
    }
    if (payloads.empty()) {
        throw ValidationError("at least one payload variant", "payloads empty");
    }
    for (const double f : frequencies) {
        if (f != 2.0 && f != 3.0 && f != 4.0 && f != 5.0) {
            throw ValidationError("frequencies subset of {2,3,4,5} Hz", csv::format_double(f));
        }
    }
    if (!(field >= 0.010 && field <= 0.030)) {
        throw ValidationError("field magnitude in [10, 30] mT", csv::format_double(field));
    }
}

namespace {

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed " + path.string());
    }
}

ordered_json config_object(const ExperimentConfig& cfg) {
    ordered_json j;
    j["experiment"] = std::string(to_string(cfg.experiment));
    j["scene_path"] = cfg.scene_path.string();
    j["designs"] = ordered_json::array();
    for (const auto d : cfg.designs) j["designs"].push_back(std::string(robot::to_string(d)));
    j["payloads"] = ordered_json::array();
    for (const auto p : cfg.payloads) j["payloads"].push_back(std::string(to_string(p)));
    j["frequencies_hz"] = cfg.frequencies;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    j["field_t"] = cfg.field;
    j["perturbations"] = cfg.perturbations;
    return j;
}

void emit(const ExperimentConfig& cfg, ordered_json config, const std::vector<std::pair<std::string, std::string>>& files) {
    if (cfg.output_dir.empty()) {
        return;
    }
    write_file(cfg.output_dir, "config.json", config.dump(2) + "\n");
    for (const auto& [name, text] : files) {
        write_file(cfg.output_dir, name, text);
    }
}

ordered_json scene_object(const scene::Scene& sc) {
    return ordered_json::parse(scene::serialize(sc));
}

robot::MicrorobotDesign design_of(robot::DesignKind kind) {
    return robot::stock_design(kind);
}

// Uniform draw in [-1, 1] from an independent stream per (seed, index).
double jitter(std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 eng(locomotion::derive_seed(seed, index));
    return std::uniform_real_distribution<double>(-1.0, 1.0)(eng);
}

// Integer step counts keep event times exact on the dt grid.
long steps_for(double duration, double dt) {
    return std::lround(duration / dt);
}

// Time of step `i`; divides when 1/dt is integral so 184 * 0.1 reads 18.4.
double step_time(long i, double dt) {
    const double inv = std::round(1.0 / dt);
    return std::abs(1.0 / dt - inv) < 1e-9 ? static_cast<double>(i) / inv : static_cast<double>(i) * dt;
}

}  // namespace

scene::Scene resolve_scene(const ExperimentConfig& cfg) {
    if (!cfg.scene_path.empty()) {
        return scene::load_scene(cfg.scene_path);
    }
    const auto dir = scene::default_scene_dir();
    switch (cfg.experiment) {
        case Experiment::FusPhantom: return scene::load_scene(dir / "phantom_rat.json");
        default: return scene::load_scene(dir / "flat_dry.json");
    }
}

std::string config_json(const ExperimentConfig& cfg) {
    return config_object(cfg).dump(2) + "\n";
}

VelocitySweepResult run_velocity_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sc = resolve_scene(cfg);
    auto params = sc.locomotion_params;
    if (!cfg.perturbations) {
        params.slip_noise = 0.0;
    }
    scene::Scene run_scene = sc;
    run_scene.locomotion_params = params;

    VelocitySweepResult res;
    std::ostringstream main_csv;
    std::ostringstream trials_csv;
    csv::Writer main(main_csv);
    csv::Writer trials(trials_csv);
    main.row({"env", "scene", "design", "payload", "freq_hz", "v_mean", "v_min", "v_max"});
    trials.row({"env", "scene", "design", "payload", "freq_hz", "robot", "trial", "v_avg"});

    locomotion::PanelOptions opts;
    opts.field = cfg.field;
    for (const auto kind : cfg.designs) {
        for (const auto pv : cfg.payloads) {
            const auto design = design_of(kind);
            const locomotion::Robot robot{design, make_payload(pv, design)};
            for (const double f : cfg.frequencies) {
                // Every cell sees the same noise stream so differences between
                // cells are not sampling artefacts.
                const auto panel = locomotion::nine_panel_velocity(robot, run_scene, f, cfg.seed, opts);
                const std::string env(to_string(sc.environment()));
                const std::string design_name(robot::to_string(kind));
                const std::string payload_name(to_string(pv));
                main.row({env, sc.name, design_name, payload_name, f, panel.mean, panel.min, panel.max});
                for (std::size_t i = 0; i < panel.trials.size(); ++i) {
                    trials.row({env, sc.name, design_name, payload_name, f,
                                static_cast<std::int64_t>(i / 3), static_cast<std::int64_t>(i % 3),
                                panel.trials[i]});
                }
                res.rows.push_back({sc.name, sc.environment(), kind, pv, panel});
            }
        }
    }
    res.csv = main_csv.str();
    res.trials_csv = trials_csv.str();

    auto config = config_object(cfg);
    config["scene"] = scene_object(run_scene);
    config["panel"] = {{"duration_s", opts.duration}, {"dt_s", opts.dt}, {"robots", 3}, {"trials", 3}};
    emit(cfg, config, {{"velocity_sweep.csv", res.csv}, {"velocity_trials.csv", res.trials_csv}});
    return res;
}

InclineLadderResult run_incline_ladder(const ExperimentConfig& cfg) {
    std::map<Environment, LocomotionParams> params;
    if (!cfg.scene_path.empty()) {
        const auto sc = scene::load_scene(cfg.scene_path);
        params[sc.environment()] = sc.locomotion_params;
    } else {
        params[Environment::Dry] = default_params(Environment::Dry);
        params[Environment::Wet] = default_params(Environment::Wet);
    }
    return run_incline_ladder(cfg, params);
}

InclineLadderResult run_incline_ladder(const ExperimentConfig& cfg,
                                       const std::map<Environment, LocomotionParams>& params) {
    cfg.validate();
    InclineLadderResult res;
    std::ostringstream main_csv;
    std::ostringstream rungs_csv;
    csv::Writer main(main_csv);
    csv::Writer rungs(rungs_csv);
    main.row({"design", "env", "payload", "theta_max_deg"});
    rungs.row({"design", "env", "payload", "angle_deg", "feasible", "completed", "climbed_m"});

    ordered_json used = ordered_json::object();
    for (const auto kind : cfg.designs) {
        for (const auto& [env, p] : params) {
            for (const auto pv : cfg.payloads) {
                const auto design = design_of(kind);
                const locomotion::Robot robot{design, make_payload(pv, design)};
                auto run_params = p;
                if (!cfg.perturbations) {
                    run_params.slip_noise = 0.0;
                }
                const auto fluid = env == Environment::Dry ? scene::Fluid::Air : scene::Fluid::DIWater;
                const auto ladder = locomotion::incline_ladder(robot, run_params, 5.0, fluid);
                const std::string dn(robot::to_string(kind));
                const std::string en(to_string(env));
                const std::string pn(to_string(pv));
                main.row({dn, en, pn, ladder.theta_max_deg});
                for (const auto& r : ladder.rungs) {
                    rungs.row({dn, en, pn, r.angle_deg, static_cast<std::int64_t>(r.feasible),
                               static_cast<std::int64_t>(r.completed), r.climbed});
                }
                res.rows.push_back({kind, env, pv, ladder});
            }
        }
    }
    for (const auto& [env, p] : params) {
        used[std::string(to_string(env))] = {{"friction_coefficient", p.friction_coefficient},
                                             {"adhesion_stress_pa", p.adhesion_stress},
                                             {"slip_noise", cfg.perturbations ? p.slip_noise : 0.0}};
    }
    res.csv = main_csv.str();
    res.rungs_csv = rungs_csv.str();
    auto config = config_object(cfg);
    config["ladder"] = {{"frequency_hz", 5.0}, {"step_deg", 5.0}, {"max_deg", 60.0}};
    config["params"] = used;
    emit(cfg, config, {{"incline_ladder.csv", res.csv}, {"incline_rungs.csv", res.rungs_csv}});
    return res;
}

MeltCurveSweepResult run_melt_curve_sweep(const ExperimentConfig& cfg, double w_step) {
    if (!(w_step > 0.0)) {
        throw ValidationError("w_step > 0", csv::format_double(w_step));
    }
    const auto curve = thermics::default_melt_curve();
    MeltCurveSweepResult res;
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"w", "onset_c", "final_c"});
    const int n = static_cast<int>(std::floor((curve.w_max() - curve.w_min()) / w_step + 1e-9));
    for (int i = 0; i <= n; ++i) {
        const double x = std::min(curve.w_min() + step_time(i, w_step), curve.w_max());
        const thermics::MeltPoint p{x, curve.onset(x), curve.final_melt(x)};
        res.rows.push_back(p);
        w.row({p.w, p.onset_c, p.final_c});
    }
    res.csv = out.str();
    auto config = config_object(cfg);
    config["w_step"] = w_step;
    ordered_json knots = ordered_json::array();
    for (const auto& k : curve.points()) {
        knots.push_back({{"w", k.w}, {"onset_c", k.onset_c}, {"final_c", k.final_c}});
    }
    config["melt_curve"] = knots;
    emit(cfg, config, {{"melt_curve.csv", res.csv}});
    return res;
}

void ReleaseScheduleSpec::validate() const {
    if (segments.empty()) {
        throw ValidationError("release schedule has segments", "empty");
    }
    double prev = start_c;
    for (const auto& s : segments) {
        if (s.target_c < prev) {
            throw ValidationError("schedule temperatures non-decreasing",
                                  csv::format_double(s.target_c));
        }
        if (!(s.hold_s >= 0.0 && s.sample_interval_s > 0.0)) {
            throw ValidationError("hold >= 0 and sample interval > 0", csv::format_double(s.hold_s));
        }
        prev = s.target_c;
    }
    if (!(ramp_rate_c_per_s > 0.0 && dt > 0.0)) {
        throw ValidationError("ramp rate > 0 and dt > 0", csv::format_double(ramp_rate_c_per_s));
    }
    if (!(max_release_fraction >= 0.0 && max_release_fraction <= 1.0)) {
        throw ValidationError("0 <= max_release_fraction <= 1", csv::format_double(max_release_fraction));
    }
}

ReleaseScheduleSpec default_release_schedule() {
    ReleaseScheduleSpec s;
    s.segments = {{36.0, 1200.0, 300.0},
                  {38.0, 300.0, 300.0},
                  {40.0, 300.0, 300.0},
                  {42.0, 300.0, 300.0},
                  {44.0, 300.0, 300.0}};
    return s;
}

namespace {

ordered_json schedule_object(const ReleaseScheduleSpec& spec) {
    ordered_json seg = ordered_json::array();
    for (const auto& s : spec.segments) {
        seg.push_back({{"target_c", s.target_c}, {"hold_s", s.hold_s},
                       {"sample_interval_s", s.sample_interval_s}});
    }
    return {{"start_c", spec.start_c},
            {"ramp_rate_c_per_s", spec.ramp_rate_c_per_s},
            {"dt_s", spec.dt},
            {"oil_mass_fraction", spec.oil_mass_fraction},
            {"max_release_fraction", spec.max_release_fraction},
            {"segments", seg}};
}

}  // namespace

ReleaseScheduleResult run_release_schedule(const ExperimentConfig& cfg,
                                           const ReleaseScheduleSpec& spec) {
    cfg.validate();
    spec.validate();
    const auto kind = cfg.designs.front();
    const auto design = design_of(kind);
    auto payload = robot::filled_payload(design);
    payload.max_release_fraction = spec.max_release_fraction;
    const auto curve = thermics::default_melt_curve();
    auto state = thermics::make_payload_state(design, payload,
                                              thermics::make_wax_cap(curve, spec.oil_mass_fraction));

    ReleaseScheduleResult res;
    res.design = kind;
    res.loaded_mass = state.loaded_mass;

    double bath = spec.start_c;
    long tick = 0;
    auto advance = [&](double next_bath) {
        bath = next_bath;
        ++tick;
        state.cap = thermics::cap_update(state.cap, bath, spec.dt);
        state = thermics::release_step(state, state.cap.breached(), spec.dt);
        if (state.breach_time && !res.breach_time) {
            res.breach_time = state.breach_time;
            res.breach_temperature_c = bath;
        }
    };
    auto sample = [&] {
        const double m = thermics::sample_supernatant(state);
        res.samples.push_back({step_time(tick, spec.dt), bath, m, state.released_fraction()});
    };

    for (const auto& seg : spec.segments) {
        const double from = bath;
        const long ramp = steps_for((seg.target_c - from) / spec.ramp_rate_c_per_s, spec.dt);
        for (long i = 1; i <= ramp; ++i) {
            advance(i == ramp ? seg.target_c : from + (seg.target_c - from) * i / ramp);
        }
        const long hold = steps_for(seg.hold_s, spec.dt);
        const long every = std::max(1L, steps_for(seg.sample_interval_s, spec.dt));
        for (long i = 0; i <= hold; ++i) {
            if (i > 0) {
                advance(seg.target_c);
            }
            if (i % every == 0 && tick > 0) {
                sample();
            }
        }
    }
    res.retained_mass = state.retained_mass();

    std::ostringstream out;
    csv::Writer w(out);
    w.row({"t", "T", "sample_mass", "cumulative_fraction"});
    for (const auto& s : res.samples) {
        w.row({s.t, s.bath_c, s.sample_mass, s.cumulative_fraction});
    }
    res.csv = out.str();

    auto config = config_object(cfg);
    config["schedule"] = schedule_object(spec);
    config["cap"] = {{"onset_c", state.cap.onset_c}, {"decay_time_s", state.cap.decay_time},
                     {"breach_threshold", state.cap.breach_threshold}};
    config["payload"] = {{"concentration_kg_per_m3", payload.concentration},
                         {"loaded_volume_m3", payload.loaded_volume},
                         {"rate_constant_per_s", state.rate_constant}};
    ordered_json summary = {{"loaded_mass_kg", res.loaded_mass},
                            {"retained_mass_kg", res.retained_mass},
                            {"terminal_fraction", state.released_fraction()}};
    if (res.breach_time) {
        summary["breach_time_s"] = *res.breach_time;
        summary["breach_temperature_c"] = *res.breach_temperature_c;
    }
    emit(cfg, config, {{"release_schedule.csv", res.csv}, {"summary.json", summary.dump(2) + "\n"}});
    return res;
}

void FusPhantomSpec::validate() const {
    fus.validate();
    if (!(dt > 0.0 && duration_s > 0.0 && log_interval_s >= dt)) {
        throw ValidationError("0 < dt <= log interval, duration > 0", csv::format_double(dt));
    }
    if (onset_offsets_c.empty()) {
        throw ValidationError("at least one replicate", "onset_offsets_c empty");
    }
    if (!(decay_jitter >= 0.0 && decay_jitter < 1.0)) {
        throw ValidationError("0 <= decay_jitter < 1", csv::format_double(decay_jitter));
    }
}

FusPhantomResult run_fus_phantom(const ExperimentConfig& cfg, const FusPhantomSpec& spec) {
    cfg.validate();
    spec.validate();
    const auto sc = resolve_scene(cfg);
    const auto tp = thermics::default_thermal_params();
    auto fus = spec.fus;
    fus.absorbed_fraction = tp.absorbed_fraction;

    thermics::ThermalState heat;
    heat.ambient_c = sc.temperature_ambient_c;
    heat.temperature_c = sc.temperature_ambient_c;
    heat.capacitance = tp.capacitance;
    heat.conductance = tp.conductance;
    heat.validate();

    const auto kind = cfg.designs.front();
    const auto design = design_of(kind);
    const auto payload = robot::filled_payload(design);
    const auto curve = thermics::default_melt_curve();

    FusPhantomResult res;
    std::vector<thermics::PayloadState> payloads;
    for (std::size_t r = 0; r < spec.onset_offsets_c.size(); ++r) {
        auto cap = thermics::make_wax_cap(curve, spec.oil_mass_fraction, spec.onset_offsets_c[r]);
        cap.decay_time *= 1.0 + spec.decay_jitter * jitter(cfg.seed, r);
        payloads.push_back(thermics::make_payload_state(design, payload, cap));
        res.replicates.push_back({cap.onset_c, cap.decay_time, std::nullopt, std::nullopt, 0.0});
    }

    std::ostringstream out;
    csv::Writer w(out);
    std::vector<csv::Cell> header{"t", "T"};
    for (std::size_t r = 0; r < payloads.size(); ++r) {
        header.emplace_back("released_r" + std::to_string(r));
    }
    w.row(header);
    auto log_row = [&](double t) {
        std::vector<csv::Cell> row{t, heat.temperature_c};
        for (const auto& p : payloads) row.emplace_back(p.released_fraction());
        w.row(row);
        res.times.push_back(t);
        res.temperatures.push_back(heat.temperature_c);
        if (!res.time_near_42 && std::abs(heat.temperature_c - 42.0) <= 0.5) {
            res.time_near_42 = t;
        }
        if (t >= 180.0 && t <= 240.0) {
            res.deviation_from_42_late = std::min(res.deviation_from_42_late,
                                                  std::abs(heat.temperature_c - 42.0));
        }
    };

    const long steps = steps_for(spec.duration_s, spec.dt);
    const long log_every = std::max(1L, steps_for(spec.log_interval_s, spec.dt));
    const long at_90 = steps_for(90.0, spec.dt);
    res.peak_temperature_c = heat.temperature_c;
    log_row(0.0);
    for (long i = 0; i < steps; ++i) {
        const double t = step_time(i, spec.dt);
        heat = thermics::heat_step(heat, fus, t, spec.dt);
        const double now = step_time(i + 1, spec.dt);
        for (std::size_t r = 0; r < payloads.size(); ++r) {
            auto& p = payloads[r];
            p.cap = thermics::cap_update(p.cap, heat.temperature_c, spec.dt);
            p = thermics::release_step(p, p.cap.breached(), spec.dt);
            if (p.breach_time && !res.replicates[r].release_time) {
                res.replicates[r].release_time = now;
                res.replicates[r].release_temperature_c = heat.temperature_c;
            }
        }
        res.peak_temperature_c = std::max(res.peak_temperature_c, heat.temperature_c);
        if (i + 1 == at_90) {
            res.temperature_at_90s = heat.temperature_c;
        }
        if ((i + 1) % log_every == 0) {
            log_row(now);
        }
    }
    for (std::size_t r = 0; r < payloads.size(); ++r) {
        res.replicates[r].final_fraction = payloads[r].released_fraction();
    }
    res.csv = out.str();

    ordered_json reps = ordered_json::array();
    for (const auto& r : res.replicates) {
        ordered_json o{{"onset_c", r.onset_c}, {"decay_time_s", r.decay_time}};
        o["initial_release_time_s"] = r.release_time ? ordered_json(*r.release_time) : ordered_json();
        o["initial_release_temperature_c"] =
            r.release_temperature_c ? ordered_json(*r.release_temperature_c) : ordered_json();
        o["final_fraction"] = r.final_fraction;
        reps.push_back(o);
    }
    ordered_json summary{{"temperature_at_90s_c", res.temperature_at_90s},
                         {"peak_temperature_c", res.peak_temperature_c},
                         {"final_temperature_c", res.temperatures.back()}};
    summary["first_time_within_42_half_c_s"] =
        res.time_near_42 ? ordered_json(*res.time_near_42) : ordered_json();
    summary["min_deviation_from_42_c_180_240s"] = res.deviation_from_42_late;
    summary["replicates"] = reps;
    res.summary_json = summary.dump(2) + "\n";

    auto config = config_object(cfg);
    config["scene"] = scene_object(sc);
    config["fus"] = {{"electrical_power_w", fus.electrical_power}, {"frequency_hz", fus.frequency},
                     {"burst_length_s", fus.burst_length}, {"period_s", fus.period},
                     {"duration_s", fus.duration}, {"absorbed_fraction", fus.absorbed_fraction}};
    config["thermal"] = {{"capacitance_j_per_c", tp.capacitance}, {"conductance_w_per_c", tp.conductance}};
    config["run"] = {{"duration_s", spec.duration_s}, {"dt_s", spec.dt},
                     {"log_interval_s", spec.log_interval_s}, {"oil_mass_fraction", spec.oil_mass_fraction},
                     {"onset_offsets_c", spec.onset_offsets_c}, {"decay_jitter", spec.decay_jitter}};
    emit(cfg, config, {{"fus_phantom.csv", res.csv}, {"summary.json", res.summary_json}});
    return res;
}

DesignComparisonResult run_design_comparison(const ExperimentConfig& cfg,
                                             const DesignComparisonSpec& spec) {
    cfg.validate();
    if (!(spec.dt > 0.0 && spec.base_s >= 0.0 && spec.hot_s >= 0.0)) {
        throw ValidationError("dt > 0 and non-negative phase durations", csv::format_double(spec.dt));
    }
    const auto curve = thermics::default_melt_curve();
    DesignComparisonResult res;
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"design", "released_fraction", "max_release_fraction"});
    for (const auto kind : cfg.designs) {
        const auto design = design_of(kind);
        const auto payload = robot::filled_payload(design);
        auto state = thermics::make_payload_state(design, payload,
                                                  thermics::make_wax_cap(curve, spec.oil_mass_fraction));
        const long base = steps_for(spec.base_s, spec.dt);
        const long hot = steps_for(spec.hot_s, spec.dt);
        for (long i = 0; i < base + hot; ++i) {
            const double bath = i < base ? spec.base_c : spec.hot_c;
            state.cap = thermics::cap_update(state.cap, bath, spec.dt);
            state = thermics::release_step(state, state.cap.breached(), spec.dt);
        }
        res.rows.push_back({kind, state.released_fraction(), state.loaded_mass, state.released_mass,
                            state.retained_mass()});
        w.row({std::string(robot::to_string(kind)), state.released_fraction(),
               payload.max_release_fraction});
    }
    res.csv = out.str();
    auto config = config_object(cfg);
    config["profile"] = {{"base_c", spec.base_c}, {"base_s", spec.base_s}, {"hot_c", spec.hot_c},
                         {"hot_s", spec.hot_s}, {"dt_s", spec.dt},
                         {"oil_mass_fraction", spec.oil_mass_fraction}};
    emit(cfg, config, {{"design_comparison.csv", res.csv}});
    return res;
}

}  // namespace mutum::harness
