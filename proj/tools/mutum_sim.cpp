// mutum-sim: experiment runners, calibration and the teleoperation server.

#include "mutum/calibration.hpp"
#include "mutum/errors.hpp"
#include "mutum/harness.hpp"
#include "mutum/server.hpp"
#include "mutum/teleop.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) {
    g_interrupted = true;
}

struct RunnerOptions {
    std::string scene;
    std::string design = "tp";
    std::string payload = "empty";
    std::vector<double> frequencies{2.0, 3.0, 5.0};
    std::uint64_t seed = 0;
    std::string out;
    double field = 0.020;
    bool no_perturbations = false;
    std::string anchors;
};

std::vector<mutum::robot::DesignKind> parse_designs(const std::string& text) {
    using mutum::robot::DesignKind;
    if (text == "all") {
        return {DesignKind::TP, DesignKind::SP, DesignKind::EP};
    }
    return {mutum::robot::parse_design_kind(text)};
}

std::vector<mutum::harness::PayloadVariant> parse_payloads(const std::string& text) {
    using mutum::harness::PayloadVariant;
    if (text == "both") {
        return {PayloadVariant::Empty, PayloadVariant::Filled};
    }
    return {mutum::harness::parse_payload_variant(text)};
}

mutum::harness::ExperimentConfig make_config(mutum::harness::Experiment e, const RunnerOptions& o) {
    mutum::harness::ExperimentConfig cfg;
    cfg.experiment = e;
    cfg.scene_path = o.scene;
    cfg.designs = parse_designs(o.design);
    cfg.payloads = parse_payloads(o.payload);
    cfg.frequencies = o.frequencies;
    cfg.seed = o.seed;
    cfg.output_dir = o.out;
    cfg.field = o.field;
    cfg.perturbations = !o.no_perturbations;
    cfg.validate();
    return cfg;
}

// Prints the primary CSV when no output directory is given.
void report(const mutum::harness::ExperimentConfig& cfg, const std::string& csv) {
    if (cfg.output_dir.empty()) {
        std::cout << csv;
    } else {
        std::cout << "wrote " << (cfg.output_dir / "config.json").string() << " and CSV outputs to "
                  << cfg.output_dir.string() << "\n";
    }
}

int run_experiment(mutum::harness::Experiment e, const RunnerOptions& o) {
    using namespace mutum::harness;
    const auto cfg = make_config(e, o);
    switch (e) {
        case Experiment::VelocitySweep: report(cfg, run_velocity_sweep(cfg).csv); break;
        case Experiment::InclineLadder: {
            if (!o.anchors.empty()) {
                const auto result = mutum::calibration::calibrate(mutum::calibration::load_anchors(o.anchors));
                std::map<mutum::Environment, mutum::LocomotionParams> params;
                for (const auto& [env, fit] : result.friction) {
                    params[env] = mutum::calibration::apply(result, env);
                }
                report(cfg, run_incline_ladder(cfg, params).csv);
            } else {
                report(cfg, run_incline_ladder(cfg).csv);
            }
            break;
        }
        case Experiment::MeltCurveSweep: report(cfg, run_melt_curve_sweep(cfg).csv); break;
        case Experiment::ReleaseSchedule: report(cfg, run_release_schedule(cfg).csv); break;
        case Experiment::FusPhantom: {
            const auto res = run_fus_phantom(cfg);
            report(cfg, res.csv);
            if (!cfg.output_dir.empty()) std::cout << res.summary_json;
            break;
        }
        case Experiment::DesignComparison: report(cfg, run_design_comparison(cfg).csv); break;
    }
    return kExitOk;
}

int run_calibrate(const std::string& anchors_path, const std::string& out) {
    const auto anchors = anchors_path.empty() ? mutum::calibration::default_anchors()
                                              : mutum::calibration::load_anchors(anchors_path);
    const auto result = mutum::calibration::calibrate(anchors);
    const auto text = mutum::calibration::to_json(result);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) throw mutum::IoError("cannot write " + out);
        f << text;
        std::cout << "wrote " << out << "\n";
    }
    return kExitOk;
}

mutum::scene::Scene scene_by_name_or_path(const std::string& s, const std::string& scene_dir) {
    std::filesystem::path p(s);
    if (p.has_extension() || p.has_parent_path()) {
        return mutum::scene::load_scene(p);
    }
    const auto dir = scene_dir.empty() ? mutum::scene::default_scene_dir() : std::filesystem::path(scene_dir);
    return mutum::scene::load_scene(dir / (s + ".json"));
}

int run_serve(unsigned short port, const std::string& address, const std::string& scene,
              const std::string& design, std::uint64_t seed, const std::string& record,
              const std::string& scene_dir) {
    mutum::teleop::ServerConfig cfg;
    cfg.address = address;
    cfg.port = port;
    cfg.session.scene = scene_by_name_or_path(scene, scene_dir);
    cfg.session.design = mutum::robot::parse_design_kind(design);
    cfg.session.seed = seed;
    cfg.session.scene_dir = scene_dir;
    cfg.record_path = record;
    mutum::teleop::TeleopServer server(cfg);
    server.start();
    std::cout << "serving ws://" << address << ":" << server.port() << "/session (scene "
              << cfg.session.scene.name << ")" << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
    if (!record.empty()) {
        std::cout << "session log written to " << record << "\n";
    }
    return kExitOk;
}

int run_replay(const std::string& log) {
    const auto r = mutum::teleop::replay_file(log);
    std::cout << "ticks " << r.ticks << "\ncommands " << r.commands << "\nsnapshots "
              << r.snapshots.size() << "\nmismatches " << r.mismatches << "\nfinal_pose "
              << (r.final_recorded ? (r.final_pose_identical ? "identical" : "DIFFERENT") : "not recorded")
              << "\n";
    return (r.mismatches == 0 && r.final_pose_identical) ? kExitOk : kExitFailure;
}

std::string describe(mutum::harness::Experiment e) {
    using mutum::harness::Experiment;
    switch (e) {
        case Experiment::VelocitySweep: return "Nine-trial velocity panels per design, payload and frequency";
        case Experiment::InclineLadder: return "5 degree incline ladder per design and medium";
        case Experiment::MeltCurveSweep: return "Wax melt onset over the oil mass fraction";
        case Experiment::ReleaseSchedule: return "Stepped bath heating with periodic supernatant sampling";
        case Experiment::FusPhantom: return "Focused-ultrasound heating in the phantom with three replicates";
        case Experiment::DesignComparison: return "Released fraction per port design after a 42 C hold";
    }
    return {};
}

void add_runner_options(CLI::App* sub, RunnerOptions& o) {
    sub->add_option("--scene", o.scene, "Scene JSON file (default depends on experiment)");
    sub->add_option("--design", o.design, "tp|sp|ep|all")->capture_default_str();
    sub->add_option("--payload", o.payload, "empty|filled|both")->capture_default_str();
    sub->add_option("--freq", o.frequencies, "Comma-separated subset of 2,3,4,5 Hz")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Run seed")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory for CSV and config.json");
    sub->add_option("--field", o.field, "Field magnitude at the workspace, T")->capture_default_str();
    sub->add_flag("--no-perturbations", o.no_perturbations, "Disable per-pivot slip noise");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tumbling magnetic microrobot simulator"};
    app.require_subcommand(1);

    RunnerOptions runner;
    std::vector<std::pair<CLI::App*, mutum::harness::Experiment>> experiments;
    for (const auto e : {mutum::harness::Experiment::VelocitySweep, mutum::harness::Experiment::InclineLadder,
                         mutum::harness::Experiment::MeltCurveSweep,
                         mutum::harness::Experiment::ReleaseSchedule,
                         mutum::harness::Experiment::FusPhantom,
                         mutum::harness::Experiment::DesignComparison}) {
        auto* sub = app.add_subcommand(std::string(mutum::harness::to_string(e)), describe(e));
        add_runner_options(sub, runner);
        if (e == mutum::harness::Experiment::InclineLadder) {
            sub->add_option("--anchors", runner.anchors, "Calibrate against this anchor file first");
        }
        experiments.emplace_back(sub, e);
    }

    std::string anchors;
    std::string calib_out;
    auto* calibrate = app.add_subcommand("calibrate", "Fit friction/adhesion and thermal parameters");
    calibrate->add_option("--anchors", anchors, "Anchor JSON (default: built-in anchors)");
    calibrate->add_option("--out", calib_out, "Write the result JSON here");

    unsigned short port = 8765;
    std::string address = "127.0.0.1";
    std::string serve_scene = "phantom_rat";
    std::string serve_design = "tp";
    std::string record;
    std::string scene_dir;
    std::uint64_t serve_seed = 0;
    auto* serve = app.add_subcommand("serve", "Run the teleoperation server");
    serve->add_option("--port", port, "TCP port (0 picks one)")->capture_default_str();
    serve->add_option("--address", address, "Listen address")->capture_default_str();
    serve->add_option("--scene", serve_scene, "Scene name or JSON path")->capture_default_str();
    serve->add_option("--design", serve_design, "tp|sp|ep")->capture_default_str();
    serve->add_option("--seed", serve_seed, "Slip noise seed")->capture_default_str();
    serve->add_option("--record", record, "Write a replayable session log");
    serve->add_option("--scene-dir", scene_dir, "Directory searched by load_scene");

    std::string log;
    auto* replay = app.add_subcommand("replay", "Re-run a recorded session and compare");
    replay->add_option("log", log, "Session log")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        for (const auto& [sub, e] : experiments) {
            if (sub->parsed()) return run_experiment(e, runner);
        }
        if (calibrate->parsed()) return run_calibrate(anchors, calib_out);
        if (serve->parsed()) return run_serve(port, address, serve_scene, serve_design, serve_seed, record, scene_dir);
        if (replay->parsed()) return run_replay(log);
    } catch (const mutum::CalibrationInfeasible& e) {
        std::cerr << e.what() << "\n";
        return kExitInfeasible;
    } catch (const mutum::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const mutum::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const mutum::ReplayError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const mutum::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
