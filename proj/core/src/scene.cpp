#include "mutum/scene.hpp"

#include "mutum/errors.hpp"
#include "mutum/microrobot.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef MUTUM_DEFAULT_SCENE_DIR
#define MUTUM_DEFAULT_SCENE_DIR "scenes"
#endif

namespace mutum::scene {

using nlohmann::json;

std::string_view to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::FlatDry: return "flat_dry";
        case SceneKind::FlatWet: return "flat_wet";
        case SceneKind::Incline: return "incline";
        case SceneKind::Phantom: return "phantom";
        case SceneKind::InVivo: return "invivo";
    }
    return "flat_dry";
}

std::string_view to_string(Fluid fluid) {
    switch (fluid) {
        case Fluid::Air: return "air";
        case Fluid::DIWater: return "di_water";
        case Fluid::Saline: return "saline";
    }
    return "air";
}

SceneKind parse_scene_kind(std::string_view text) {
    for (auto k : {SceneKind::FlatDry, SceneKind::FlatWet, SceneKind::Incline, SceneKind::Phantom,
                   SceneKind::InVivo}) {
        if (to_string(k) == text) return k;
    }
    throw ValidationError("kind in {flat_dry, flat_wet, incline, phantom, invivo}",
                          "got '" + std::string(text) + "'");
}

Fluid parse_fluid(std::string_view text) {
    for (auto f : {Fluid::Air, Fluid::DIWater, Fluid::Saline}) {
        if (to_string(f) == text) return f;
    }
    throw ValidationError("fluid in {air, di_water, saline}", "got '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// LumenProfile

LumenProfile::LumenProfile(std::vector<Vec3> centerline, std::vector<double> radius)
    : centerline_(std::move(centerline)), radius_(std::move(radius)) {
    if (centerline_.size() < 2) {
        throw ValidationError("lumen has >= 2 centerline points",
                              std::to_string(centerline_.size()) + " given");
    }
    if (radius_.size() != centerline_.size()) {
        throw ValidationError("one lumen radius per centerline point",
                              std::to_string(radius_.size()) + " radii for " +
                                  std::to_string(centerline_.size()) + " points");
    }
    arc_.resize(centerline_.size());
    arc_[0] = 0.0;
    for (std::size_t i = 1; i < centerline_.size(); ++i) {
        const double seg = (centerline_[i] - centerline_[i - 1]).norm();
        if (!(seg > 0.0)) {
            throw ValidationError("lumen arc length strictly increasing",
                                  "repeated centerline point at index " + std::to_string(i));
        }
        arc_[i] = arc_[i - 1] + seg;
    }
    for (std::size_t i = 0; i < radius_.size(); ++i) {
        if (!std::isfinite(radius_[i]) || !(radius_[i] > 0.0)) {
            throw ValidationError("lumen radius > 0", "radius[" + std::to_string(i) + "]");
        }
    }
}

std::size_t LumenProfile::segment_for(double s) const {
    const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
    const auto idx = static_cast<std::size_t>(std::distance(arc_.begin(), it));
    return std::clamp<std::size_t>(idx, 1, arc_.size() - 1) - 1;
}

Vec3 LumenProfile::point_at(double s) const {
    const std::size_t i = segment_for(s);
    const double u = (s - arc_[i]) / (arc_[i + 1] - arc_[i]);
    return centerline_[i] + u * (centerline_[i + 1] - centerline_[i]);
}

Vec3 LumenProfile::tangent_at(double s) const {
    const std::size_t i = segment_for(s);
    return (centerline_[i + 1] - centerline_[i]).normalized();
}

double LumenProfile::radius_at(double s) const {
    const std::size_t i = segment_for(s);
    const double u = std::clamp((s - arc_[i]) / (arc_[i + 1] - arc_[i]), 0.0, 1.0);
    return radius_[i] + u * (radius_[i + 1] - radius_[i]);
}

LumenProfile::Projection LumenProfile::project(const Vec3& p) const {
    constexpr double kEndSlack = 1e-12;
    double best_d2 = std::numeric_limits<double>::infinity();
    Projection best{0.0, centerline_.front()};
    double best_u = 0.0;
    std::size_t best_seg = 0;
    for (std::size_t i = 0; i + 1 < centerline_.size(); ++i) {
        const Vec3 a = centerline_[i];
        const Vec3 ab = centerline_[i + 1] - a;
        const double len2 = ab.squaredNorm();
        const double u_raw = (p - a).dot(ab) / len2;
        const double u = std::clamp(u_raw, 0.0, 1.0);
        const Vec3 q = a + u * ab;
        const double d2 = (p - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = {arc_[i] + u * (arc_[i + 1] - arc_[i]), q};
            best_u = u_raw;
            best_seg = i;
        }
    }
    const double seg_len = arc_[best_seg + 1] - arc_[best_seg];
    if ((best_seg == 0 && best_u * seg_len < -kEndSlack) ||
        (best_seg + 2 == centerline_.size() && (best_u - 1.0) * seg_len > kEndSlack)) {
        throw OffCenterlineEnds("point projects beyond the lumen centerline ends");
    }
    return best;
}

// ---------------------------------------------------------------------------
// Scene

double Scene::incline_angle() const {
    return incline_angle_deg * kPi / 180.0;
}

Environment Scene::environment() const {
    switch (kind) {
        case SceneKind::FlatDry: return Environment::Dry;
        case SceneKind::FlatWet: return Environment::Wet;
        case SceneKind::Incline: return fluid == Fluid::Air ? Environment::Dry : Environment::Wet;
        case SceneKind::Phantom: return Environment::Phantom;
        case SceneKind::InVivo: return Environment::InVivo;
    }
    return Environment::Dry;
}

Plane Scene::plane() const {
    if (kind == SceneKind::Incline) {
        return incline_surface(incline_angle_deg, fluid).plane;
    }
    return Plane{};
}

void Scene::validate() const {
    if (!(incline_angle_deg >= 0.0 && incline_angle_deg <= kMaxInclineDeg)) {
        throw ValidationError("incline_angle in [0, 60] deg", std::to_string(incline_angle_deg));
    }
    if (kind != SceneKind::Incline && incline_angle_deg != 0.0) {
        throw ValidationError("incline_angle only on incline scenes",
                              std::string(to_string(kind)) + " with nonzero angle");
    }
    if (has_lumen() && !lumen) {
        throw ValidationError("phantom/invivo scenes require a lumen", std::string(to_string(kind)));
    }
    if (!has_lumen() && lumen) {
        throw ValidationError("lumen only on phantom/invivo scenes", std::string(to_string(kind)));
    }
    if (lumen) {
        const double half_diag = robot::stock_design(robot::DesignKind::TP).half_diagonal();
        for (std::size_t i = 0; i < lumen->radius().size(); ++i) {
            if (!(lumen->radius()[i] > half_diag)) {
                throw ValidationError("lumen radius > robot half-diagonal",
                                      "radius[" + std::to_string(i) + "] = " +
                                          std::to_string(lumen->radius()[i]));
            }
        }
    }
    if (!std::isfinite(temperature_ambient_c)) {
        throw ValidationError("finite temperature_ambient_c", "non-finite");
    }
    locomotion_params.validate();
}

// ---------------------------------------------------------------------------
// Geometry

LumenContact constrain_to_lumen(const Vec3& position, const LumenProfile& lumen, double clearance) {
    const auto proj = lumen.project(position);
    const Vec3 tangent = lumen.tangent_at(proj.arc_length);
    Vec3 down = -Vec3::UnitZ();
    down -= down.dot(tangent) * tangent;
    if (down.norm() < 1e-9) {
        // Vertical lumen: settle toward whichever wall the point is nearest.
        down = position - proj.point;
        down -= down.dot(tangent) * tangent;
        if (down.norm() < 1e-12) {
            down = tangent.unitOrthogonal();
        }
    }
    down.normalize();
    const double r = lumen.radius_at(proj.arc_length);
    LumenContact out;
    out.normal = -down;
    out.position = proj.point + r * down + clearance * out.normal;
    out.arc_length = proj.arc_length;
    return out;
}

InclineSurface incline_surface(double angle_deg, Fluid fluid) {
    if (!(angle_deg >= 0.0 && angle_deg <= Scene::kMaxInclineDeg)) {
        throw ValidationError("incline_angle in [0, 60] deg", std::to_string(angle_deg));
    }
    const double a = angle_deg * kPi / 180.0;
    InclineSurface s;
    s.angle_rad = a;
    s.plane.origin = Vec3::Zero();
    s.plane.normal = Vec3(-std::sin(a), 0.0, std::cos(a));
    s.plane.uphill = Vec3(std::cos(a), 0.0, std::sin(a));
    s.params = default_params(fluid == Fluid::Air ? Environment::Dry : Environment::Wet);
    return s;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

double number_field(const json& obj, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        throw ValidationError(std::string(key) + " is a number", v.dump());
    }
    return v.get<double>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                         std::string_view where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("known keys in " + std::string(where), "unexpected key '" + key + "'");
        }
    }
}

Fluid default_fluid(SceneKind kind) {
    switch (kind) {
        case SceneKind::FlatDry: return Fluid::Air;
        case SceneKind::FlatWet: return Fluid::DIWater;
        case SceneKind::Incline: return Fluid::DIWater;
        case SceneKind::Phantom:
        case SceneKind::InVivo: return Fluid::Saline;
    }
    return Fluid::Air;
}

double default_ambient(SceneKind kind) {
    switch (kind) {
        case SceneKind::Phantom: return 36.0;
        case SceneKind::InVivo: return 37.0;
        default: return 20.0;
    }
}

std::string format_key(double f) {
    std::ostringstream os;
    os.precision(17);
    os << f;
    return os.str();
}

LocomotionParams parse_params(const json& j, LocomotionParams base) {
    if (!j.is_object()) {
        throw ValidationError("locomotion_params is an object", j.dump());
    }
    reject_unknown_keys(j, {"slip", "mu", "adhesion_pa", "slip_noise", "include_magnetic_force"},
                        "locomotion_params");
    if (j.contains("slip")) {
        const auto& slip = j.at("slip");
        if (!slip.is_object() || slip.empty()) {
            throw ValidationError("slip is a non-empty {freq_hz: value} object", slip.dump());
        }
        base.slip.clear();
        for (const auto& [k, v] : slip.items()) {
            char* end = nullptr;
            const double f = std::strtod(k.c_str(), &end);
            if (end == k.c_str() || *end != '\0') {
                throw ValidationError("slip keys are frequencies in Hz", "key '" + k + "'");
            }
            if (!v.is_number()) {
                throw ValidationError("slip values are numbers", v.dump());
            }
            base.slip[f] = v.get<double>();
        }
    }
    if (j.contains("mu")) base.friction_coefficient = number_field(j, "mu");
    if (j.contains("adhesion_pa")) base.adhesion_stress = number_field(j, "adhesion_pa");
    if (j.contains("slip_noise")) base.slip_noise = number_field(j, "slip_noise");
    if (j.contains("include_magnetic_force")) {
        base.include_magnetic_force = j.at("include_magnetic_force").get<bool>();
    }
    return base;
}

Scene from_json(const json& j, std::string name) {
    if (!j.is_object()) {
        throw ValidationError("scene is a JSON object", "top-level value is not an object");
    }
    reject_unknown_keys(j,
                        {"name", "kind", "incline_angle_deg", "lumen", "fluid",
                         "temperature_ambient_c", "locomotion_params"},
                        "scene");
    if (!j.contains("kind")) {
        throw ValidationError("scene has a kind", "missing 'kind'");
    }
    Scene s;
    s.name = j.contains("name") ? j.at("name").get<std::string>() : std::move(name);
    s.kind = parse_scene_kind(j.at("kind").get<std::string>());
    s.fluid = j.contains("fluid") ? parse_fluid(j.at("fluid").get<std::string>()) : default_fluid(s.kind);
    s.incline_angle_deg = j.contains("incline_angle_deg") ? number_field(j, "incline_angle_deg") : 0.0;
    s.temperature_ambient_c = j.contains("temperature_ambient_c")
                                  ? number_field(j, "temperature_ambient_c")
                                  : default_ambient(s.kind);
    if (j.contains("lumen")) {
        const auto& l = j.at("lumen");
        if (!l.is_object() || !l.contains("centerline") || !l.contains("radius")) {
            throw ValidationError("lumen has centerline and radius", l.dump());
        }
        reject_unknown_keys(l, {"centerline", "radius"}, "lumen");
        std::vector<Vec3> pts;
        for (const auto& p : l.at("centerline")) {
            if (!p.is_array() || p.size() != 3) {
                throw ValidationError("centerline points are [x, y, z]", p.dump());
            }
            pts.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
        std::vector<double> radii;
        const auto& r = l.at("radius");
        if (r.is_number()) {
            radii.assign(pts.size(), r.get<double>());
        } else {
            radii = r.get<std::vector<double>>();
        }
        s.lumen = LumenProfile(std::move(pts), std::move(radii));
    }
    const LocomotionParams defaults = default_params(s.environment());
    s.locomotion_params =
        j.contains("locomotion_params") ? parse_params(j.at("locomotion_params"), defaults) : defaults;
    s.validate();
    return s;
}

}  // namespace

Scene parse_scene(std::string_view text, std::string name) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ParseError("scene parse error at line " + std::to_string(line) + ", column " +
                             std::to_string(col) + ": " + e.what(),
                         line, col);
    }
    try {
        return from_json(j, std::move(name));
    } catch (const json::exception& e) {
        throw ValidationError("scene field types", e.what());
    }
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open scene file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str(), path.stem().string());
}

std::string serialize(const Scene& scene) {
    json j;
    j["name"] = scene.name;
    j["kind"] = std::string(to_string(scene.kind));
    j["incline_angle_deg"] = scene.incline_angle_deg;
    j["fluid"] = std::string(to_string(scene.fluid));
    j["temperature_ambient_c"] = scene.temperature_ambient_c;
    if (scene.lumen) {
        json pts = json::array();
        for (const auto& p : scene.lumen->centerline()) {
            pts.push_back({p.x(), p.y(), p.z()});
        }
        j["lumen"] = {{"centerline", pts}, {"radius", scene.lumen->radius()}};
    }
    json slip = json::object();
    for (const auto& [f, s] : scene.locomotion_params.slip) {
        slip[format_key(f)] = s;
    }
    j["locomotion_params"] = {
        {"slip", slip},
        {"mu", scene.locomotion_params.friction_coefficient},
        {"adhesion_pa", scene.locomotion_params.adhesion_stress},
        {"slip_noise", scene.locomotion_params.slip_noise},
        {"include_magnetic_force", scene.locomotion_params.include_magnetic_force},
    };
    return j.dump(2) + "\n";
}

std::filesystem::path default_scene_dir() {
    if (const char* env = std::getenv("MUTUM_SCENE_DIR"); env && *env) {
        return env;
    }
    return MUTUM_DEFAULT_SCENE_DIR;
}

std::vector<std::string> list_scenes(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            names.push_back(entry.path().stem().string());
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace mutum::scene
