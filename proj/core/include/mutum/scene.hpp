#pragma once

#include "mutum/magnetics.hpp"
#include "mutum/params.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mutum::scene {

enum class SceneKind { FlatDry, FlatWet, Incline, Phantom, InVivo };
enum class Fluid { Air, DIWater, Saline };

std::string_view to_string(SceneKind kind);
std::string_view to_string(Fluid fluid);
SceneKind parse_scene_kind(std::string_view text);
Fluid parse_fluid(std::string_view text);

/// Polyline centreline with a radius per vertex, parameterised by arc length.
class LumenProfile {
public:
    LumenProfile() = default;
    /// Throws ValidationError on fewer than two points, mismatched radii,
    /// non-positive radii or repeated consecutive points.
    LumenProfile(std::vector<Vec3> centerline, std::vector<double> radius);

    const std::vector<Vec3>& centerline() const { return centerline_; }
    const std::vector<double>& radius() const { return radius_; }
    const std::vector<double>& arc_lengths() const { return arc_; }
    double length() const { return arc_.empty() ? 0.0 : arc_.back(); }

    Vec3 point_at(double s) const;
    Vec3 tangent_at(double s) const;
    double radius_at(double s) const;

    struct Projection {
        double arc_length;
        Vec3 point;
    };
    /// Nearest centreline point. Throws OffCenterlineEnds when the point lies
    /// beyond either end of the centreline.
    Projection project(const Vec3& p) const;

    bool operator==(const LumenProfile& o) const {
        return centerline_ == o.centerline_ && radius_ == o.radius_;
    }

private:
    std::size_t segment_for(double s) const;

    std::vector<Vec3> centerline_;
    std::vector<double> radius_;
    std::vector<double> arc_;
};

/// Plane the robot tumbles on. `uphill` is the in-plane unit direction of
/// steepest ascent (any in-plane direction when level).
struct Plane {
    Vec3 origin = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 uphill = Vec3::UnitX();
};

struct InclineSurface {
    Plane plane;
    double angle_rad = 0.0;
    LocomotionParams params;
};

struct Scene {
    static constexpr double kMaxInclineDeg = 60.0;

    std::string name;
    SceneKind kind = SceneKind::FlatDry;
    double incline_angle_deg = 0.0;
    std::optional<LumenProfile> lumen;
    double temperature_ambient_c = 20.0;
    LocomotionParams locomotion_params;
    Fluid fluid = Fluid::Air;

    double incline_angle() const;
    Environment environment() const;
    bool has_lumen() const { return kind == SceneKind::Phantom || kind == SceneKind::InVivo; }
    /// Substrate plane for flat and incline scenes.
    Plane plane() const;
    /// Throws ValidationError naming the violated invariant.
    void validate() const;

    bool operator==(const Scene&) const = default;
};

struct LumenContact {
    Vec3 position;
    Vec3 normal;  // unit, pointing from the wall into the lumen
    double arc_length;
};

/// Settles a point onto the lumen floor under gravity: the returned position
/// is the wall contact at the same cross-section, lifted by `clearance` along
/// the inward normal. Idempotent.
LumenContact constrain_to_lumen(const Vec3& position, const LumenProfile& lumen,
                                double clearance = 0.0);

/// Incline plane rising along +x with the gelatin-surface parameters for
/// the given medium.
InclineSurface incline_surface(double angle_deg, Fluid fluid = Fluid::DIWater);

/// Parse a scene document; throws ParseError (with line/column) or
/// ValidationError.
Scene parse_scene(std::string_view text, std::string name = {});
Scene load_scene(const std::filesystem::path& path);
/// Serialises every field, defaults included.
std::string serialize(const Scene& scene);

/// Directory holding the bundled scene fixtures (compile-time default,
/// overridable with MUTUM_SCENE_DIR).
std::filesystem::path default_scene_dir();
/// Scene names (file stems) available in `dir`, sorted.
std::vector<std::string> list_scenes(const std::filesystem::path& dir);

}  // namespace mutum::scene
