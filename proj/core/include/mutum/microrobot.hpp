#pragma once

#include "mutum/magnetics.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace mutum::robot {

enum class DesignKind { TP, SP, EP };

std::string_view to_string(DesignKind kind);
/// Accepts "tp"/"sp"/"ep" in either case; throws ValidationError otherwise.
DesignKind parse_design_kind(std::string_view text);

/// Chassis geometry. Tumbling is end-over-end about the width axis, so only
/// `length` and `height` enter the kinematics.
struct MicrorobotDesign {
    static constexpr double kStockLength = 3.0e-3;
    static constexpr double kStockWidth = 1.4e-3;
    static constexpr double kStockHeight = 1.4e-3;
    static constexpr double kStockInternalVolume = 5e-9;
    static constexpr double kStockCavityVolume = 3e-9;
    static constexpr double kDefaultBodyDensity = 1100.0;
    static constexpr double kDefaultMagnetDensity = 7500.0;

    DesignKind kind = DesignKind::TP;
    double length = kStockLength;
    double width = kStockWidth;
    double height = kStockHeight;
    int port_count = 2;
    double port_diameter = 750e-6;
    double internal_volume = kStockInternalVolume;
    double cavity_volume = kStockCavityVolume;
    magnetics::RobotMagnet magnet;
    double body_density = kDefaultBodyDensity;
    double magnet_density = kDefaultMagnetDensity;

    /// Throws ValidationError naming the violated invariant.
    void validate() const;

    double outer_volume() const { return length * width * height; }
    double shell_volume() const { return outer_volume() - internal_volume; }
    /// Thickness of a uniform wall enclosing `internal_volume`.
    double wall_thickness() const;
    double total_port_area() const;
    /// Nominal contact patch when lying on the long face.
    double contact_area() const { return length * width; }
    double half_diagonal() const;
};

/// Stock design for each port configuration.
MicrorobotDesign stock_design(DesignKind kind);

/// Terminal releasable fraction measured for each port configuration.
double default_max_release_fraction(DesignKind kind);

struct PayloadSpec {
    std::string solution_name = "BSA";
    double concentration = 100.0;      // kg/m³ (100 mg/mL)
    double loaded_volume = 0.0;        // m³
    double solution_density = 1000.0;  // kg/m³
    double max_release_fraction = 0.93;

    void validate(const MicrorobotDesign& design) const;
    /// Dissolved drug mass carried, concentration × volume.
    double drug_mass() const { return concentration * loaded_volume; }
};

/// Empty cavity.
PayloadSpec empty_payload();
/// Cavity filled with 100 mg/mL BSA solution.
PayloadSpec filled_payload(const MicrorobotDesign& design);

/// Paraffin/mineral-oil seal over the ports. `onset_c` already includes any
/// per-robot coating offset.
struct WaxCap {
    double oil_mass_fraction = 0.6;
    double onset_c = 39.0;
    double integrity = 1.0;
    double decay_time = 10.0;  // s
    double breach_threshold = 0.5;

    void validate() const;
    bool breached() const { return integrity < breach_threshold; }
};

/// Footprint advance per field revolution for no-slip edge pivoting, 2(L + h).
double distance_per_revolution(const MicrorobotDesign& design);

/// Shell + magnet + payload solution mass.
double robot_mass(const MicrorobotDesign& design, const PayloadSpec& payload);

}  // namespace mutum::robot
