#include "mutum/microrobot.hpp"

#include "mutum/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace mutum::robot {

std::string_view to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::TP: return "tp";
        case DesignKind::SP: return "sp";
        case DesignKind::EP: return "ep";
    }
    return "tp";
}

DesignKind parse_design_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "tp") return DesignKind::TP;
    if (lower == "sp") return DesignKind::SP;
    if (lower == "ep") return DesignKind::EP;
    throw ValidationError("design in {tp, sp, ep}", "got '" + std::string(text) + "'");
}

void MicrorobotDesign::validate() const {
    if (!(length > 0.0 && width > 0.0 && height > 0.0)) {
        throw ValidationError("positive body dimensions", "length/width/height must be > 0");
    }
    if (port_count < 0) {
        throw ValidationError("port_count >= 0", std::to_string(port_count));
    }
    if (!(port_diameter >= 0.0)) {
        throw ValidationError("port_diameter >= 0", std::to_string(port_diameter));
    }
    if (!(internal_volume > 0.0 && internal_volume < outer_volume())) {
        throw ValidationError("0 < internal_volume < outer volume", std::to_string(internal_volume));
    }
    if (!(cavity_volume > 0.0 && cavity_volume <= internal_volume)) {
        throw ValidationError("0 < cavity_volume <= internal_volume", std::to_string(cavity_volume));
    }
    if (!(body_density > 0.0 && magnet_density > 0.0)) {
        throw ValidationError("positive densities", "body/magnet density must be > 0");
    }
}

double MicrorobotDesign::wall_thickness() const {
    // (L - 2t)(w - 2t)(h - 2t) = internal_volume, decreasing in t on [0, min/2].
    const auto inner = [&](double t) {
        return (length - 2.0 * t) * (width - 2.0 * t) * (height - 2.0 * t);
    };
    double lo = 0.0;
    double hi = 0.5 * std::min({length, width, height});
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (inner(mid) > internal_volume) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double MicrorobotDesign::total_port_area() const {
    return port_count * kPi * 0.25 * port_diameter * port_diameter;
}

double MicrorobotDesign::half_diagonal() const {
    return 0.5 * std::hypot(length, height);
}

MicrorobotDesign stock_design(DesignKind kind) {
    MicrorobotDesign d;
    d.kind = kind;
    switch (kind) {
        case DesignKind::TP:
            d.port_count = 2;
            d.port_diameter = 750e-6;
            break;
        case DesignKind::SP:
            d.port_count = 4;
            d.port_diameter = 750e-6;
            break;
        case DesignKind::EP:
            d.port_count = 2;
            d.port_diameter = 1000e-6;
            break;
    }
    return d;
}

double default_max_release_fraction(DesignKind kind) {
    switch (kind) {
        case DesignKind::TP: return 0.93;
        case DesignKind::SP: return 0.52;
        case DesignKind::EP: return 1.00;
    }
    return 0.93;
}

void PayloadSpec::validate(const MicrorobotDesign& design) const {
    if (!(loaded_volume >= 0.0 && loaded_volume <= design.cavity_volume)) {
        throw ValidationError("0 <= loaded_volume <= cavity_volume", std::to_string(loaded_volume));
    }
    if (!(max_release_fraction >= 0.0 && max_release_fraction <= 1.0)) {
        throw ValidationError("0 <= F_max <= 1", std::to_string(max_release_fraction));
    }
    if (!(concentration >= 0.0 && solution_density >= 0.0)) {
        throw ValidationError("non-negative concentration and density", solution_name);
    }
}

PayloadSpec empty_payload() {
    PayloadSpec p;
    p.solution_name = "none";
    p.concentration = 0.0;
    p.loaded_volume = 0.0;
    return p;
}

PayloadSpec filled_payload(const MicrorobotDesign& design) {
    PayloadSpec p;
    p.loaded_volume = design.cavity_volume;
    p.max_release_fraction = default_max_release_fraction(design.kind);
    return p;
}

void WaxCap::validate() const {
    if (!(oil_mass_fraction >= 0.0 && oil_mass_fraction <= 0.8)) {
        throw ValidationError("0 <= w <= 0.8", std::to_string(oil_mass_fraction));
    }
    if (!(integrity >= 0.0 && integrity <= 1.0)) {
        throw ValidationError("integrity in [0, 1]", std::to_string(integrity));
    }
    if (!(decay_time > 0.0)) {
        throw ValidationError("cap decay_time > 0", std::to_string(decay_time));
    }
}

double distance_per_revolution(const MicrorobotDesign& design) {
    return 2.0 * (design.length + design.height);
}

double robot_mass(const MicrorobotDesign& design, const PayloadSpec& payload) {
    // The magnet sits inside the internal volume; the rest of that volume is
    // cavity or air.
    const double shell = design.shell_volume() * design.body_density;
    const double magnet = design.magnet.volume() * design.magnet_density;
    const double fill = payload.loaded_volume * payload.solution_density;
    return shell + magnet + fill;
}

}  // namespace mutum::robot
