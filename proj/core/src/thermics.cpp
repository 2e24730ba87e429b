#include "mutum/thermics.hpp"

#include "mutum/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mutum::thermics {

MeltCurve::MeltCurve(std::vector<MeltPoint> points) : points_(std::move(points)) {
    if (points_.empty()) {
        throw ValidationError("melt curve has at least one knot", "empty");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!(p.onset_c <= p.final_c)) {
            throw ValidationError("onset <= final at every knot", "knot w = " + std::to_string(p.w));
        }
        if (i > 0 && !(p.w > points_[i - 1].w)) {
            throw ValidationError("melt curve w strictly increasing", "knot " + std::to_string(i));
        }
    }
}

namespace {

template <typename Field>
double interpolate(const std::vector<MeltPoint>& pts, double w, Field field) {
    if (!(w >= pts.front().w && w <= pts.back().w)) {
        throw OutOfDomain("w = " + std::to_string(w) + " outside melt curve domain [" +
                          std::to_string(pts.front().w) + ", " + std::to_string(pts.back().w) + "]");
    }
    auto hi = std::lower_bound(pts.begin(), pts.end(), w,
                               [](const MeltPoint& p, double x) { return p.w < x; });
    if (hi->w == w || hi == pts.begin()) {
        return field(*hi);
    }
    auto lo = std::prev(hi);
    const double u = (w - lo->w) / (hi->w - lo->w);
    return field(*lo) + u * (field(*hi) - field(*lo));
}

}  // namespace

double MeltCurve::onset(double w) const {
    return interpolate(points_, w, [](const MeltPoint& p) { return p.onset_c; });
}

double MeltCurve::final_melt(double w) const {
    return interpolate(points_, w, [](const MeltPoint& p) { return p.final_c; });
}

MeltCurve default_melt_curve() {
    return MeltCurve({{0.0, 50.0, 50.0}, {0.6, 39.0, 39.0}});
}

double melt_onset(const MeltCurve& curve, double w) {
    return curve.onset(w);
}

void ThermalState::validate() const {
    if (!(capacitance > 0.0)) {
        throw ValidationError("thermal capacitance > 0", std::to_string(capacitance));
    }
    if (!(conductance > 0.0)) {
        throw ValidationError("thermal conductance > 0", std::to_string(conductance));
    }
}

void FusConfig::validate() const {
    if (!(burst_length > 0.0 && period > 0.0 && burst_length <= period)) {
        throw ValidationError("0 < burst_length <= period", std::to_string(burst_length));
    }
    if (!(absorbed_fraction > 0.0 && absorbed_fraction <= 1.0)) {
        throw ValidationError("0 < absorbed_fraction <= 1", std::to_string(absorbed_fraction));
    }
    if (!(electrical_power >= 0.0 && duration >= 0.0)) {
        throw ValidationError("non-negative FUS power and duration", std::to_string(electrical_power));
    }
}

double FusConfig::absorbed_power(double t) const {
    if (t < 0.0 || t >= duration) {
        return 0.0;
    }
    return electrical_power * duty_cycle() * absorbed_fraction;
}

ThermalParams default_thermal_params() {
    // Output of `mutum-sim calibrate --anchors anchors/default_anchors.json`.
    ThermalParams p;
    p.capacitance = 13.25;
    p.conductance = 0.222;
    p.absorbed_fraction = 0.7;
    return p;
}

namespace {

double relax(double temperature, double ambient, double power, double conductance, double tau,
             double dt) {
    const double target = ambient + power / conductance;
    return target + (temperature - target) * std::exp(-dt / tau);
}

}  // namespace

ThermalState heat_step(const ThermalState& state, const std::optional<FusConfig>& fus, double t,
                       double dt) {
    if (!(dt > 0.0)) {
        throw InvalidTimestep("heat_step dt must be > 0");
    }
    ThermalState next = state;
    const double tau = state.time_constant();
    if (!fus) {
        next.temperature_c = relax(state.temperature_c, state.ambient_c, 0.0, state.conductance, tau, dt);
        return next;
    }
    // Split at the trigger and at the switch-off so each piece has constant power.
    double temp = state.temperature_c;
    double now = t;
    const double end = t + dt;
    for (const double edge : {0.0, fus->duration}) {
        if (now < edge && edge < end) {
            temp = relax(temp, state.ambient_c, fus->absorbed_power(now), state.conductance, tau,
                         edge - now);
            now = edge;
        }
    }
    temp = relax(temp, state.ambient_c, fus->absorbed_power(now), state.conductance, tau, end - now);
    next.temperature_c = temp;
    return next;
}

robot::WaxCap make_wax_cap(const MeltCurve& curve, double w, double onset_offset_c) {
    robot::WaxCap cap;
    cap.oil_mass_fraction = w;
    cap.onset_c = curve.onset(w) + onset_offset_c;
    cap.validate();
    return cap;
}

robot::WaxCap cap_update(const robot::WaxCap& cap, double temperature_c, double dt) {
    robot::WaxCap next = cap;
    if (temperature_c >= cap.onset_c && dt > 0.0) {
        next.integrity = cap.integrity * std::exp(-dt / cap.decay_time);
    }
    return next;
}

double release_rate_constant(const robot::MicrorobotDesign& design, double reference_rate) {
    const double reference_area = robot::stock_design(robot::DesignKind::TP).total_port_area();
    return reference_rate * design.total_port_area() / reference_area;
}

PayloadState make_payload_state(const robot::MicrorobotDesign& design,
                                const robot::PayloadSpec& payload, const robot::WaxCap& cap) {
    payload.validate(design);
    PayloadState p;
    p.loaded_mass = payload.drug_mass();
    p.max_release_fraction = payload.max_release_fraction;
    p.rate_constant = release_rate_constant(design);
    p.cap = cap;
    return p;
}

PayloadState release_step(const PayloadState& p, bool cap_breached, double dt) {
    PayloadState next = p;
    next.t = p.t + dt;
    if (!next.breach_time && cap_breached) {
        next.breach_time = p.t;
    }
    if (next.breach_time) {
        const double open_for = next.t - *next.breach_time;
        const double fraction = p.max_release_fraction * (1.0 - std::exp(-p.rate_constant * open_for));
        next.released_mass = std::max(p.released_mass, fraction * p.loaded_mass);
    }
    return next;
}

double sample_supernatant(PayloadState& p) {
    const double increment = p.released_mass - p.sampled_mass;
    p.sampled_mass = p.released_mass;
    return increment;
}

}  // namespace mutum::thermics
