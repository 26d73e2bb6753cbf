#include "cruise/scenario.hpp"

#include <cmath>
#include <sstream>

namespace cruise {

void ControlBounds::validate() const {
    if (!(mach_min > 0.0)) throw ValidationError("bounds.mach_min", "M_min > 0");
    if (!(mach_min < mach_max)) throw ValidationError("bounds.mach_min", "M_min < M_max");
    if (!(mach_max < 1.0)) throw ValidationError("bounds.mach_max", "M_max < 1");
    if (!(heading_min < heading_max)) throw ValidationError("bounds.heading_min_rad", "chi_min < chi_max");
    if (!(heading_min > -kPi / 2.0 && heading_max < kPi / 2.0))
        throw ValidationError("bounds.heading_max_rad", "|chi| < pi/2");
    if (!(throttle_min < throttle_max)) throw ValidationError("bounds.throttle_min", "Pi_min < Pi_max");
    if (!(throttle_min >= 0.0)) throw ValidationError("bounds.throttle_min", "Pi_min >= 0");
}

void Scenario::validate() const {
    aircraft.validate();
    bounds.validate();
    if (!(altitude >= 0.0 && altitude <= constants::max_altitude))
        throw ValidationError("altitude_m", "altitude in [0, 20000] m");
    if (!(initial_mass > 0.0)) throw ValidationError("initial_mass_kg", "m0 > 0");
    if (!(initial_mass <= aircraft.mtow)) throw ValidationError("initial_mass_kg", "m0 <= MTOW");
    if (!start.allFinite() || !target.allFinite()) throw ValidationError("endpoints", "endpoints must be finite");
    if (!((target - start).norm() > 0.0)) throw ValidationError("endpoints", "endpoints distinct");
    if (!std::isfinite(weights.time) || !std::isfinite(weights.mass))
        throw ValidationError("weights", "weights must be finite");
    if (!(penalty_epsilon > 0.0)) throw ValidationError("penalty_epsilon", "epsilon > 0");
    wind.validate();
    for (std::size_t i = 0; i < hazards.size(); ++i) {
        std::ostringstream os;
        os << "hazards[" << i << "]";
        hazards[i].validate(os.str());
    }
}

Scenario Scenario::nominal() {
    Scenario s;
    s.name = "nominal";
    const double xf = 1.0e6;
    s.target = Vec2(xf, xf);
    EllipseHazard e1;
    e1.center = Vec2(0.5 * xf, 0.6 * xf);
    e1.semi_major = 0.1 * xf;
    e1.semi_minor = 0.3 * xf;
    e1.orientation = 0.0;
    EllipseHazard e2;
    e2.center = Vec2(0.4 * xf, 0.3 * xf);
    e2.semi_major = 0.3 * xf;
    e2.semi_minor = 0.15 * xf;
    e2.orientation = kPi / 4.0;
    s.hazards = {e1, e2};
    return s;
}

ChordFrame::ChordFrame(const Vec2& start, const Vec2& target) : origin_(start) {
    const Vec2 d = target - start;
    length_ = d.norm();
    if (!(length_ > 0.0)) throw DomainError("chord frame needs distinct endpoints");
    angle_ = std::atan2(d.y(), d.x());
    const double c = std::cos(angle_);
    const double s = std::sin(angle_);
    rot_ << c, -s, s, c;
}

Environment::Environment(const Scenario& scenario, ChordFrame frame, double wind_scale, double hazard_scale)
    : scenario_(&scenario), frame_(frame), wind_scale_(wind_scale), hazard_scale_(hazard_scale) {}

EnvironmentSample Environment::sample(const Vec2& p_frame) const {
    const Vec2 p = frame_.from_frame(p_frame);
    const WindSample w = scenario_->wind.sample(p);
    const PenaltySample g = penalty(scenario_->hazards, p, scenario_->penalty_epsilon);
    return {wind_scale_ * frame_.vector_to_frame(w.velocity), wind_scale_ * frame_.jacobian_to_frame(w.jacobian),
            hazard_scale_ * g.value, hazard_scale_ * frame_.vector_to_frame(g.gradient)};
}

} // namespace cruise
