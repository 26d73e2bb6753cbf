#include "cruise/performance.hpp"

#include <cmath>

namespace cruise {

void AircraftModel::validate() const {
    if (!(wing_area > 0.0)) throw ValidationError("aircraft.wing_area_m2", "wing_area > 0");
    if (!(thrust_ref > 0.0)) throw ValidationError("aircraft.thrust_ref_N", "T0 > 0");
    if (!(sfc_ref > 0.0)) throw ValidationError("aircraft.sfc_ref_kg_per_Ns", "Cs0 > 0");
    if (!(max_fuel > 0.0 && max_fuel < mtow))
        throw ValidationError("aircraft.max_fuel_kg", "0 < max_fuel < mtow");
}

double compressibility_kbar_slope(double mach) {
    if (!(mach >= 0.0 && mach < 1.0)) throw DomainError("Mach outside [0, 1)");
    if (mach < 0.4) return 0.0;
    const double d = mach - 0.4;
    const double w = 1.0 - mach * mach;
    const double rs = 1.0 / std::sqrt(w);
    return 2.0 * d * rs + d * d * mach * rs / w;
}

CruisePerformance::CruisePerformance(AircraftModel model, double altitude)
    : model_(std::move(model)), altitude_(altitude), atm_(isa_state(altitude)) {
    model_.validate();
    thrust_ratio_ = atm_.pressure * constants::theta0 / (constants::p0 * atm_.temperature);
    sfc_temp_ = model_.sfc_ref * std::sqrt(atm_.temperature / constants::theta0);
}

DragTerms CruisePerformance::drag(double mass, double speed) const {
    if (!(mass > 0.0) || !(speed > 0.0)) throw DomainError("drag requires positive mass and speed");
    const double mach = speed / atm_.sound_speed;
    const double kbar = compressibility_kbar(mach);
    const double dk_dv = compressibility_kbar_slope(mach) / atm_.sound_speed;

    double c[3];
    double dc[3];
    for (int j = 0; j < 3; ++j) {
        double poly = 0.0;
        double dpoly = 0.0;
        for (int p = 4; p >= 0; --p) {
            dpoly = dpoly * kbar + (p + 1) * model_.compressibility(j, p);
            poly = (poly + model_.compressibility(j, p)) * kbar;
        }
        c[j] = model_.cd_incompressible[j] + poly;
        dc[j] = dpoly * dk_dv;
    }

    const double q = 0.5 * atm_.density * speed * speed;
    const double cl = mass * constants::g / (q * model_.wing_area);
    const double dcl_dv = -2.0 * cl / speed;
    const double dcd_dcl = c[1] + 2.0 * c[2] * cl;

    DragTerms out;
    out.cd = c[0] + c[1] * cl + c[2] * cl * cl;
    out.cd_speed = dc[0] + dc[1] * cl + dc[2] * cl * cl + dcd_dcl * dcl_dv;
    out.drag = q * model_.wing_area * out.cd;
    out.d_speed = atm_.density * speed * model_.wing_area * out.cd + q * model_.wing_area * out.cd_speed;
    out.d_mass = q * model_.wing_area * dcd_dcl * cl / mass;
    return out;
}

SpeedSlope CruisePerformance::thrust_max(double speed) const {
    if (!(speed > 0.0)) throw DomainError("thrust_max requires positive speed");
    constexpr double gm1 = constants::gamma - 1.0;
    constexpr double expo = constants::gamma / gm1;
    const double mach = speed / atm_.sound_speed;
    if (!(mach < 1.0)) throw DomainError("thrust_max requires Mach < 1");
    const double base = 1.0 + 0.5 * gm1 * mach * mach;
    const double ram = std::pow(base, expo);
    const double dram = expo * std::pow(base, expo - 1.0) * gm1 * mach;
    const double sq = std::sqrt(mach);
    const double lapse = 1.0 - 0.49 * sq;
    const double dlapse = -0.245 / sq;
    const double scale = thrust_ratio_ * model_.thrust_ref;
    return {scale * ram * lapse, scale * (dram * lapse + ram * dlapse) / atm_.sound_speed};
}

SpeedSlope CruisePerformance::sfc(double speed) const {
    if (!(speed >= 0.0)) throw DomainError("sfc requires nonnegative speed");
    const double mach = speed / atm_.sound_speed;
    return {sfc_temp_ * (1.0 + 1.2 * mach), sfc_temp_ * 1.2 / atm_.sound_speed};
}

FuelFlow CruisePerformance::fuel_flow(double mass, double speed) const {
    const DragTerms d = drag(mass, speed);
    const SpeedSlope cs = sfc(speed);
    return {-cs.value * d.drag, -(cs.d_speed * d.drag + cs.value * d.d_speed), -cs.value * d.d_mass};
}

double CruisePerformance::fuel_log_slope(double mass, double speed) const {
    const DragTerms d = drag(mass, speed);
    const SpeedSlope cs = sfc(speed);
    return cs.d_speed / cs.value + 2.0 / speed + d.cd_speed / d.cd;
}

double CruisePerformance::fuel_flow_curvature(double mass, double speed) const {
    const double h = 1e-4 * speed;
    return (fuel_flow(mass, speed + h).d_speed - fuel_flow(mass, speed - h).d_speed) / (2.0 * h);
}

} // namespace cruise
