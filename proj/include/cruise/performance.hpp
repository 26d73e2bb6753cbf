#pragma once

// Compressible drag polar, maximum thrust and specific fuel consumption of a
// twin-engine wide-body transport at constant cruise altitude.

#include "cruise/atmosphere.hpp"
#include "cruise/types.hpp"

#include <cmath>
#include <sstream>

namespace cruise {

struct AircraftModel {
    double wing_area = 283.3;     // s [m^2]
    double mtow = 186880.0;       // [kg]
    double max_fuel = 73635.0;    // [kg]
    double thrust_ref = 5.0e5;    // T0 [N]
    double sfc_ref = 9.0e-6;      // C_s0 [kg/(N s)]
    Eigen::Vector3d cd_incompressible{0.01322, -0.00610, 0.06000};
    /// Row j holds k_{j1..j5}, the K-bar polynomial added to C_Dj.
    Eigen::Matrix<double, 3, 5> compressibility = default_compressibility();

    /// Boeing 767-300ER constants.
    static AircraftModel b767_300er() { return AircraftModel{}; }

    static Eigen::Matrix<double, 3, 5> default_compressibility() {
        Eigen::Matrix<double, 3, 5> k;
        k << 0.0067, -0.1861, 2.2420, -6.4350, 6.3428,
             0.0962, -0.7602, -1.2870, 3.7925, -2.7672,
            -0.1317, 1.3427, -1.2839, 5.0164, 0.0000;
        return k;
    }

    void validate() const;
};

namespace detail {
inline double value_of(double x) { return x; }
inline double value_of(long double x) { return static_cast<double>(x); }
template <typename T>
double value_of(const T& x) {
    return value_of(x.value());
}
} // namespace detail

/// K-bar(M) = (M - 0.4)^2 / sqrt(1 - M^2) for M >= 0.4, zero below.
template <typename Scalar>
Scalar compressibility_kbar(const Scalar& mach) {
    using std::sqrt;
    const double m = detail::value_of(mach);
    if (!(m >= 0.0 && m < 1.0)) {
        std::ostringstream os;
        os << "Mach " << m << " outside [0, 1): compressibility correction is singular at M = 1";
        throw DomainError(os.str());
    }
    if (m < 0.4) return Scalar(0.0);
    const Scalar d = mach - 0.4;
    return d * d / sqrt(1.0 - mach * mach);
}

/// C_D assembled from the three K-bar-corrected polar coefficients.
template <typename Scalar>
Scalar drag_coefficient(const AircraftModel& model, const Scalar& mach, const Scalar& lift_coeff) {
    const Scalar kbar = compressibility_kbar(mach);
    Scalar c[3];
    for (int j = 0; j < 3; ++j) {
        Scalar poly(0.0);
        for (int p = 4; p >= 0; --p) poly = (poly + model.compressibility(j, p)) * kbar;
        c[j] = model.cd_incompressible[j] + poly;
    }
    return c[0] + c[1] * lift_coeff + c[2] * lift_coeff * lift_coeff;
}

template <typename Scalar>
Scalar drag(const Scalar& mass, const Scalar& speed, double altitude,
            const AircraftModel& model = AircraftModel{}) {
    if (!(detail::value_of(mass) > 0.0) || !(detail::value_of(speed) > 0.0))
        throw DomainError("drag requires positive mass and speed");
    const AtmosphereState atm = isa_state(altitude);
    const Scalar mach = speed / atm.sound_speed;
    const Scalar dyn = 0.5 * atm.density * speed * speed;
    const Scalar cl = mass * constants::g / (dyn * model.wing_area);
    return dyn * model.wing_area * drag_coefficient(model, mach, cl);
}

template <typename Scalar>
Scalar thrust_max(const Scalar& speed, double altitude, const AircraftModel& model = AircraftModel{}) {
    using std::pow;
    using std::sqrt;
    if (!(detail::value_of(speed) >= 0.0)) throw DomainError("thrust_max requires nonnegative speed");
    const AtmosphereState atm = isa_state(altitude);
    const double ratio = atm.pressure * constants::theta0 / (constants::p0 * atm.temperature);
    const Scalar mach = speed / atm.sound_speed;
    constexpr double gm1 = constants::gamma - 1.0;
    const Scalar ram = pow(1.0 + 0.5 * gm1 * mach * mach, constants::gamma / gm1);
    return ratio * model.thrust_ref * ram * (1.0 - 0.49 * sqrt(mach));
}

template <typename Scalar>
Scalar sfc(const Scalar& speed, double altitude, const AircraftModel& model = AircraftModel{}) {
    if (!(detail::value_of(speed) >= 0.0)) throw DomainError("sfc requires nonnegative speed");
    const AtmosphereState atm = isa_state(altitude);
    const Scalar mach = speed / atm.sound_speed;
    return model.sfc_ref * std::sqrt(atm.temperature / constants::theta0) * (1.0 + 1.2 * mach);
}

/// Pi = D / T_max, unclamped.
template <typename Scalar>
Scalar throttle_required(const Scalar& mass, const Scalar& speed, double altitude,
                         const AircraftModel& model = AircraftModel{}) {
    return drag(mass, speed, altitude, model) / thrust_max(speed, altitude, model);
}

/// Value and first derivative with respect to airspeed.
struct SpeedSlope {
    double value;
    double d_speed;
};

struct DragTerms {
    double drag;
    double d_speed;
    double d_mass;
    double cd;
    double cd_speed;  // dC_D/dv at fixed mass
};

/// Fuel-mass rate F_m = -C_s D and its partials.
struct FuelFlow {
    double rate;
    double d_speed;
    double d_mass;
};

/**
 * Aircraft performance bound to one cruise altitude. All speed and mass
 * derivatives are closed-form; the shooting Jacobian downstream is sensitive
 * to derivative noise.
 */
class CruisePerformance {
public:
    CruisePerformance(AircraftModel model, double altitude);

    const AircraftModel& model() const { return model_; }
    const AtmosphereState& atmosphere() const { return atm_; }
    double altitude() const { return altitude_; }

    double mach(double speed) const { return speed / atm_.sound_speed; }
    double speed_at_mach(double mach) const { return mach * atm_.sound_speed; }

    DragTerms drag(double mass, double speed) const;
    SpeedSlope thrust_max(double speed) const;
    SpeedSlope sfc(double speed) const;
    FuelFlow fuel_flow(double mass, double speed) const;

    double throttle(double mass, double speed) const {
        return drag(mass, speed).drag / thrust_max(speed).value;
    }

    /// (dC_s/dv)/C_s + 2/v + (dC_D/dv)/C_D, i.e. F_{m,v}/F_m.
    double fuel_log_slope(double mass, double speed) const;

    /// Second speed derivative of F_m by central differences of the analytic slope.
    double fuel_flow_curvature(double mass, double speed) const;

private:
    AircraftModel model_;
    double altitude_;
    AtmosphereState atm_;
    double thrust_ratio_;  // P Theta0 / (P0 Theta)
    double sfc_temp_;      // C_s0 sqrt(Theta/Theta0)
};

/// dK-bar/dM, zero below the 0.4 breakpoint (C^1 there).
double compressibility_kbar_slope(double mach);

} // namespace cruise
