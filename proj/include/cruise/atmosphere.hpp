#pragma once

// International Standard Atmosphere, linear-lapse troposphere form.

#include "cruise/types.hpp"

#include <cmath>
#include <sstream>

namespace cruise {

/// Physical constants of the flight model (SI).
namespace constants {
inline constexpr double theta0 = 288.15;   // sea-level temperature [K]
inline constexpr double p0 = 101325.0;     // sea-level pressure [Pa]
inline constexpr double lapse = 0.0065;    // temperature lapse factor beta [K/m]
inline constexpr double gas_r = 287.04;    // specific gas constant [J/(kg K)]
inline constexpr double gamma = 1.4;       // isentropic expansion factor c0
inline constexpr double g = 9.81;          // gravitational acceleration [m/s^2]
inline constexpr double max_altitude = 20000.0;
} // namespace constants

struct AtmosphereState {
    double temperature;  // [K]
    double pressure;     // [Pa]
    double density;      // [kg/m^3]
    double sound_speed;  // [m/s]
};

/**
 * @brief ISA state at a fixed altitude.
 *
 * Valid on [0, 20000] m; outside that interval a DomainError is raised.
 */
inline AtmosphereState isa_state(double altitude) {
    const double h = altitude;
    if (!(h >= 0.0 && h <= constants::max_altitude)) {
        std::ostringstream os;
        os << "altitude " << h << " m outside ISA troposphere model interval [0, "
           << constants::max_altitude << "] m";
        throw DomainError(os.str());
    }
    AtmosphereState s;
    s.temperature = constants::theta0 - constants::lapse * altitude;
    s.pressure = constants::p0 * std::pow(s.temperature / constants::theta0,
                                     constants::g / (constants::lapse * constants::gas_r));
    s.density = s.pressure / (constants::gas_r * s.temperature);
    s.sound_speed = std::sqrt(constants::gamma * constants::gas_r * s.temperature);
    return s;
}

} // namespace cruise
