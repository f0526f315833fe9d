#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "glassyqpe/qpe.hpp"

namespace glassyqpe {

/// Point on the Bloch sphere; (1, 0, 0) is |+>.
struct SphericalPoint {
    double x = 1.0;
    double y = 0.0;
    double z = 0.0;

    static SphericalPoint from_angles(const AngleSample &a) {
        const double s = std::sin(a.theta);
        return {s * std::cos(a.phi), s * std::sin(a.phi), std::cos(a.theta)};
    }

    AngleSample angles() const {
        const double rho = std::hypot(x, y);
        const double theta = std::atan2(rho, z);
        double phi = std::atan2(y, x);
        if (phi < 0.0) phi += 2.0 * std::numbers::pi;
        if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
        return {theta, phi};
    }

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Rotation about the y axis taking the +z pole to +x: (x, y, z) -> (z, y, -x).
constexpr SphericalPoint pole_to_plus_x(const SphericalPoint &p) { return {p.z, p.y, -p.x}; }

/// Great-circle angle between p and |+>.
inline double angle_from_plus_x(const SphericalPoint &p) {
    return std::atan2(std::hypot(p.y, p.z), p.x);
}

/// Point at polar angle acos(cos_polar) from the +z pole, azimuth psi.
inline SphericalPoint point_around_pole(double cos_polar, double psi) {
    const double c = std::clamp(cos_polar, -1.0, 1.0);
    const double s = std::sqrt((1.0 - c) * (1.0 + c));
    return {s * std::cos(psi), s * std::sin(psi), c};
}

}  // namespace glassyqpe
