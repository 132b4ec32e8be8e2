#pragma once

#include <cmath>

namespace scenfuse {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Wraps into (-180, 180].
inline double wrap_degrees(double degrees) {
    double r = std::fmod(degrees, 360.0);
    if (r > 180.0) r -= 360.0;
    if (r <= -180.0) r += 360.0;
    return r;
}

// Normalizes into [0, 360).
inline double normalize_compass(double degrees) {
    double r = std::fmod(degrees, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r = 0.0;
    return r;
}

}  // namespace scenfuse
