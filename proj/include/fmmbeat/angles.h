#pragma once

#include <cmath>
#include <numbers>

namespace fmmbeat {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2π).
inline double wrap_angle(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // fmod of a tiny negative value can round up to exactly 2π
    return r >= kTwoPi ? 0.0 : r;
}

/// Counterclockwise offset from `from` to `to`, in [0, 2π).
inline double ccw_offset(double from, double to) {
    return wrap_angle(to - from);
}

/// Shortest angular distance between two angles, in [0, π].
inline double circular_distance(double a, double b) {
    const double d = wrap_angle(a - b);
    return d > kPi ? kTwoPi - d : d;
}

}  // namespace fmmbeat
