#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace irsmusic {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Angle on the half-plane resolvable by a linear array. A ULA response
// depends on the incidence angle only through cos(eta), so eta, -eta and
// 2*pi - eta are indistinguishable; construction folds every input onto the
// canonical range [0, 180) degrees. Stored in radians, reported in degrees.
class Angle {
  public:
    Angle() = default;

    static Angle from_radians(double rad) { return Angle(rad); }
    static Angle from_degrees(double deg) { return Angle(deg * kPi / 180.0); }

    [[nodiscard]] double radians() const { return rad_; }
    [[nodiscard]] double degrees() const { return rad_ * 180.0 / kPi; }

    friend auto operator<=>(const Angle&, const Angle&) = default;

  private:
    explicit Angle(double rad) : rad_(fold(rad)) {}

    // Fold onto [0, pi]. The upper endpoint is reachable only by an exact
    // end-fire input; it has no twin inside the open range and is kept as is.
    static double fold(double rad) {
        if (!std::isfinite(rad)) {
            throw std::invalid_argument("angle must be finite");
        }
        double x = std::fmod(rad, kTwoPi);
        if (x < 0.0) {
            x += kTwoPi;
        }
        if (x > kPi) {
            x = kTwoPi - x;
        }
        return x;
    }

    double rad_ = 0.0;
};

// Separation of two canonical angles in degrees.
inline double angular_distance_deg(const Angle& a, const Angle& b) {
    return std::abs(a.degrees() - b.degrees());
}

// Uniform linear array oriented along the +x axis.
struct ArrayGeometry {
    int num_elements = 1;
    double spacing_wavelengths = 0.5;

    ArrayGeometry() = default;
    ArrayGeometry(int num_elements_in, double spacing_wavelengths_in = 0.5)
        : num_elements(num_elements_in), spacing_wavelengths(spacing_wavelengths_in) {
        if (num_elements < 1) {
            throw std::invalid_argument("array needs at least one element");
        }
        if (!(spacing_wavelengths > 0.0)) {
            throw std::invalid_argument("element spacing must be positive");
        }
    }
};

struct Position2D {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Position2D& a, const Position2D& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

/// ULA steering vector towards `angle`: element n is
/// exp(-j * 2*pi * n * (d/lambda) * cos(angle)), element 0 is exactly 1.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const Angle& angle) {
    Eigen::VectorXcd v(geom.num_elements);
    const double phase_step = -kTwoPi * geom.spacing_wavelengths * std::cos(angle.radians());
    for (int n = 0; n < geom.num_elements; ++n) {
        v(n) = std::polar(1.0, phase_step * static_cast<double>(n));
    }
    return v;
}

/// Angle between the array axis (+x) and the direction from `array_pos`
/// towards `source_pos`, folded onto [0, 180).
inline Angle aoa_from_positions(const Position2D& array_pos, const Position2D& source_pos) {
    const double dx = source_pos.x - array_pos.x;
    const double dy = source_pos.y - array_pos.y;
    if (dx == 0.0 && dy == 0.0) {
        throw std::invalid_argument("degenerate geometry: source coincides with array position");
    }
    return Angle::from_radians(std::abs(std::atan2(dy, dx)));
}

}  // namespace irsmusic
