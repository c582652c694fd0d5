#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace irstrack {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;

/// Direction of a point in front of a planar array, expressed as the two
/// arctangent angles of the in-plane offsets over the boresight offset.
/// theta is the horizontal angle, phi the vertical angle; both in radians
/// and restricted to (-pi/2, pi/2).
struct Direction {
    double theta = 0.0;
    double phi = 0.0;
};

/// Azimuth/elevation pair. elevation is the angle between the direction
/// vector and the array normal (in [0, pi/2]); azimuth is the in-plane
/// angle of the projection (wrapped to [0, 2*pi)).
struct AzEl {
    double azimuth = 0.0;
    double elevation = 0.0;
};

/// Uniform planar array: rows x cols elements, uniform spacing, carrier
/// wavelength. Axis 1 runs over rows, axis 2 over cols.
struct ArrayGeometry {
    int rows = 1;
    int cols = 1;
    double spacing = 0.0;     // meters
    double wavelength = 0.0;  // meters

    int size() const { return rows * cols; }
    void validate() const {
        if (rows < 1 || cols < 1) throw std::invalid_argument("array must have at least one element per axis");
        if (spacing <= 0.0) throw std::invalid_argument("array spacing must be positive");
        if (wavelength <= 0.0) throw std::invalid_argument("wavelength must be positive");
    }
};

struct Position {
    double x = 0.0, y = 0.0, z = 0.0;

    Position operator+(const Position& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Position operator-(const Position& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Position operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Position& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const;
    Position normalized() const;
    Position cross(const Position& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
};

/// Orthonormal frame of a planar array: in-plane axes e1, e2 and the
/// boresight normal. Used to compute per-axis phase factors for arbitrary
/// array orientations (BS, UE); the IRS uses the fixed y-z plane frame.
struct LocalFrame {
    Position e1, e2, normal;

    /// Frame with the normal pointing from `origin` towards `target`;
    /// e1 is horizontal (z x n), e2 completes the right-handed set.
    static LocalFrame facing(const Position& origin, const Position& target);
};

/// IRS frame: array in the y-z plane, normal along +x. Axis 1 is vertical
/// (z), axis 2 horizontal (y), matching the angle mapping below.
LocalFrame irs_frame();

/// theta = arctan((y - y_c)/dx), phi = arctan((z - z_c)/dx) with
/// dx = x - x_c the perpendicular offset from the array plane.
/// Throws if the point is not strictly in front of the plane.
Direction direction_from_position(const Position& p, const Position& irs_center);

/// Point at straight-line distance `range` from `irs_center` along `d`.
Position position_from_direction(const Position& irs_center, const Direction& d, double range);

/// Maps (theta, phi) to the azimuth/elevation pair of the array's frame:
/// elevation = arctan(sqrt(tan^2 theta + tan^2 phi)) and azimuth =
/// arctan(tan theta / tan phi) plus a +pi branch correction for
/// tan(phi) < 0. Boresight (0, 0) maps to (0, 0) by convention.
AzEl azel_from_direction(const Direction& d);

/// Per-axis phase-difference factors A1 = sin(el) cos(az),
/// A2 = sin(el) sin(az); both in [-1, 1].
std::pair<double, double> phase_factors(const AzEl& az_el);

/// Direction cosines of (target - origin) on the frame's in-plane axes.
std::pair<double, double> phase_factors_towards(const LocalFrame& frame, const Position& origin,
                                                const Position& target);

/// Inverse of the Direction -> (A1, A2) chain; requires A1^2 + A2^2 < 1.
Direction direction_from_phase_factors(double a1, double a2);

/// Length-Q phase ramp exp(j * (2 pi d / lambda) * A * (-(Q-1)/2 + (q-1))).
cvec steering_axis(int q_count, double spacing, double wavelength, double phase_factor);

/// Full UPA steering vector: Kronecker product of the two axis ramps,
/// a(psi) = a_1 (x) a_2, length rows*cols, unit modulus per entry.
cvec steering_vector(const ArrayGeometry& g, const AzEl& az_el);
cvec steering_vector_from_factors(const ArrayGeometry& g, double a1, double a2);

/// Kronecker product helper: out[i*|b| + j] = a[i] * b[j].
cvec kron(const cvec& a, const cvec& b);

}  // namespace irstrack
