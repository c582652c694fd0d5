#include "irstrack/geometry.hpp"

#include <cmath>

namespace irstrack {

double Position::norm() const { return std::sqrt(x * x + y * y + z * z); }

Position Position::normalized() const {
    const double n = norm();
    if (n <= 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return {x / n, y / n, z / n};
}

LocalFrame LocalFrame::facing(const Position& origin, const Position& target) {
    const Position n = (target - origin).normalized();
    Position e1 = Position{0, 0, 1}.cross(n);
    if (e1.norm() < 1e-12) e1 = Position{1, 0, 0};  // looking straight up/down
    e1 = e1.normalized();
    const Position e2 = n.cross(e1);
    return {e1, e2, n};
}

LocalFrame irs_frame() {
    return {Position{0, 0, 1}, Position{0, 1, 0}, Position{1, 0, 0}};
}

Direction direction_from_position(const Position& p, const Position& irs_center) {
    const double dx = p.x - irs_center.x;
    if (dx <= 0.0) throw std::domain_error("point is not in front of the IRS plane");
    return {std::atan((p.y - irs_center.y) / dx), std::atan((p.z - irs_center.z) / dx)};
}

Position position_from_direction(const Position& irs_center, const Direction& d, double range) {
    if (range <= 0.0) throw std::domain_error("range must be positive");
    const double tt = std::tan(d.theta), tp = std::tan(d.phi);
    const double dx = range / std::sqrt(1.0 + tt * tt + tp * tp);
    return irs_center + Position{dx, dx * tt, dx * tp};
}

AzEl azel_from_direction(const Direction& d) {
    const double tt = std::tan(d.theta), tp = std::tan(d.phi);
    const double r = std::sqrt(tt * tt + tp * tp);
    if (r == 0.0) return {0.0, 0.0};  // boresight: elevation 0 forces A1 = A2 = 0
    double az;
    if (tp == 0.0) {
        az = tt > 0.0 ? kPi / 2.0 : -kPi / 2.0;  // limit of both sign branches
    } else {
        az = std::atan(tt / tp);
        if (tp < 0.0) az += kPi;
    }
    if (az < 0.0) az += 2.0 * kPi;
    return {az, std::atan(r)};
}

std::pair<double, double> phase_factors(const AzEl& az_el) {
    const double se = std::sin(az_el.elevation);
    return {se * std::cos(az_el.azimuth), se * std::sin(az_el.azimuth)};
}

std::pair<double, double> phase_factors_towards(const LocalFrame& frame, const Position& origin,
                                                const Position& target) {
    const Position u = (target - origin).normalized();
    return {u.dot(frame.e1), u.dot(frame.e2)};
}

Direction direction_from_phase_factors(double a1, double a2) {
    // a1 pairs with the vertical (phi) axis and a2 with the horizontal
    // (theta) axis, matching azel_from_direction composed with
    // phase_factors.
    const double s = a1 * a1 + a2 * a2;
    if (s >= 1.0) throw std::domain_error("phase factors outside the visible region");
    const double ux = std::sqrt(1.0 - s);
    return {std::atan(a2 / ux), std::atan(a1 / ux)};
}

cvec steering_axis(int q_count, double spacing, double wavelength, double phase_factor) {
    cvec a(static_cast<size_t>(q_count));
    const double c = 2.0 * kPi * spacing / wavelength * phase_factor;
    const double offset0 = -0.5 * (q_count - 1);
    for (int q = 0; q < q_count; ++q) {
        a[q] = std::polar(1.0, c * (offset0 + q));
    }
    return a;
}

cvec kron(const cvec& a, const cvec& b) {
    cvec out(a.size() * b.size());
    size_t k = 0;
    for (const cplx& x : a)
        for (const cplx& y : b) out[k++] = x * y;
    return out;
}

cvec steering_vector_from_factors(const ArrayGeometry& g, double a1, double a2) {
    g.validate();
    return kron(steering_axis(g.rows, g.spacing, g.wavelength, a1),
                steering_axis(g.cols, g.spacing, g.wavelength, a2));
}

cvec steering_vector(const ArrayGeometry& g, const AzEl& az_el) {
    const auto [a1, a2] = phase_factors(az_el);
    return steering_vector_from_factors(g, a1, a2);
}

}  // namespace irstrack
