#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "irstrack/geometry.hpp"

namespace irstrack {

/// Common per-axis phase profile shared by all codewords of a codebook.
/// Stored as phases rho (radians); the complex weights are
/// unit_gain * exp(j rho_q), so the unit-modulus constraint holds by
/// construction.
struct BeamShape {
    std::vector<double> phases;
    double unit_gain = 1.0;

    int size() const { return static_cast<int>(phases.size()); }
    cvec weights() const;
};

/// Flat profile; shifting it per codeword yields the plain steering ramps.
BeamShape linear_profile(int q_count);

/// Member m of the quadratic (chirp) profile family:
///   rho_q = -(2 pi d / (M lambda)) * (dbeta * m * q^2 / (2 Q) + beta_m * q)
/// with dbeta = beta_bar / M, beta_m = m * dbeta, beta_bar = min(4, lambda/d).
/// m = 0 collapses to the flat profile; larger m spreads the beam, up to
/// roughly one codeword cell at m = M - 1.
BeamShape quadratic_profile(int q_count, int m_count, double spacing, double wavelength, int member);

struct Codeword {
    int m1 = 0;
    int m2 = 0;
    bool operator==(const Codeword& o) const { return m1 == o.m1 && m2 == o.m2; }
    bool operator<(const Codeword& o) const { return m1 != o.m1 ? m1 < o.m1 : m2 < o.m2; }
};

enum class BeamShapeKind { linear, quadratic, optimized };

std::string to_string(BeamShapeKind kind);
BeamShapeKind beam_shape_kind_from_string(const std::string& s);

/// Separable IRS codebook of M x M codewords over a Q x Q surface. Every
/// codeword applies the shared beam shape on each axis, rotated by an
/// index-dependent linear ramp. The optional pointing offset adds a fixed
/// per-axis ramp that pre-compensates the incident-wave phase factors, so
/// the index-to-direction map stays centered on the served region for
/// non-boresight transmitter geometry.
class Codebook {
  public:
    Codebook(BeamShape shape, int m_count, int q_count, double spacing, double wavelength,
             BeamShapeKind kind, double pointing_a1 = 0.0, double pointing_a2 = 0.0);

    const BeamShape& shape() const { return shape_; }
    int m_count() const { return m_count_; }
    int q_count() const { return q_count_; }
    double spacing() const { return spacing_; }
    double wavelength() const { return wavelength_; }
    BeamShapeKind kind() const { return kind_; }

    double pointing(int axis) const { return axis == 0 ? pointing_a1_ : pointing_a2_; }

    /// Axis weight vector for index m on the given axis (0 or 1):
    /// shape .* exp(j(4 pi d m/(lambda M) - pi + 2 pi d p/lambda) q).
    const cvec& axis_vector(int axis, int m_axis) const;

    /// Full Q^2 codeword vector, axis_vector(0, m1) (x) axis_vector(1, m2).
    cvec full_vector(const Codeword& m) const;

    /// Reflection gain g_m(psi) = a^H(psi) diag(w(m)) a(incident); evaluated
    /// per axis. `incident` gives the (A1, A2) factors of the impinging wave.
    cplx reflection_gain_factors(const Codeword& m, double a1, double a2, double inc_a1,
                                 double inc_a2) const;
    cplx reflection_gain(const Codeword& m, const Direction& d, const AzEl& incident) const;

    /// Per-axis gain sum_q conj(ramp(A)) * w_q at relative factor offset
    /// x = A - A_incident.
    cplx axis_gain(int axis, int m_axis, double x) const;

    /// Peak |axis_gain| offset for index m (cached at construction).
    double axis_peak_offset(int axis, int m_axis) const {
        return axis_peaks_[axis][static_cast<size_t>(m_axis)];
    }

    /// Direction maximizing |g_m| for a wave impinging from `incident`;
    /// per-axis grid search plus golden-section refinement, with the
    /// incident factors re-added. Factors are clamped to the visible region.
    Direction main_lobe_direction(const Codeword& m, const AzEl& incident) const;

    /// Analytic linear-profile solution A_mu = 2 m / M - lambda / (2 d).
    double analytic_axis_factor(int m_axis) const;

  private:
    BeamShape shape_;
    int m_count_;
    int q_count_;
    double spacing_;
    double wavelength_;
    BeamShapeKind kind_;
    double pointing_a1_;
    double pointing_a2_;
    std::vector<cvec> axis_vectors_[2];    // per axis, one per codeword index
    std::vector<double> axis_peaks_[2];    // peak offset x* per codeword index
};

/// Codeword grid spacing in A-space (equals radians under the small-angle
/// convention): Delta = 2 / M.
double angular_spacing(int m_count);

/// Plain-text shape format: '#'-prefixed header lines (kind, Q, M,
/// spacing/wavelength), then one "index phase_radians" line per element.
void save_beam_shape(std::ostream& os, const BeamShape& shape, BeamShapeKind kind, int m_count,
                     double spacing, double wavelength);
void save_beam_shape_file(const std::string& path, const BeamShape& shape, BeamShapeKind kind,
                          int m_count, double spacing, double wavelength);

struct LoadedBeamShape {
    BeamShape shape;
    BeamShapeKind kind = BeamShapeKind::optimized;
    int m_count = 0;
    double spacing_over_wavelength = 0.5;
};
LoadedBeamShape load_beam_shape(std::istream& is);
LoadedBeamShape load_beam_shape_file(const std::string& path);

}  // namespace irstrack
