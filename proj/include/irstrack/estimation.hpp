#pragma once

#include <Eigen/Dense>
#include <iosfwd>

#include "irstrack/channel.hpp"
#include "irstrack/codebook.hpp"

namespace irstrack {

/// Pilot observations collected in one direction-estimation sub-block:
/// one received vector per configured codeword, all over the same pilot.
struct MeasurementSet {
    std::vector<Codeword> codewords;  // adjacency set, fixed iteration order
    std::vector<cvec> received;       // r_m per codeword, each of pilot length
    cvec pilot;

    int num_configs() const { return static_cast<int>(codewords.size()); }
    int pilot_length() const { return static_cast<int>(pilot.size()); }
    void validate() const;
};

/// Codewords within Chebyshev distance gamma of the center, clipped at the
/// codebook boundary; row-major (m1, m2) order.
std::vector<Codeword> adjacent_codeword_set(const Codeword& center, int gamma, int m_count);

/// Square grid of H x H candidate directions spanning center +- R/2 on
/// each axis.
struct HypothesisGrid {
    Direction center;
    double half_width = 0.0;  // R/2, radians
    int points_per_axis = 0;  // H

    double theta_at(int h) const;  // h in [0, H)
    double phi_at(int h) const;
    Direction point(int h_theta, int h_phi) const {
        return {theta_at(h_theta), phi_at(h_phi)};
    }
    int num_points() const { return points_per_axis * points_per_axis; }
};

HypothesisGrid make_hypothesis_grid(const Direction& center, double coverage_width,
                                    int points_per_axis);

/// Grid centered on the main lobe of the given codeword with the standard
/// coverage width R = 3 * Delta.
HypothesisGrid build_hypothesis_grid(const Codeword& m_ide, const Codebook& cb,
                                     const AzEl& incident, int points_per_axis);

/// Hypothesis gains: gains(p, i) = expected reflection gain of measurement
/// config i at grid point p. Decouples the estimators from how the IRS was
/// configured (codebook codewords or arbitrary phase patterns).
struct GainTable {
    int num_points = 0;
    int num_configs = 0;
    std::vector<cplx> gains;  // row-major [point][config]

    const cplx* row(int point) const {
        return gains.data() + static_cast<size_t>(point) * num_configs;
    }
};

GainTable gain_table_for_codebook(const Codebook& cb, const std::vector<Codeword>& codewords,
                                  const AzEl& incident, const HypothesisGrid& grid);

/// Gains for arbitrary per-cell phase configurations (length Q^2 each).
GainTable gain_table_for_configs(const std::vector<cvec>& omegas, const ArrayGeometry& irs,
                                 const AzEl& incident, const HypothesisGrid& grid);

/// Closed-form maximizer of the likelihood over the channel scalar:
/// xi = sum_m g_m^* s^H r_m / sum_m N P_TX |g_m|^2.
cplx xi_tilde(const MeasurementSet& ms, const cplx* gains, double tx_power);

struct MlEstimate {
    Direction direction;
    int grid_index = 0;                  // h_theta * H + h_phi
    std::vector<double> log_likelihood;  // concentrated surface per grid point
};

/// Peak ML estimate: grid argmax of the likelihood concentrated over the
/// channel scalar. Ties break towards the smallest (theta, phi) index.
MlEstimate peak_ml_estimate(const MeasurementSet& ms, const HypothesisGrid& grid,
                            const GainTable& gains, const EndToEndContext& ctx);

/// Writes a likelihood surface as "theta,phi,loglik" CSV rows.
void write_likelihood_csv(std::ostream& os, const HypothesisGrid& grid,
                          const std::vector<double>& surface);

/// Snapshot covariance over pilot indices; requires identical pilot symbols.
Eigen::MatrixXcd music_covariance(const MeasurementSet& ms);

struct MusicEstimate {
    Direction direction;
    int grid_index = 0;
    bool degenerate_spectrum = false;  // eigenvalue spread below tolerance
    std::vector<double> pseudospectrum;
};

/// MUSIC grid estimate with the steering replacement stacking the expected
/// received samples g_m(psi) xi(psi) s_1 over the measurement configs;
/// the noise subspace is everything but the principal eigenvector.
MusicEstimate music_estimate(const Eigen::MatrixXcd& covariance, const MeasurementSet& ms,
                             const HypothesisGrid& grid, const GainTable& gains,
                             const EndToEndContext& ctx);

}  // namespace irstrack
