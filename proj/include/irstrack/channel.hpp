#pragma once

#include <random>

#include "irstrack/geometry.hpp"

namespace irstrack {

struct Scatterer {
    Position position;
    double reflection_coefficient = 1.0;  // in (0, 1]
};

/// One hop of the cascaded channel in path form: per-path steering vectors
/// on both ends plus the diagonal amplitude coefficients. Path 0 is the
/// line-of-sight path.
struct LinkChannel {
    std::vector<cvec> steering_rx;   // receive-side steering vector per path
    std::vector<cvec> steering_tx;   // transmit-side steering vector per path
    std::vector<double> path_gains;  // diagonal amplitude entries, all > 0

    int num_paths() const { return static_cast<int>(path_gains.size()); }
};

/// Scalar collapse of everything around the IRS reflection gain: combined
/// LoS channel amplitudes, BS beamforming, and user combining; plus the
/// noise and power levels needed by the estimator.
struct EndToEndContext {
    cplx xi = 0.0;
    double noise_variance = 0.0;  // sigma^2, watts
    int ue_antennas = 1;          // Q_UE
    double tx_power = 0.0;        // P_TX, watts
};

/// Free-space power gain (upsilon * lambda / (4 pi distance))^2.
/// The channel amplitude coefficient is the square root of this value.
double path_gain(double distance, double reflection_coefficient, double wavelength);

/// Ratio of the LoS entry to the summed non-LoS entries of the path gain
/// diagonal.
double rice_factor(const LinkChannel& link);

/// Uniformly rescales the non-LoS gains so rice_factor(result) == target.
LinkChannel scale_for_rice_factor(const LinkChannel& link, double target_k);

struct ArrayNode {
    Position position;
    LocalFrame frame;
    ArrayGeometry geometry;
};

/// Single-bounce geometric links: LoS column first, one column per
/// scatterer with hop1+hop2 travelled distance.
LinkChannel build_link(const ArrayNode& tx, const ArrayNode& rx,
                       const std::vector<Scatterer>& scatterers);

struct Links {
    LinkChannel bs_to_irs;  // H_t
    LinkChannel irs_to_ue;  // H_r
};

Links build_links(const ArrayNode& bs, const ArrayNode& irs, const ArrayNode& ue,
                  const std::vector<Scatterer>& scatterers_t,
                  const std::vector<Scatterer>& scatterers_r);

/// f_ue^H H_r diag(omega) H_t f_bs via the path decomposition; exact.
cplx end_to_end_gain(const LinkChannel& h_t, const LinkChannel& h_r, const cvec& omega,
                     const cvec& f_bs, const cvec& f_ue);

/// Draws a circularly-symmetric complex Gaussian with the given variance.
cplx complex_gaussian(std::mt19937_64& rng, double variance);

/// LoS-only measurement r = g * xi * s + w, with per-sample noise variance
/// Q_UE * sigma^2.
cvec synthesize_measurement(const EndToEndContext& ctx, cplx reflection_gain, const cvec& pilot,
                            std::mt19937_64& rng);

/// Full multipath measurement r = h_e2e * s + w over the same noise model.
cvec full_measurement(const LinkChannel& h_t, const LinkChannel& h_r, const cvec& omega,
                      const cvec& f_bs, const cvec& f_ue, const cvec& pilot,
                      double noise_variance, std::mt19937_64& rng);

}  // namespace irstrack
