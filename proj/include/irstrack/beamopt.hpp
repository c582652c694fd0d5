#pragma once

#include <string>

#include "irstrack/codebook.hpp"

namespace irstrack {

/// Parameters of the direction-estimation beam shape design.
struct DesignConfig {
    int q_count = 40;        // IRS cells per axis
    int m_count = 25;        // codewords per axis
    double spacing = 0.0;    // d, meters
    double wavelength = 0.0; // lambda, meters
    double design_snr = 0.0; // scale of the squared gain differences in the kernel
    int grid_g = 15;         // quadrature points per angular axis
    int gamma = 1;           // codeword neighborhood radius
    double step = 0.0;       // initial gradient step zeta
    double decay = 1.0;      // per-iteration step decay w in (0, 1]
    double stop_tol = 0.0;   // stop when ||w^l zeta grad||_2 < mu
    int max_iterations = 500;
    double coverage = 0.0;   // R per axis, radians; 0 = 3 * Delta
    double center_a1 = 0.0;  // coverage window center, per-axis phase factors
    double center_a2 = 0.0;

    double coverage_width() const { return coverage > 0.0 ? coverage : 3.0 * angular_spacing(m_count); }
    void validate() const;
};

/// Precomputed quadrature geometry shared by all objective evaluations for
/// one config: grid directions, their per-axis steering phase vectors, and
/// the codeword shift ramps of the neighborhood.
class MseObjectiveCache {
  public:
    explicit MseObjectiveCache(const DesignConfig& cfg);

    const DesignConfig& config() const { return cfg_; }
    int num_points() const { return static_cast<int>(points_.size()); }
    int num_offsets() const { return static_cast<int>(ramps_.size()); }

    double value(const BeamShape& shape) const;
    std::vector<double> gradient(const BeamShape& shape) const;
    void evaluate(const BeamShape& shape, double* value, std::vector<double>* gradient) const;

  private:
    DesignConfig cfg_;
    std::vector<Direction> points_;  // quadrature directions
    std::vector<cplx> steering_;     // [point][axis][q], exp(-j c A q~)
    std::vector<cvec> ramps_;        // codeword shift ramp per offset
    double cell_weight_ = 0.0;       // (R/G)^4 midpoint weight per pair
};

/// Approximate expected squared direction estimation error of the codebook
/// built from `shape`, up to a constant factor (midpoint-rule quadrature on
/// a G^2 x G^2 grid of direction pairs).
double mse_hat(const BeamShape& shape, const DesignConfig& cfg);

/// Analytic gradient of mse_hat with respect to the shape phases.
std::vector<double> mse_hat_gradient(const BeamShape& shape, const DesignConfig& cfg);

/// Unnormalized equivocation kernel between two directions: product over
/// the codeword neighborhood of exp(-snr |g_m(psi) - g_m(psi')|^2).
double equivocation_density(const Direction& psi, const Direction& psi_prime,
                            const BeamShape& shape, const DesignConfig& cfg);

/// Design SNR such that the center codeword's kernel at the coverage edge
/// is about exp(-1) for the given starting shape.
double default_design_snr(const BeamShape& shape, const DesignConfig& cfg);

/// Per-axis A-space peak offset of the center codeword for a shape; used
/// to center the coverage window before optimizing.
double shape_peak_offset(const BeamShape& shape, const DesignConfig& cfg);

struct DesignResult {
    BeamShape shape;
    bool converged = false;
    int iterations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double final_step_norm = 0.0;
    std::string stop_reason;
};

/// Gradient descent rho <- rho - w^l zeta grad with backtracking halving on
/// non-descending steps; stops once ||w^l zeta grad|| < mu or the iteration
/// cap is reached (cap sets converged = false).
DesignResult optimize_beam_shape(const BeamShape& init, const DesignConfig& cfg);

}  // namespace irstrack
