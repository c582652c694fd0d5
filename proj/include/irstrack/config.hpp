#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irstrack/geometry.hpp"

namespace irstrack {

/// All experiment parameters with their defaults; loaded from a plain-text
/// "key = value" file with optional [section] headers and '#' comments.
/// Angles and powers use degrees/dBm at this boundary, radians/watts inside
/// the library.
struct RunConfig {
    // geometry
    Position p_bs{0.0, 0.0, 10.0};
    Position p_irs{-40.0, 40.0, 5.0};
    Position r_c{0.0, 40.0, 0.0};
    double r1 = 10.0;
    double r2 = 5.0;
    int q_irs = 40;
    int q_bs_rows = 16, q_bs_cols = 4;
    int q_ue_rows = 2, q_ue_cols = 2;
    double spacing_over_wavelength = 0.5;
    double f_c_ghz = 28.0;

    // channel
    int l_t = 4, l_r = 4;
    double k_t = 10.0, k_r = 10.0;
    double sigma2_dbm = -120.0;
    double upsilon_min = 0.5, upsilon_max = 1.0;
    double scatterer_box_half = 10.0;

    // schedule
    double t_block_s = 1.5;
    double t_ce_dt_ms = 1.29;
    double t_s_us = 4.16;
    int n_ide = 5;
    int n_uc = 5;
    int n_ce = 1;

    // codebooks
    int m_dt = 30;
    int m_ide = 30;
    int quad_member = -1;  // -1 selects M - 1, the widest family member
    int h_grid = 10;
    int gamma = 1;
    std::string ide_shape_file;

    // beam shape design
    int design_grid_g = 15;
    double design_snr = 0.0;  // 0 = derive from the initializer
    double design_step = 0.0; // 0 = derive from the initial gradient
    double design_decay = 1.0;
    double design_stop_tol = 1e-3;
    int design_max_iter = 500;

    // tracking
    int s_max = 3;
    int poly_degree = 1;
    std::vector<double> kalman_q_vars{1e-8, 1e-6, 1e-4};
    std::vector<double> kalman_r_vars{1e-8, 1e-6, 1e-4};

    // campaign
    double speed_kmh = 5.0;
    std::string trajectory_kind = "linear";  // linear | circle
    int num_trajectories = 12;
    int num_noise_reps = 10;
    std::uint64_t seed = 1;
    std::vector<double> ptx_dbm_sweep{0.0, 10.0, 20.0, 30.0};
    std::vector<std::string> schemes{"proposed", "focusing", "perfect", "hierarchical"};
    int metrics_stride = 1;
    int loss_consecutive = 2;

    // estimation campaign
    std::vector<double> msnr_db_sweep{0.0, 10.0, 20.0, 30.0};
    int estimate_trials = 500;

    // hierarchical baseline
    int n_hs = 4;
    int l_c = 2;

    double wavelength() const;
    double spacing() const { return spacing_over_wavelength * wavelength(); }
    double sigma2_watts() const;
    double speed_mps() const { return speed_kmh / 3.6; }

    void validate() const;
    /// Canonical "key = value" dump (sorted keys) used for hashing and the
    /// output manifests.
    std::string canonical_string() const;
    std::string hash_hex() const;
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses a config file; unknown keys and malformed lines raise ConfigError
/// with the line number. Values from IRSTRACK_<KEY> environment variables
/// override the file.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);
void apply_env_overrides(RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace irstrack
