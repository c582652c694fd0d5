#pragma once

#include <cstdint>
#include <optional>

#include "irstrack/beamopt.hpp"
#include "irstrack/config.hpp"
#include "irstrack/estimation.hpp"
#include "irstrack/tracking.hpp"

namespace irstrack {

/// Fixed time-block layout in integer nanoseconds. The block length is
/// derived from the target length by flooring the number of CE+D slot
/// pairs, so T = T_UC + T_IDE + eta (T_CE + T_DT) holds exactly.
struct TimeBlockSchedule {
    std::int64_t t_symbol = 0;  // T_S
    std::int64_t t_uc = 0;      // Q_UE * N_UC * T_S
    std::int64_t t_ide = 0;     // |M_k| * N_IDE * T_S
    std::int64_t t_ce = 0;      // N_CE * T_S
    std::int64_t t_dt = 0;      // data part of one CE+D slot
    int eta = 0;                // CE+D slots per block
    std::int64_t t_block = 0;   // exact block length

    std::int64_t slot_pair() const { return t_ce + t_dt; }
    std::int64_t block_start(int k) const { return static_cast<std::int64_t>(k) * t_block; }
    /// t_{k,kappa} = t_k + T_UC + T_IDE + kappa (T_CE + T_DT)
    std::int64_t slot_start(int k, int kappa) const {
        return block_start(k) + t_uc + t_ide + kappa * slot_pair();
    }
};

TimeBlockSchedule derive_schedule(double t_block_target_s, double t_ce_dt_ms, double t_s_us,
                                  int n_uc, int n_ide, int n_ce, int q_ue, int num_ide_codewords);

/// Overhead ratio of the proposed scheme, (T_UC + T_IDE + eta T_CE) / T.
double overhead_proposed(const TimeBlockSchedule& s);

/// Pilot count of the full-CSI estimation, L_r L_t ln(Q_IRS).
double focusing_pilot_count(int l_r, int l_t, int q_irs_total);

/// Focusing baseline overhead T_CE^B / (T_CE^B + T_DT^B), with the CE+DT
/// pair occupying one slot of the given length.
double overhead_focusing(double n_ce_b, double t_symbol_ns, double slot_pair_ns);

struct HierarchicalOverhead {
    double t_hs_ns = 0.0;  // search time per block
    int eta_hs = 0;
    std::int64_t t_block = 0;
    double gamma_hs = 0.0;
};

/// Two-level search overhead per the scaling model
/// T_HS = T_CE (M_total / N_HS^(L_C - 1) + N_HS (L_C - 1)).
HierarchicalOverhead derive_hierarchical_overhead(double t_block_target_s, double t_ce_dt_ms,
                                                  double t_s_us, int n_uc, int n_ce, int q_ue,
                                                  int m_per_axis, int n_hs, int l_c);

/// SNR and overhead-discounted rate: SNR = |h|^2 P / (Q_UE sigma^2),
/// R = (1 - Gamma) log2(1 + SNR).
std::pair<double, double> snr_and_rate(cplx h_e2e, double tx_power, double sigma2, int q_ue,
                                       double overhead);

/// Codebook-independent reference SNR |xi|^2 g_max^2 P / sigma^2.
double max_snr(cplx xi, double g_max, double tx_power, double sigma2);

/// Index of the largest entry; ties towards the lowest index.
int user_combining(const std::vector<double>& received_powers);

/// 2-D DFT codebook over a rows x cols array, one word per array element.
std::vector<cvec> dft_codebook(int rows, int cols);

/// Piecewise-linear/circular user path at constant speed in the z = const
/// plane of the movement region.
class Trajectory {
  public:
    enum class Kind { linear, nonlinear_circle };

    Position at(double t) const;          // clamps to [0, duration]
    double duration() const { return duration_; }
    Kind kind() const { return kind_; }
    /// Times of the non-smooth junctions (empty for linear kind).
    const std::vector<double>& transitions() const { return transitions_; }

    static Trajectory linear(const Position& center, double r1, double r2, double speed,
                             std::mt19937_64& rng);
    static Trajectory nonlinear_circle(const Position& center, double r1, double r2, double speed,
                                       std::mt19937_64& rng);

  private:
    Kind kind_ = Kind::linear;
    Position center_;
    double r1_ = 0.0, r2_ = 0.0, speed_ = 0.0;
    double entry_angle_ = 0.0, exit_angle_ = 0.0;
    Position lin_start_, lin_dir_;
    double duration_ = 0.0;
    std::vector<double> transitions_;
};

Trajectory generate_trajectory(const std::string& kind, const RunConfig& cfg, std::mt19937_64& rng);

struct MetricsRecord {
    double time_s = 0.0;
    double snr = 0.0;
    double effective_rate = 0.0;
    double prediction_error = 0.0;  // squared direction error, rad^2
    Codeword selected;
    std::string scheme;
    std::uint64_t trial_seed = 0;
};

struct ReconfigEvent {
    std::int64_t time_ns = 0;
    Codeword codeword;
};

struct BlockRecord {
    int block = 0;
    double t_estimate = 0.0;
    Direction estimate;
    Direction truth;
    double mean_prediction_error = 0.0;
    bool coverage_hit = true;  // truth inside the hypothesis coverage
};

struct SchemeRunResult {
    std::vector<MetricsRecord> metrics;
    std::vector<BlockRecord> blocks;    // proposed scheme only
    std::vector<ReconfigEvent> events;  // DT codeword applications
    bool lost = false;
    int lost_block = -1;
    double mean_snr = 0.0;   // linear average over samples
    double mean_rate = 0.0;
    double overhead = 0.0;
};

/// Codebooks and geometry shared by all schemes of one trial.
struct SimSetup {
    RunConfig cfg;
    ArrayNode bs, irs;
    ArrayGeometry ue_geometry;
    std::vector<Scatterer> scatterers_t, scatterers_r;
    Codebook cb_dt;
    Codebook cb_ide;
    Codebook cb_wide;  // hierarchical stage-1 codebook
    MainLobeTable lobes_dt;
    MainLobeTable lobes_ide;
    double incident_a1 = 0.0, incident_a2 = 0.0;  // BS seen from the IRS
    cvec f_bs;
    TimeBlockSchedule schedule;
    double sigma2 = 0.0;

    SimSetup(const RunConfig& cfg, const BeamShape& ide_shape, std::mt19937_64& scene_rng);
};

SchemeRunResult run_ut_scheme(const SimSetup& setup, const Trajectory& traj, double tx_power,
                              int s_max_override, std::mt19937_64& rng);
SchemeRunResult run_focusing_baseline(const SimSetup& setup, const Trajectory& traj,
                                      double tx_power, std::mt19937_64& rng);
SchemeRunResult run_perfect_codeword_baseline(const SimSetup& setup, const Trajectory& traj,
                                              double tx_power, std::mt19937_64& rng);
SchemeRunResult run_hierarchical_baseline(const SimSetup& setup, const Trajectory& traj,
                                          double tx_power, std::mt19937_64& rng);

struct CampaignRow {
    std::string scheme;
    double ptx_dbm = 0.0;
    double mean_snr_db = 0.0;
    double mean_rate = 0.0;
    double loss_prob = 0.0;
    int trials = 0;
};

struct CampaignResult {
    std::vector<CampaignRow> rows;
    std::vector<MetricsRecord> samples;  // optional detailed stream
};

/// Monte-Carlo sweep over (trajectory, noise repetition) pairs, transmit
/// powers, and schemes. Lost runs are excluded from the averages and
/// reported via loss_prob. Deterministic for a fixed config and seed,
/// independent of num_threads.
CampaignResult mc_campaign(const RunConfig& cfg, const BeamShape& ide_shape, int num_threads,
                           bool keep_samples = false);

struct EstimationRow {
    std::string scheme;  // ml|music x optimized|quadratic|random
    double msnr_db = 0.0;
    double mse = 0.0;
    double lower_bound_mse = 0.0;
    double random_guess_mse = 0.0;
    int trials = 0;
};

/// Direction-estimation error sweep over the maximum SNR, with common
/// random numbers across the sweep points. `per_trial`, when given, receives
/// the squared errors as [msnr_index][scheme_index][trial].
std::vector<EstimationRow> run_estimation_campaign(
    const RunConfig& cfg, const BeamShape& optimized_shape,
    std::vector<std::vector<std::vector<double>>>* per_trial = nullptr);

/// Scheme order of the estimation campaign rows and of `per_trial`.
const std::vector<std::string>& estimation_scheme_names();

/// End-to-end gain of one codeword at a user position via the axis-factored
/// fast path (shared with the runners).
cplx codeword_e2e_gain(const SimSetup& setup, const Position& ue_pos, const cvec& f_ue,
                       const Codebook& cb, const Codeword& m);

/// The same trial channel in explicit path form (full steering vectors and
/// Rice-scaled amplitudes) for cross-checking against end_to_end_gain.
Links build_trial_links(const SimSetup& setup, const Position& ue_pos);

/// Kalman-filter prediction error over the sample times of a finished
/// proposed-scheme run, driven by the same per-block direction estimates.
std::vector<MetricsRecord> kalman_prediction_series(const SimSetup& setup, const Trajectory& traj,
                                                    const SchemeRunResult& proposed_run,
                                                    double q_var, double r_var);

/// Quadratic starting shape for the direction-estimation design.
BeamShape ide_design_initializer(const RunConfig& cfg);

/// Design parameters derived from the run config; fills in the coverage
/// center and, where left at 0, the design SNR and step size.
DesignConfig make_design_config(const RunConfig& cfg);

/// The direction-estimation beam shape: loaded from cfg.ide_shape_file when
/// set, otherwise optimized from the quadratic initializer.
BeamShape obtain_ide_shape(const RunConfig& cfg, DesignResult* report = nullptr);

}  // namespace irstrack
