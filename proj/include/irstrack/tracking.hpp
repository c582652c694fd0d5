#pragma once

#include <Eigen/Dense>
#include <deque>

#include "irstrack/codebook.hpp"

namespace irstrack {

/// Ring buffer of timestamped direction estimates, newest last; keeps at
/// most `capacity` entries.
class EstimateHistory {
  public:
    explicit EstimateHistory(int capacity);

    void push(double t, const Direction& d);
    int size() const { return static_cast<int>(entries_.size()); }
    int capacity() const { return capacity_; }
    const std::pair<double, Direction>& operator[](int i) const { return entries_[i]; }
    void clear() { entries_.clear(); }

  private:
    int capacity_;
    std::deque<std::pair<double, Direction>> entries_;
};

/// Per-axis polynomial trajectory model; coefficients are in powers of
/// (t - fitted_at) to keep the normal equations well conditioned.
struct TrajectoryModel {
    Eigen::Matrix2Xd coefficients;  // row 0: theta, row 1: phi
    int degree = 0;
    double fitted_at = 0.0;

    Direction extrapolate(double t) const;
};

/// Least-squares fit of degree `degree` over the buffered estimates via the
/// moment-matrix normal equations. With fewer samples than coefficients the
/// effective degree degrades to S - 1.
TrajectoryModel fit_polynomial(const EstimateHistory& history, int degree);

/// Cached main-lobe directions of a whole codebook for one incident wave.
class MainLobeTable {
  public:
    MainLobeTable(const Codebook& cb, const AzEl& incident);

    const Direction& lobe(const Codeword& m) const {
        return lobes_[static_cast<size_t>(m.m1) * m_count_ + m.m2];
    }
    int m_count() const { return m_count_; }

    /// Codeword whose main lobe is nearest (squared direction distance) to
    /// the target; ties break towards the smallest (m1, m2).
    Codeword nearest(const Direction& target) const;
    /// Same restricted to an explicit candidate list.
    Codeword nearest_of(const Direction& target, const std::vector<Codeword>& candidates) const;

  private:
    int m_count_;
    std::vector<Direction> lobes_;
};

Codeword select_dt_codeword(const TrajectoryModel& model, double t, const MainLobeTable& table);
Codeword select_ide_codeword(const TrajectoryModel& model, double t_next, const MainLobeTable& table);

/// Constant-velocity Kalman tracker on the state [theta, dtheta, phi, dphi].
struct KalmanState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d process_noise = Eigen::Matrix4d::Zero();
    Eigen::Matrix2d measurement_noise = Eigen::Matrix2d::Zero();
    double block_length = 1.0;  // T, seconds

    Direction direction() const { return {x(0), x(2)}; }
};

KalmanState kalman_init(const Direction& first_estimate, double block_length,
                        double process_noise_var, double measurement_noise_var);
KalmanState kalman_predict(const KalmanState& state);
KalmanState kalman_update(const KalmanState& state, const Direction& measurement);

}  // namespace irstrack
