#include "irstrack/tracking.hpp"

#include <cmath>

namespace irstrack {

EstimateHistory::EstimateHistory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("history capacity must be positive");
}

void EstimateHistory::push(double t, const Direction& d) {
    if (!entries_.empty() && t <= entries_.back().first)
        throw std::invalid_argument("history timestamps must be strictly increasing");
    entries_.emplace_back(t, d);
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

Direction TrajectoryModel::extrapolate(double t) const {
    const double tau = t - fitted_at;
    const int n = static_cast<int>(coefficients.cols());
    double th = 0.0, ph = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        th = th * tau + coefficients(0, i);
        ph = ph * tau + coefficients(1, i);
    }
    return {th, ph};
}

TrajectoryModel fit_polynomial(const EstimateHistory& history, int degree) {
    const int s = history.size();
    if (s < 1) throw std::invalid_argument("cannot fit a trajectory without estimates");
    if (degree < 0) throw std::invalid_argument("polynomial degree must be non-negative");
    const int eff_degree = std::min(degree, s - 1);
    const int n_coef = eff_degree + 1;
    const double t_ref = history[s - 1].first;

    // Moment matrix [Pi_t(i+j)] and right-hand sides Pi_nu(i) over the
    // recentred timestamps.
    Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(n_coef, n_coef);
    Eigen::VectorXd rhs_theta = Eigen::VectorXd::Zero(n_coef);
    Eigen::VectorXd rhs_phi = Eigen::VectorXd::Zero(n_coef);
    std::vector<double> powers(static_cast<size_t>(2 * eff_degree + 1));
    for (int k = 0; k < s; ++k) {
        const double tau = history[k].first - t_ref;
        powers[0] = 1.0;
        for (size_t p = 1; p < powers.size(); ++p) powers[p] = powers[p - 1] * tau;
        for (int i = 0; i < n_coef; ++i) {
            for (int j = 0; j < n_coef; ++j) moments(i, j) += powers[i + j];
            rhs_theta(i) += history[k].second.theta * powers[i];
            rhs_phi(i) += history[k].second.phi * powers[i];
        }
    }

    const auto solver = moments.ldlt();
    TrajectoryModel model;
    model.degree = eff_degree;
    model.fitted_at = t_ref;
    model.coefficients.resize(2, n_coef);
    model.coefficients.row(0) = solver.solve(rhs_theta).transpose();
    model.coefficients.row(1) = solver.solve(rhs_phi).transpose();
    return model;
}

MainLobeTable::MainLobeTable(const Codebook& cb, const AzEl& incident) : m_count_(cb.m_count()) {
    lobes_.reserve(static_cast<size_t>(m_count_) * m_count_);
    for (int m1 = 0; m1 < m_count_; ++m1)
        for (int m2 = 0; m2 < m_count_; ++m2)
            lobes_.push_back(cb.main_lobe_direction({m1, m2}, incident));
}

namespace {

double dir_dist2(const Direction& a, const Direction& b) {
    const double dt = a.theta - b.theta, dp = a.phi - b.phi;
    return dt * dt + dp * dp;
}

}  // namespace

Codeword MainLobeTable::nearest(const Direction& target) const {
    Codeword best{0, 0};
    double best_d = std::numeric_limits<double>::infinity();
    for (int m1 = 0; m1 < m_count_; ++m1) {
        for (int m2 = 0; m2 < m_count_; ++m2) {
            const double d = dir_dist2(lobes_[static_cast<size_t>(m1) * m_count_ + m2], target);
            if (d < best_d) {
                best_d = d;
                best = {m1, m2};
            }
        }
    }
    return best;
}

Codeword MainLobeTable::nearest_of(const Direction& target,
                                   const std::vector<Codeword>& candidates) const {
    if (candidates.empty()) throw std::invalid_argument("empty candidate set");
    Codeword best = candidates.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const Codeword& m : candidates) {
        const double d = dir_dist2(lobe(m), target);
        if (d < best_d || (d == best_d && m < best)) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

Codeword select_dt_codeword(const TrajectoryModel& model, double t, const MainLobeTable& table) {
    return table.nearest(model.extrapolate(t));
}

Codeword select_ide_codeword(const TrajectoryModel& model, double t_next,
                             const MainLobeTable& table) {
    return table.nearest(model.extrapolate(t_next));
}

KalmanState kalman_init(const Direction& first_estimate, double block_length,
                        double process_noise_var, double measurement_noise_var) {
    KalmanState s;
    s.x << first_estimate.theta, 0.0, first_estimate.phi, 0.0;
    // The position entries are a direct measurement, so they start at the
    // measurement noise level; the unknown velocities start at unit variance.
    s.covariance = Eigen::Matrix4d::Identity();
    s.covariance(0, 0) = measurement_noise_var;
    s.covariance(2, 2) = measurement_noise_var;
    s.process_noise = process_noise_var * Eigen::Matrix4d::Identity();
    s.measurement_noise = measurement_noise_var * Eigen::Matrix2d::Identity();
    s.block_length = block_length;
    return s;
}

namespace {

Eigen::Matrix<double, 2, 4> observation_matrix() {
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = 1.0;
    h(1, 2) = 1.0;
    return h;
}

}  // namespace

KalmanState kalman_predict(const KalmanState& state) {
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 1) = state.block_length;
    f(2, 3) = state.block_length;
    KalmanState out = state;
    out.x = f * state.x;
    out.covariance = f * state.covariance * f.transpose() + state.process_noise;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose().eval());
    return out;
}

KalmanState kalman_update(const KalmanState& state, const Direction& measurement) {
    const auto h = observation_matrix();
    const Eigen::Matrix2d innovation_cov = h * state.covariance * h.transpose() + state.measurement_noise;
    if (std::abs(innovation_cov.determinant()) < 1e-300) {
        // Fully converged noise-free filter: the gain limit is zero.
        if (state.measurement_noise.isZero(0.0) && state.process_noise.isZero(0.0)) return state;
        throw std::runtime_error("singular innovation covariance in Kalman update");
    }
    const Eigen::Matrix<double, 4, 2> gain =
        state.covariance * h.transpose() * innovation_cov.inverse();
    Eigen::Vector2d z;
    z << measurement.theta, measurement.phi;
    KalmanState out = state;
    out.x = state.x + gain * (z - h * state.x);
    out.covariance = (Eigen::Matrix4d::Identity() - gain * h) * state.covariance;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose().eval());
    return out;
}

}  // namespace irstrack
