#include "irstrack/estimation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace irstrack {

void MeasurementSet::validate() const {
    if (codewords.size() != received.size())
        throw std::invalid_argument("measurement set: one received vector per codeword required");
    for (const cvec& r : received) {
        if (r.size() != pilot.size())
            throw std::invalid_argument("measurement set: received length must match pilot length");
    }
    if (pilot.empty()) throw std::invalid_argument("measurement set: empty pilot");
}

std::vector<Codeword> adjacent_codeword_set(const Codeword& center, int gamma, int m_count) {
    if (center.m1 < 0 || center.m1 >= m_count || center.m2 < 0 || center.m2 >= m_count)
        throw std::out_of_range("center codeword out of range");
    if (gamma < 0) throw std::invalid_argument("gamma must be non-negative");
    std::vector<Codeword> out;
    for (int m1 = std::max(0, center.m1 - gamma); m1 <= std::min(m_count - 1, center.m1 + gamma); ++m1)
        for (int m2 = std::max(0, center.m2 - gamma); m2 <= std::min(m_count - 1, center.m2 + gamma); ++m2)
            out.push_back({m1, m2});
    return out;
}

double HypothesisGrid::theta_at(int h) const {
    return center.theta - half_width + 2.0 * half_width * h / (points_per_axis - 1);
}

double HypothesisGrid::phi_at(int h) const {
    return center.phi - half_width + 2.0 * half_width * h / (points_per_axis - 1);
}

HypothesisGrid make_hypothesis_grid(const Direction& center, double coverage_width,
                                    int points_per_axis) {
    if (points_per_axis < 2) throw std::invalid_argument("hypothesis grid needs H >= 2");
    return {center, coverage_width / 2.0, points_per_axis};
}

HypothesisGrid build_hypothesis_grid(const Codeword& m_ide, const Codebook& cb,
                                     const AzEl& incident, int points_per_axis) {
    const double coverage = 3.0 * angular_spacing(cb.m_count());
    return make_hypothesis_grid(cb.main_lobe_direction(m_ide, incident), coverage, points_per_axis);
}

GainTable gain_table_for_codebook(const Codebook& cb, const std::vector<Codeword>& codewords,
                                  const AzEl& incident, const HypothesisGrid& grid) {
    GainTable table;
    table.num_points = grid.num_points();
    table.num_configs = static_cast<int>(codewords.size());
    table.gains.resize(static_cast<size_t>(table.num_points) * table.num_configs);
    const auto [i1, i2] = phase_factors(incident);

    // Per grid point only a handful of distinct axis indices appear; cache
    // the per-axis gains per point.
    std::vector<int> m1s, m2s;
    for (const Codeword& m : codewords) {
        bool seen1 = false, seen2 = false;
        for (int v : m1s) seen1 |= (v == m.m1);
        for (int v : m2s) seen2 |= (v == m.m2);
        if (!seen1) m1s.push_back(m.m1);
        if (!seen2) m2s.push_back(m.m2);
    }
    std::vector<cplx> g1(m1s.size()), g2(m2s.size());
    size_t idx = 0;
    for (int ht = 0; ht < grid.points_per_axis; ++ht) {
        for (int hp = 0; hp < grid.points_per_axis; ++hp) {
            const auto [a1, a2] = phase_factors(azel_from_direction(grid.point(ht, hp)));
            for (size_t i = 0; i < m1s.size(); ++i) g1[i] = cb.axis_gain(0, m1s[i], a1 - i1);
            for (size_t i = 0; i < m2s.size(); ++i) g2[i] = cb.axis_gain(1, m2s[i], a2 - i2);
            for (const Codeword& m : codewords) {
                size_t i1x = 0, i2x = 0;
                while (m1s[i1x] != m.m1) ++i1x;
                while (m2s[i2x] != m.m2) ++i2x;
                table.gains[idx++] = g1[i1x] * g2[i2x];
            }
        }
    }
    return table;
}

GainTable gain_table_for_configs(const std::vector<cvec>& omegas, const ArrayGeometry& irs,
                                 const AzEl& incident, const HypothesisGrid& grid) {
    GainTable table;
    table.num_points = grid.num_points();
    table.num_configs = static_cast<int>(omegas.size());
    table.gains.resize(static_cast<size_t>(table.num_points) * table.num_configs);
    const cvec a_inc = steering_vector(irs, incident);
    size_t idx = 0;
    for (int ht = 0; ht < grid.points_per_axis; ++ht) {
        for (int hp = 0; hp < grid.points_per_axis; ++hp) {
            const cvec a = steering_vector(irs, azel_from_direction(grid.point(ht, hp)));
            for (const cvec& w : omegas) {
                if (w.size() != a.size()) throw std::invalid_argument("config length mismatch");
                cplx sum = 0.0;
                for (size_t q = 0; q < a.size(); ++q) sum += std::conj(a[q]) * w[q] * a_inc[q];
                table.gains[idx++] = sum;
            }
        }
    }
    return table;
}

cplx xi_tilde(const MeasurementSet& ms, const cplx* gains, double tx_power) {
    const int n = ms.pilot_length();
    cplx num = 0.0;
    double den = 0.0;
    for (int i = 0; i < ms.num_configs(); ++i) {
        cplx sh_r = 0.0;
        for (int k = 0; k < n; ++k) sh_r += std::conj(ms.pilot[k]) * ms.received[i][k];
        num += std::conj(gains[i]) * sh_r;
        den += n * tx_power * std::norm(gains[i]);
    }
    if (den <= 0.0) throw std::domain_error("all hypothesis gains are zero");
    return num / den;
}

MlEstimate peak_ml_estimate(const MeasurementSet& ms, const HypothesisGrid& grid,
                            const GainTable& gains, const EndToEndContext& ctx) {
    ms.validate();
    if (gains.num_points != grid.num_points() || gains.num_configs != ms.num_configs())
        throw std::invalid_argument("gain table does not match grid/measurements");

    MlEstimate est;
    est.log_likelihood.resize(static_cast<size_t>(grid.num_points()));
    double best = -std::numeric_limits<double>::infinity();
    int best_idx = 0;
    const int h = grid.points_per_axis;
    const int n = ms.pilot_length();
    for (int p = 0; p < grid.num_points(); ++p) {
        const cplx* g = gains.row(p);
        const cplx xi = xi_tilde(ms, g, ctx.tx_power);
        double residual = 0.0;
        for (int i = 0; i < ms.num_configs(); ++i) {
            const cplx scale = g[i] * xi;
            for (int k = 0; k < n; ++k) residual += std::norm(ms.received[i][k] - scale * ms.pilot[k]);
        }
        const double ll = -residual;
        est.log_likelihood[p] = ll;
        if (ll > best) {
            best = ll;
            best_idx = p;
        }
    }
    est.grid_index = best_idx;
    est.direction = grid.point(best_idx / h, best_idx % h);
    return est;
}

void write_likelihood_csv(std::ostream& os, const HypothesisGrid& grid,
                          const std::vector<double>& surface) {
    os << "theta,phi,loglik\n";
    char buf[128];
    const int h = grid.points_per_axis;
    for (int p = 0; p < grid.num_points(); ++p) {
        const Direction d = grid.point(p / h, p % h);
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", d.theta, d.phi, surface[p]);
        os << buf;
    }
}

Eigen::MatrixXcd music_covariance(const MeasurementSet& ms) {
    ms.validate();
    for (int k = 1; k < ms.pilot_length(); ++k) {
        if (std::abs(ms.pilot[k] - ms.pilot[0]) > 1e-12 * std::abs(ms.pilot[0]))
            throw std::invalid_argument("snapshot covariance requires identical pilot symbols");
    }
    const int m = ms.num_configs();
    const int n = ms.pilot_length();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(m, m);
    Eigen::VectorXcd snap(m);
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < m; ++i) snap(i) = ms.received[i][k];
        s += snap * snap.adjoint();
    }
    return s / static_cast<double>(n);
}

MusicEstimate music_estimate(const Eigen::MatrixXcd& covariance, const MeasurementSet& ms,
                             const HypothesisGrid& grid, const GainTable& gains,
                             const EndToEndContext& ctx) {
    ms.validate();
    if (covariance.rows() != ms.num_configs() || covariance.cols() != ms.num_configs())
        throw std::invalid_argument("covariance size does not match measurement set");
    if (gains.num_points != grid.num_points() || gains.num_configs != ms.num_configs())
        throw std::invalid_argument("gain table does not match grid/measurements");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(covariance);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const int m = ms.num_configs();
    const Eigen::VectorXcd signal = eig.eigenvectors().col(m - 1);  // largest eigenvalue last

    MusicEstimate est;
    if (m >= 2) {
        const double l1 = eig.eigenvalues()(m - 1);
        const double l2 = eig.eigenvalues()(m - 2);
        est.degenerate_spectrum = (l2 > 0.0) && (l1 / l2 < 1.0 + 1e-9);
    }

    est.pseudospectrum.resize(static_cast<size_t>(grid.num_points()));
    const cplx s1 = ms.pilot[0];
    double best = -std::numeric_limits<double>::infinity();
    int best_idx = 0;
    for (int p = 0; p < grid.num_points(); ++p) {
        const cplx* g = gains.row(p);
        const cplx xi = xi_tilde(ms, g, ctx.tx_power);
        // a_music(psi)[i] = g_i(psi) * xi(psi) * s_1, normalized to unit
        // norm as usual for MUSIC scanning vectors; noise-subspace energy
        // = 1 - |u_1^H a|^2 / |a|^2 since the subspaces are complementary.
        double norm_a = 0.0;
        cplx proj = 0.0;
        for (int i = 0; i < m; ++i) {
            const cplx a = g[i] * xi * s1;
            norm_a += std::norm(a);
            proj += std::conj(signal(i)) * a;
        }
        if (norm_a <= 0.0) {
            est.pseudospectrum[p] = 0.0;
            continue;
        }
        const double denom = std::max(1.0 - std::norm(proj) / norm_a, 1e-15);
        const double value = 1.0 / denom;
        est.pseudospectrum[p] = value;
        if (value > best) {
            best = value;
            best_idx = p;
        }
    }
    est.grid_index = best_idx;
    est.direction = grid.point(best_idx / grid.points_per_axis, best_idx % grid.points_per_axis);
    return est;
}

}  // namespace irstrack
