#include <doctest.h>

#include <random>
#include <sstream>

#include "irstrack/estimation.hpp"

using namespace irstrack;

namespace {

const double kLambda = 299792458.0 / 28e9;

struct Fixture {
    int q_count = 12;
    int m_count = 9;
    Codebook cb{linear_profile(12), 9, 12, kLambda / 2.0, kLambda, BeamShapeKind::linear};
    AzEl incident{0.0, 0.0};
    Codeword center{4, 4};
    std::vector<Codeword> m_set = adjacent_codeword_set({4, 4}, 1, 9);
    HypothesisGrid grid;
    GainTable table;
    EndToEndContext ctx{cplx{1.0, 0.0}, 1e-2, 4, 1.0};

    Fixture() {
        grid = build_hypothesis_grid(center, cb, incident, 10);
        table = gain_table_for_codebook(cb, m_set, incident, grid);
    }

    MeasurementSet measure_at(int grid_point, cplx xi, double sigma2, std::mt19937_64& rng) const {
        MeasurementSet ms;
        ms.codewords = m_set;
        ms.pilot = cvec(5, cplx{1.0, 0.0});
        for (int i = 0; i < static_cast<int>(m_set.size()); ++i) {
            cvec r(ms.pilot.size());
            for (size_t n = 0; n < r.size(); ++n) {
                r[n] = table.row(grid_point)[i] * xi * ms.pilot[n] +
                       complex_gaussian(rng, ctx.ue_antennas * sigma2);
            }
            ms.received.push_back(std::move(r));
        }
        return ms;
    }
};

}  // namespace

TEST_CASE("adjacent codeword sets") {
    CHECK(adjacent_codeword_set({3, 3}, 0, 9).size() == 1);
    CHECK(adjacent_codeword_set({3, 3}, 1, 9).size() == 9);
    CHECK(adjacent_codeword_set({0, 0}, 1, 9).size() == 4);
    CHECK(adjacent_codeword_set({0, 4}, 1, 9).size() == 6);
    CHECK(adjacent_codeword_set({8, 8}, 1, 9).size() == 4);
    CHECK_THROWS_AS(adjacent_codeword_set({9, 0}, 1, 9), std::out_of_range);
}

TEST_CASE("hypothesis grids") {
    const Direction c{0.1, -0.2};
    SUBCASE("H = 2 gives the four corners") {
        const HypothesisGrid g = make_hypothesis_grid(c, 0.4, 2);
        CHECK(g.num_points() == 4);
        CHECK(g.theta_at(0) == doctest::Approx(c.theta - 0.2));
        CHECK(g.theta_at(1) == doctest::Approx(c.theta + 0.2));
        CHECK(g.phi_at(0) == doctest::Approx(c.phi - 0.2));
        CHECK(g.phi_at(1) == doctest::Approx(c.phi + 0.2));
    }
    SUBCASE("uniform spacing R / (H - 1)") {
        const HypothesisGrid g = make_hypothesis_grid(c, 0.9, 10);
        for (int h = 0; h + 1 < 10; ++h)
            CHECK(g.theta_at(h + 1) - g.theta_at(h) == doctest::Approx(0.1));
    }
    SUBCASE("center is a grid point only for odd H") {
        const HypothesisGrid odd = make_hypothesis_grid(c, 0.4, 5);
        CHECK(odd.theta_at(2) == doctest::Approx(c.theta));
        const HypothesisGrid even = make_hypothesis_grid(c, 0.4, 6);
        for (int h = 0; h < 6; ++h) CHECK(std::abs(even.theta_at(h) - c.theta) > 1e-6);
    }
    SUBCASE("single-point grids rejected") {
        CHECK_THROWS_AS(make_hypothesis_grid(c, 0.4, 1), std::invalid_argument);
    }
}

TEST_CASE("profile-likelihood channel scalar") {
    Fixture f;
    std::mt19937_64 rng(61);
    SUBCASE("noiseless plug-in identity") {
        const cplx xi{0.7, -1.3};
        const MeasurementSet ms = f.measure_at(37, xi, 0.0, rng);
        const cplx est = xi_tilde(ms, f.table.row(37), f.ctx.tx_power);
        CHECK(std::abs(est - xi) < 1e-12);
    }
    SUBCASE("linear in the measurements") {
        const MeasurementSet ms = f.measure_at(12, cplx{1.0, 0.5}, 0.1, rng);
        MeasurementSet scaled = ms;
        const cplx c{2.0, -1.0};
        for (auto& r : scaled.received)
            for (auto& x : r) x *= c;
        const cplx a = xi_tilde(ms, f.table.row(12), f.ctx.tx_power);
        const cplx b = xi_tilde(scaled, f.table.row(12), f.ctx.tx_power);
        CHECK(std::abs(b - c * a) < 1e-12 * std::abs(b));
    }
    SUBCASE("all-zero gains rejected") {
        const MeasurementSet ms = f.measure_at(0, cplx{1.0, 0.0}, 0.0, rng);
        const std::vector<cplx> zeros(ms.num_configs(), cplx{0.0, 0.0});
        CHECK_THROWS_AS(xi_tilde(ms, zeros.data(), 1.0), std::domain_error);
    }
    SUBCASE("matches a numeric 2-D maximization") {
        for (int rep = 0; rep < 10; ++rep) {
            const MeasurementSet ms = f.measure_at(rep * 7 % 100, cplx{0.4, 0.9}, 0.05, rng);
            const cplx* gains = f.table.row(rep * 7 % 100);
            const cplx closed = xi_tilde(ms, gains, f.ctx.tx_power);

            // Compass pattern search on the concentrated residual.
            const auto residual = [&](cplx xi) {
                double r = 0.0;
                for (int i = 0; i < ms.num_configs(); ++i)
                    for (size_t n = 0; n < ms.pilot.size(); ++n)
                        r += std::norm(ms.received[i][n] - gains[i] * xi * ms.pilot[n]);
                return r;
            };
            cplx x = 0.0;
            double step = 2.0 * (std::abs(closed) + 1.0);
            double best = residual(x);
            while (step > 1e-9) {
                bool improved = false;
                for (const cplx d : {cplx{1, 0}, cplx{-1, 0}, cplx{0, 1}, cplx{0, -1}}) {
                    const cplx cand = x + step * d;
                    const double v = residual(cand);
                    if (v < best) {
                        best = v;
                        x = cand;
                        improved = true;
                    }
                }
                if (!improved) step *= 0.5;
            }
            CHECK(std::abs(closed - x) < 1e-6 * std::max(1.0, std::abs(closed)));
        }
    }
}

TEST_CASE("peak ML estimation") {
    Fixture f;
    std::mt19937_64 rng(67);
    SUBCASE("noiseless recovery at grid points") {
        for (int p : {0, 17, 42, 73, 99}) {
            const MeasurementSet ms = f.measure_at(p, cplx{0.8, 0.1}, 0.0, rng);
            const MlEstimate est = peak_ml_estimate(ms, f.grid, f.table, f.ctx);
            CHECK(est.grid_index == p);
        }
    }
    SUBCASE("profile likelihood dominates random channel scalars") {
        const MeasurementSet ms = f.measure_at(55, cplx{1.0, -0.2}, 0.2, rng);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int p : {3, 55, 88}) {
            const cplx* gains = f.table.row(p);
            const cplx xi_hat = xi_tilde(ms, gains, f.ctx.tx_power);
            const auto residual = [&](cplx xi) {
                double r = 0.0;
                for (int i = 0; i < ms.num_configs(); ++i)
                    for (size_t n = 0; n < ms.pilot.size(); ++n)
                        r += std::norm(ms.received[i][n] - gains[i] * xi * ms.pilot[n]);
                return r;
            };
            const double best = residual(xi_hat);
            for (int rep = 0; rep < 100; ++rep)
                CHECK(best <= residual(cplx{u(rng), u(rng)}) * (1.0 + 1e-12));
        }
    }
    SUBCASE("estimate always lies on the grid") {
        for (int rep = 0; rep < 20; ++rep) {
            const MeasurementSet ms = f.measure_at(31, cplx{0.2, 0.2}, 1.0, rng);
            const MlEstimate est = peak_ml_estimate(ms, f.grid, f.table, f.ctx);
            CHECK(est.grid_index >= 0);
            CHECK(est.grid_index < f.grid.num_points());
            const Direction d = f.grid.point(est.grid_index / 10, est.grid_index % 10);
            CHECK(est.direction.theta == d.theta);
            CHECK(est.direction.phi == d.phi);
        }
    }
    SUBCASE("likelihood surface exports as CSV") {
        const MeasurementSet ms = f.measure_at(5, cplx{1.0, 0.0}, 0.0, rng);
        const MlEstimate est = peak_ml_estimate(ms, f.grid, f.table, f.ctx);
        std::ostringstream os;
        write_likelihood_csv(os, f.grid, est.log_likelihood);
        const std::string text = os.str();
        CHECK(text.rfind("theta,phi,loglik\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 101);
    }
}

TEST_CASE("MUSIC estimation") {
    Fixture f;
    std::mt19937_64 rng(71);
    SUBCASE("covariance requires identical pilots") {
        MeasurementSet ms = f.measure_at(10, cplx{1.0, 0.0}, 0.0, rng);
        ms.pilot[2] = cplx{0.5, 0.5};
        CHECK_THROWS_AS(music_covariance(ms), std::invalid_argument);
    }
    SUBCASE("single snapshot covariance has rank one") {
        MeasurementSet ms = f.measure_at(10, cplx{1.0, 0.0}, 0.3, rng);
        ms.pilot.resize(1);
        for (auto& r : ms.received) r.resize(1);
        const Eigen::MatrixXcd s = music_covariance(ms);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(s);
        const auto& ev = eig.eigenvalues();
        for (int i = 0; i < ev.size() - 1; ++i) CHECK(std::abs(ev(i)) < 1e-10 * ev(ev.size() - 1));
    }
    SUBCASE("noiseless snapshots align the principal eigenvector with the gains") {
        const int p = 64;
        const cplx xi{0.9, 0.4};
        const MeasurementSet ms = f.measure_at(p, xi, 0.0, rng);
        const Eigen::MatrixXcd s = music_covariance(ms);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(s);
        const Eigen::VectorXcd u1 = eig.eigenvectors().col(ms.num_configs() - 1);
        Eigen::VectorXcd a(ms.num_configs());
        for (int i = 0; i < ms.num_configs(); ++i) a(i) = f.table.row(p)[i] * xi;
        const double cosine = std::abs((u1.adjoint() * a)(0, 0)) / (u1.norm() * a.norm());
        CHECK(cosine == doctest::Approx(1.0).epsilon(1e-10));

        const MusicEstimate est = music_estimate(s, ms, f.grid, f.table, f.ctx);
        CHECK(est.grid_index == p);
    }
    SUBCASE("unit-modulus snapshot scaling leaves the argmax unchanged") {
        const MeasurementSet ms = f.measure_at(33, cplx{1.0, 0.3}, 0.1, rng);
        MeasurementSet rotated = ms;
        for (auto& r : rotated.received)
            for (auto& x : r) x *= std::polar(1.0, 1.1);
        const MusicEstimate a =
            music_estimate(music_covariance(ms), ms, f.grid, f.table, f.ctx);
        const MusicEstimate b =
            music_estimate(music_covariance(rotated), rotated, f.grid, f.table, f.ctx);
        CHECK(a.grid_index == b.grid_index);
    }
}
