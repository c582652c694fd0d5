#include <doctest.h>

#include <random>

#include "irstrack/tracking.hpp"

using namespace irstrack;

namespace {
const double kLambda = 299792458.0 / 28e9;
}

TEST_CASE("estimate history ring buffer") {
    EstimateHistory h(3);
    h.push(0.0, {0.1, 0.2});
    h.push(1.0, {0.2, 0.3});
    h.push(2.0, {0.3, 0.4});
    h.push(3.0, {0.4, 0.5});
    CHECK(h.size() == 3);
    CHECK(h[0].first == 1.0);
    CHECK(h[2].first == 3.0);
    CHECK_THROWS_AS(h.push(3.0, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("polynomial fitting") {
    SUBCASE("exact line") {
        EstimateHistory h(5);
        h.push(0.0, {0.0, 0.0});
        h.push(1.0, {1.0, -1.0});
        h.push(2.0, {2.0, -2.0});
        const TrajectoryModel m = fit_polynomial(h, 1);
        for (double t : {0.5, 2.0, 3.5, 10.0}) {
            const Direction d = m.extrapolate(t);
            CHECK(d.theta == doctest::Approx(t).epsilon(1e-10));
            CHECK(d.phi == doctest::Approx(-t).epsilon(1e-10));
        }
    }
    SUBCASE("degree zero collapses to the mean") {
        EstimateHistory h(4);
        h.push(0.0, {1.0, 4.0});
        h.push(1.0, {2.0, 5.0});
        h.push(2.0, {6.0, 9.0});
        const TrajectoryModel m = fit_polynomial(h, 0);
        CHECK(m.extrapolate(17.0).theta == doctest::Approx(3.0));
        CHECK(m.extrapolate(-5.0).phi == doctest::Approx(6.0));
    }
    SUBCASE("raw coefficient evaluation") {
        TrajectoryModel m;
        m.degree = 1;
        m.fitted_at = 0.0;
        m.coefficients.resize(2, 2);
        m.coefficients << 0.0, 1.0, 0.0, -1.0;
        const Direction d = m.extrapolate(0.5);
        CHECK(d.theta == doctest::Approx(0.5));
        CHECK(d.phi == doctest::Approx(-0.5));
    }
    SUBCASE("underdetermined fits degrade the degree") {
        EstimateHistory h(4);
        h.push(1.5, {0.7, -0.3});
        const TrajectoryModel m = fit_polynomial(h, 1);
        CHECK(m.degree == 0);
        CHECK(m.extrapolate(100.0).theta == doctest::Approx(0.7));
        h.push(3.0, {0.8, -0.2});
        const TrajectoryModel m2 = fit_polynomial(h, 3);
        CHECK(m2.degree == 1);
    }
    SUBCASE("exactness on polynomial ground truth") {
        std::mt19937_64 rng(73);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int rep = 0; rep < 20; ++rep) {
            const double c0 = u(rng), c1 = u(rng), c2 = u(rng);
            const double d0 = u(rng), d1 = u(rng), d2 = u(rng);
            EstimateHistory h(6);
            for (int k = 0; k < 5; ++k) {
                const double t = 100.0 + 1.5 * k;  // large offsets stress conditioning
                h.push(t, {c0 + c1 * t + c2 * t * t, d0 + d1 * t + d2 * t * t});
            }
            const TrajectoryModel m = fit_polynomial(h, 2);
            for (double t : {100.0, 103.0, 110.0}) {
                CHECK(m.extrapolate(t).theta ==
                      doctest::Approx(c0 + c1 * t + c2 * t * t).epsilon(1e-9));
                CHECK(m.extrapolate(t).phi ==
                      doctest::Approx(d0 + d1 * t + d2 * t * t).epsilon(1e-9));
            }
        }
    }
    SUBCASE("least-squares stationarity") {
        std::mt19937_64 rng(79);
        std::uniform_real_distribution<double> u(-0.1, 0.1);
        EstimateHistory h(8);
        for (int k = 0; k < 8; ++k) h.push(1.5 * k, {0.01 * k + u(rng), -0.02 * k + u(rng)});
        const TrajectoryModel m = fit_polynomial(h, 1);
        // Gradient of the squared-error objective w.r.t. both coefficients.
        double g0 = 0.0, g1 = 0.0;
        for (int k = 0; k < 8; ++k) {
            const double tau = h[k].first - m.fitted_at;
            const double resid = h[k].second.theta - m.extrapolate(h[k].first).theta;
            g0 += resid;
            g1 += resid * tau;
        }
        CHECK(std::abs(g0) < 1e-8);
        CHECK(std::abs(g1) < 1e-8);
    }
}

TEST_CASE("codeword selection by nearest main lobe") {
    const int q_count = 12, m_count = 10;
    const Codebook cb(linear_profile(q_count), m_count, q_count, kLambda / 2.0, kLambda,
                      BeamShapeKind::linear);
    const MainLobeTable table(cb, AzEl{0.0, 0.0});
    SUBCASE("exact lobe returns that codeword") {
        const Direction lobe = table.lobe({7, 3});
        CHECK(table.nearest(lobe) == Codeword{7, 3});
    }
    SUBCASE("broadside prediction picks the half-index codeword") {
        TrajectoryModel m;
        m.degree = 0;
        m.fitted_at = 0.0;
        m.coefficients = Eigen::Matrix2Xd::Zero(2, 1);
        CHECK(select_dt_codeword(m, 5.0, table) == Codeword{5, 5});
        CHECK(select_ide_codeword(m, 5.0, table) == Codeword{5, 5});
    }
    SUBCASE("midpoint ties break towards the smaller index pair") {
        const Direction a = table.lobe({4, 4});
        const Direction b = table.lobe({4, 5});
        const Direction mid{(a.theta + b.theta) / 2.0, (a.phi + b.phi) / 2.0};
        const Codeword picked = table.nearest_of(mid, {{4, 5}, {4, 4}});
        CHECK(picked == Codeword{4, 4});
    }
    SUBCASE("selection invariant under uniform distance scaling") {
        // Scaling all lobe distances by a positive constant keeps the argmin.
        const Direction target{0.123, -0.05};
        const Codeword base = table.nearest(target);
        double best = 1e300;
        Codeword manual{0, 0};
        for (int m1 = 0; m1 < m_count; ++m1) {
            for (int m2 = 0; m2 < m_count; ++m2) {
                const Direction l = table.lobe({m1, m2});
                const double dt = l.theta - target.theta, dp = l.phi - target.phi;
                const double d = 7.5 * (dt * dt + dp * dp);
                if (d < best) {
                    best = d;
                    manual = {m1, m2};
                }
            }
        }
        CHECK(base == manual);
    }
}

TEST_CASE("Kalman tracker") {
    SUBCASE("prediction applies the constant-velocity model") {
        KalmanState s = kalman_init({0.1, 0.2}, 1.5, 0.0, 0.0);
        s.x << 0.1, 0.01, 0.2, -0.02;
        const KalmanState p = kalman_predict(s);
        CHECK(p.x(0) == doctest::Approx(0.115));
        CHECK(p.x(1) == doctest::Approx(0.01));
        CHECK(p.x(2) == doctest::Approx(0.17));
        CHECK(p.x(3) == doctest::Approx(-0.02));
    }
    SUBCASE("identity covariances give gain one half on the angles") {
        KalmanState s = kalman_init({0.0, 0.0}, 1.0, 0.0, 1.0);
        const KalmanState u = kalman_update(s, {1.0, -1.0});
        // K = P H^T (H P H^T + R)^-1 = 0.5 on the observed rows.
        CHECK(u.x(0) == doctest::Approx(0.5));
        CHECK(u.x(2) == doctest::Approx(-0.5));
        CHECK(u.x(1) == doctest::Approx(0.0));
    }
    SUBCASE("vanishing measurement noise pins the angles to the measurement") {
        KalmanState s = kalman_init({0.3, 0.4}, 1.0, 1e-6, 0.0);
        s = kalman_predict(s);
        const KalmanState u = kalman_update(s, {0.9, -0.8});
        CHECK(u.x(0) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(u.x(2) == doctest::Approx(-0.8).epsilon(1e-12));
    }
    SUBCASE("update never grows the covariance trace") {
        std::mt19937_64 rng(83);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        KalmanState s = kalman_init({0.0, 0.0}, 1.5, 1e-4, 1e-3);
        for (int k = 0; k < 50; ++k) {
            const KalmanState pred = kalman_predict(s);
            const KalmanState upd = kalman_update(pred, {u(rng), u(rng)});
            CHECK(upd.covariance.trace() <= pred.covariance.trace() + 1e-12);
            s = upd;
        }
    }
    SUBCASE("covariance stays symmetric positive semidefinite") {
        std::mt19937_64 rng(89);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        KalmanState s = kalman_init({0.0, 0.0}, 1.5, 1e-5, 1e-4);
        for (int k = 0; k < 100; ++k) {
            s = kalman_update(kalman_predict(s), {u(rng), u(rng)});
            CHECK((s.covariance - s.covariance.transpose()).norm() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(s.covariance);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
        }
    }
    SUBCASE("noise-free constant velocity is tracked exactly from the second block") {
        const double t_block = 1.5;
        const double v_theta = 0.01, v_phi = -0.02;
        KalmanState s = kalman_init({0.0, 0.5}, t_block, 0.0, 0.0);
        for (int k = 1; k < 8; ++k) {
            s = kalman_predict(s);
            const Direction truth{v_theta * t_block * k, 0.5 + v_phi * t_block * k};
            if (k >= 2) {
                CHECK(std::abs(s.x(0) - truth.theta) < 1e-9);
                CHECK(std::abs(s.x(2) - truth.phi) < 1e-9);
            }
            s = kalman_update(s, truth);
        }
    }
}
