#include <doctest.h>

#include <random>
#include <sstream>

#include "irstrack/codebook.hpp"

using namespace irstrack;

namespace {
const double kLambda = 299792458.0 / 28e9;
}

TEST_CASE("profiles") {
    SUBCASE("linear profile is flat") {
        const BeamShape s = linear_profile(4);
        REQUIRE(s.size() == 4);
        for (double p : s.phases) CHECK(p == 0.0);
    }
    SUBCASE("quadratic member zero collapses to flat") {
        const BeamShape s = quadratic_profile(12, 9, kLambda / 2.0, kLambda, 0);
        for (double p : s.phases) CHECK(p == 0.0);
    }
    SUBCASE("quadratic phases follow the chirp formula with beta_bar = 2") {
        const int q_count = 10, m_count = 8, member = 3;
        const BeamShape s = quadratic_profile(q_count, m_count, kLambda / 2.0, kLambda, member);
        const double beta_bar = 2.0;  // min(4, lambda / (lambda/2))
        const double dbeta = beta_bar / m_count;
        const double beta_m = member * dbeta;
        for (int q = 1; q <= q_count; ++q) {
            const double expect = -2.0 * kPi * (kLambda / 2.0) / (m_count * kLambda) *
                                  (dbeta * member * q * q / (2.0 * q_count) + beta_m * q);
            CHECK(s.phases[q - 1] == doctest::Approx(expect).epsilon(1e-14));
        }
    }
    SUBCASE("member index validated") {
        CHECK_THROWS_AS(quadratic_profile(8, 4, kLambda / 2.0, kLambda, 4), std::out_of_range);
        CHECK_THROWS_AS(quadratic_profile(8, 4, kLambda / 2.0, kLambda, -1), std::out_of_range);
    }
}

TEST_CASE("codeword axis vectors") {
    const int q_count = 8;
    SUBCASE("center index of an even codebook is the all-ones ramp") {
        const Codebook cb(linear_profile(q_count), 10, q_count, kLambda / 2.0, kLambda,
                          BeamShapeKind::linear);
        const cvec v = cb.axis_vector(0, 5);  // 4 pi d m / (lambda M) = pi at m = M/2
        for (const cplx& x : v) CHECK(std::abs(x - cplx{1.0, 0.0}) < 1e-12);
    }
    SUBCASE("index zero alternates sign") {
        const Codebook cb(linear_profile(q_count), 10, q_count, kLambda / 2.0, kLambda,
                          BeamShapeKind::linear);
        const cvec v = cb.axis_vector(0, 0);  // phase -pi q
        for (int q = 1; q <= q_count; ++q) {
            const double expect = (q % 2 == 1) ? -1.0 : 1.0;
            CHECK(v[q - 1].real() == doctest::Approx(expect));
            CHECK(std::abs(v[q - 1].imag()) < 1e-12);
        }
    }
    SUBCASE("entries keep the shape modulus") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(-kPi, kPi);
        BeamShape s = linear_profile(q_count);
        for (double& p : s.phases) p = u(rng);
        const Codebook cb(s, 6, q_count, kLambda / 2.0, kLambda, BeamShapeKind::optimized);
        for (int m = 0; m < 6; ++m)
            for (const cplx& x : cb.axis_vector(1, m))
                CHECK(std::abs(x) == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("full codeword vectors are rank-1 when reshaped") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    const int q_count = 6;
    BeamShape s = linear_profile(q_count);
    for (double& p : s.phases) p = u(rng);
    const Codebook cb(s, 5, q_count, kLambda / 2.0, kLambda, BeamShapeKind::optimized);
    const cvec v = cb.full_vector({1, 3});
    REQUIRE(v.size() == static_cast<size_t>(q_count) * q_count);
    for (int i = 0; i < q_count; ++i) {
        for (int j = 0; j < q_count; ++j) {
            const cplx lhs = v[static_cast<size_t>(i) * q_count + j] * v[0];
            const cplx rhs = v[static_cast<size_t>(i) * q_count] * v[static_cast<size_t>(j)];
            CHECK(std::abs(lhs - rhs) < 1e-12);
        }
    }
}

TEST_CASE("reflection gain") {
    const int q_count = 16, m_count = 10;
    const Codebook cb(linear_profile(q_count), m_count, q_count, kLambda / 2.0, kLambda,
                      BeamShapeKind::linear);
    const AzEl broadside{0.0, 0.0};
    SUBCASE("coherent sum at the focused direction") {
        // m = M/2 points broadside for half-wavelength spacing.
        const cplx g = cb.reflection_gain({5, 5}, Direction{0.0, 0.0}, broadside);
        CHECK(std::abs(g) == doctest::Approx(static_cast<double>(q_count) * q_count));
    }
    SUBCASE("far outside the main lobe the gain is small") {
        const double delta = angular_spacing(m_count);
        const cplx g_peak = cb.reflection_gain({5, 5}, Direction{0.0, 0.0}, broadside);
        const cplx g_far = cb.reflection_gain({5, 5}, Direction{20.0 * delta, 0.0}, broadside);
        CHECK(std::abs(g_far) < 0.05 * std::abs(g_peak));
    }
    SUBCASE("bounded by the cell count") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            const cplx g = cb.reflection_gain({i % m_count, (i * 7) % m_count},
                                              Direction{u(rng), u(rng)}, broadside);
            CHECK(std::abs(g) <= q_count * q_count + 1e-9);
        }
    }
}

TEST_CASE("main lobe directions of the linear profile match the analytic factors") {
    const int q_count = 16, m_count = 25;
    const Codebook cb(linear_profile(q_count), m_count, q_count, kLambda / 2.0, kLambda,
                      BeamShapeKind::linear);
    SUBCASE("analytic factor formula") {
        CHECK(cb.analytic_axis_factor(12) == doctest::Approx(-0.04));
        CHECK(cb.analytic_axis_factor(0) == doctest::Approx(-1.0));
    }
    SUBCASE("peak search agrees within 1e-4 in factor space") {
        for (int m = 0; m < m_count; ++m) {
            CHECK(std::abs(cb.axis_peak_offset(0, m) - cb.analytic_axis_factor(m)) < 1e-4);
            CHECK(std::abs(cb.axis_peak_offset(1, m) - cb.analytic_axis_factor(m)) < 1e-4);
        }
    }
    SUBCASE("broadside codeword of an even codebook") {
        const Codebook cb_even(linear_profile(q_count), 10, q_count, kLambda / 2.0, kLambda,
                               BeamShapeKind::linear);
        const Direction d = cb_even.main_lobe_direction({5, 5}, {0.0, 0.0});
        CHECK(std::abs(d.theta) < 1e-4);
        CHECK(std::abs(d.phi) < 1e-4);
    }
    SUBCASE("argmax unaffected by a global phase rotation") {
        BeamShape rotated = linear_profile(q_count);
        for (double& p : rotated.phases) p += 1.234;
        const Codebook cb_rot(rotated, m_count, q_count, kLambda / 2.0, kLambda,
                              BeamShapeKind::linear);
        for (int m : {0, 3, 12, 24})
            CHECK(std::abs(cb_rot.axis_peak_offset(0, m) - cb.axis_peak_offset(0, m)) < 1e-5);
    }
}

TEST_CASE("shift covariance of the linear profile in the central region") {
    const int q_count = 16, m_count = 25;
    const Codebook cb(linear_profile(q_count), m_count, q_count, kLambda / 2.0, kLambda,
                      BeamShapeKind::linear);
    const double delta = angular_spacing(m_count);
    const AzEl broadside{0.0, 0.0};
    // Shifting the second codeword index by one and the horizontal angle by
    // Delta leaves the gain nearly unchanged away from large angles. The
    // second index steers the horizontal (theta) axis.
    for (int m : {11, 12, 13}) {
        for (double theta : {-0.05, 0.0, 0.04}) {
            const cplx g0 = cb.reflection_gain({m, m}, Direction{theta, 0.0}, broadside);
            const cplx g1 =
                cb.reflection_gain({m, m + 1}, Direction{theta + delta, 0.0}, broadside);
            CHECK(std::abs(std::abs(g1) - std::abs(g0)) <
                  1e-2 * static_cast<double>(q_count) * q_count);
        }
    }
}

TEST_CASE("angular spacing") {
    CHECK(angular_spacing(25) == doctest::Approx(0.08));
    CHECK(angular_spacing(25) * 180.0 / kPi == doctest::Approx(4.5837).epsilon(1e-4));
    CHECK(3.0 * angular_spacing(25) * 180.0 / kPi == doctest::Approx(13.751).epsilon(1e-4));
    CHECK(angular_spacing(1000) < angular_spacing(10));
}

TEST_CASE("beam shape serialization round trip") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    BeamShape s = linear_profile(12);
    for (double& p : s.phases) p = u(rng);
    std::stringstream ss;
    save_beam_shape(ss, s, BeamShapeKind::optimized, 25, kLambda / 2.0, kLambda);
    const LoadedBeamShape loaded = load_beam_shape(ss);
    CHECK(loaded.kind == BeamShapeKind::optimized);
    CHECK(loaded.m_count == 25);
    CHECK(loaded.spacing_over_wavelength == doctest::Approx(0.5));
    REQUIRE(loaded.shape.size() == s.size());
    for (int i = 0; i < s.size(); ++i) CHECK(loaded.shape.phases[i] == doctest::Approx(s.phases[i]));
}
