#include <doctest.h>

#include <random>

#include "irstrack/geometry.hpp"

using namespace irstrack;

TEST_CASE("direction from position") {
    const Position irs{-40.0, 40.0, 5.0};
    SUBCASE("on-normal point") {
        const Direction d = direction_from_position(irs + Position{1.0, 0.0, 0.0}, irs);
        CHECK(d.theta == doctest::Approx(0.0));
        CHECK(d.phi == doctest::Approx(0.0));
    }
    SUBCASE("user region center") {
        const Direction d = direction_from_position({0.0, 40.0, 5.0}, irs);
        CHECK(d.theta == doctest::Approx(0.0));
        CHECK(d.phi == doctest::Approx(0.0));
    }
    SUBCASE("45 degree horizontal") {
        const Direction d = direction_from_position({1.0, 1.0, 0.0}, {0.0, 0.0, 0.0});
        CHECK(d.theta == doctest::Approx(kPi / 4.0));
        CHECK(d.phi == doctest::Approx(0.0));
    }
    SUBCASE("behind the plane") {
        CHECK_THROWS_AS(direction_from_position({-41.0, 0.0, 0.0}, irs), std::domain_error);
        CHECK_THROWS_AS(direction_from_position({-40.0, 0.0, 0.0}, irs), std::domain_error);
    }
}

TEST_CASE("placing a point along a direction inverts direction_from_position") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uang(-1.2, 1.2);
    std::uniform_real_distribution<double> urange(0.5, 200.0);
    const Position irs{-40.0, 40.0, 5.0};
    for (int i = 0; i < 200; ++i) {
        const Direction d{uang(rng), uang(rng)};
        const Position p = position_from_direction(irs, d, urange(rng));
        const Direction back = direction_from_position(p, irs);
        CHECK(back.theta == doctest::Approx(d.theta).epsilon(1e-12));
        CHECK(back.phi == doctest::Approx(d.phi).epsilon(1e-12));
    }
}

TEST_CASE("azimuth/elevation mapping") {
    SUBCASE("boresight degenerates to zero") {
        const AzEl ae = azel_from_direction({0.0, 0.0});
        CHECK(ae.azimuth == 0.0);
        CHECK(ae.elevation == 0.0);
        const auto [a1, a2] = phase_factors(ae);
        CHECK(a1 == 0.0);
        CHECK(a2 == 0.0);
    }
    SUBCASE("symmetric diagonal") {
        const AzEl ae = azel_from_direction({kPi / 4.0, kPi / 4.0});
        CHECK(ae.elevation == doctest::Approx(std::atan(std::sqrt(2.0))));
        CHECK(ae.azimuth == doctest::Approx(kPi / 4.0));
    }
    SUBCASE("negative phi picks the +pi branch") {
        const AzEl ae = azel_from_direction({0.1, -0.1});
        CHECK(ae.azimuth == doctest::Approx(-kPi / 4.0 + kPi));
    }
    SUBCASE("range invariants") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uang(-1.4, 1.4);
        for (int i = 0; i < 500; ++i) {
            const AzEl ae = azel_from_direction({uang(rng), uang(rng)});
            CHECK(ae.elevation >= 0.0);
            CHECK(ae.elevation <= kPi / 2.0);
            CHECK(ae.azimuth >= 0.0);
            CHECK(ae.azimuth < 2.0 * kPi);
        }
    }
}

TEST_CASE("phase factors") {
    SUBCASE("boresight") {
        const auto [a1, a2] = phase_factors({0.3, 0.0});
        CHECK(a1 == doctest::Approx(0.0));
        CHECK(a2 == doctest::Approx(0.0));
    }
    SUBCASE("endfire along axis 1") {
        const auto [a1, a2] = phase_factors({0.0, kPi / 2.0});
        CHECK(a1 == doctest::Approx(1.0));
        CHECK(a2 == doctest::Approx(0.0));
    }
    SUBCASE("diagonal endfire") {
        const auto [a1, a2] = phase_factors({kPi / 4.0, kPi / 2.0});
        CHECK(a1 == doctest::Approx(std::sqrt(2.0) / 2.0));
        CHECK(a2 == doctest::Approx(std::sqrt(2.0) / 2.0));
    }
    SUBCASE("bounded by one") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> uaz(0.0, 2.0 * kPi);
        std::uniform_real_distribution<double> uel(0.0, kPi / 2.0);
        for (int i = 0; i < 200; ++i) {
            const auto [a1, a2] = phase_factors({uaz(rng), uel(rng)});
            CHECK(std::abs(a1) <= 1.0);
            CHECK(std::abs(a2) <= 1.0);
        }
    }
}

TEST_CASE("direction to phase factors and back") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uang(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Direction d{uang(rng), uang(rng)};
        const auto [a1, a2] = phase_factors(azel_from_direction(d));
        const Direction back = direction_from_phase_factors(a1, a2);
        CHECK(back.theta == doctest::Approx(d.theta).epsilon(1e-10));
        CHECK(back.phi == doctest::Approx(d.phi).epsilon(1e-10));
    }
}

TEST_CASE("frame-based factors agree with the angle chain for the IRS frame") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    const Position irs{-40.0, 40.0, 5.0};
    const LocalFrame frame = irs_frame();
    for (int i = 0; i < 100; ++i) {
        const Position p{irs.x + 5.0 + std::abs(u(rng)), irs.y + u(rng), irs.z + u(rng)};
        const auto [f1, f2] = phase_factors_towards(frame, irs, p);
        const auto [g1, g2] = phase_factors(azel_from_direction(direction_from_position(p, irs)));
        CHECK(f1 == doctest::Approx(g1).epsilon(1e-12));
        CHECK(f2 == doctest::Approx(g2).epsilon(1e-12));
    }
}

TEST_CASE("steering vectors") {
    const double lambda = 0.0107;
    SUBCASE("broadside gives the all-ones vector") {
        const ArrayGeometry g{5, 7, lambda / 2.0, lambda};
        const cvec a = steering_vector(g, {0.0, 0.0});
        REQUIRE(a.size() == 35);
        for (const cplx& x : a) {
            CHECK(x.real() == doctest::Approx(1.0));
            CHECK(x.imag() == doctest::Approx(0.0));
        }
    }
    SUBCASE("two-element endfire") {
        const cvec a = steering_axis(2, lambda / 2.0, lambda, 1.0);
        CHECK(a[0].real() == doctest::Approx(0.0));
        CHECK(a[0].imag() == doctest::Approx(-1.0));
        CHECK(a[1].real() == doctest::Approx(0.0));
        CHECK(a[1].imag() == doctest::Approx(1.0));
    }
    SUBCASE("three-element endfire") {
        const cvec a = steering_axis(3, lambda / 2.0, lambda, 1.0);
        CHECK(a[0].real() == doctest::Approx(-1.0));
        CHECK(a[1].real() == doctest::Approx(1.0));
        CHECK(a[2].real() == doctest::Approx(-1.0));
    }
    SUBCASE("unit modulus everywhere") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            const ArrayGeometry g{1 + i % 6, 1 + (i * 3) % 5, lambda * 0.3, lambda};
            const cvec a = steering_vector_from_factors(g, u(rng), u(rng));
            for (const cplx& x : a) CHECK(std::abs(x) == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
    SUBCASE("kronecker product matches the direct 2-D construction") {
        std::mt19937_64 rng(19);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const ArrayGeometry g{4, 6, lambda * 0.4, lambda};
        for (int rep = 0; rep < 20; ++rep) {
            const double a1 = u(rng), a2 = u(rng);
            const cvec a = steering_vector_from_factors(g, a1, a2);
            const double c = 2.0 * kPi * g.spacing / g.wavelength;
            for (int q1 = 0; q1 < g.rows; ++q1) {
                for (int q2 = 0; q2 < g.cols; ++q2) {
                    const double ph = c * (a1 * (q1 - 0.5 * (g.rows - 1)) +
                                           a2 * (q2 - 0.5 * (g.cols - 1)));
                    const cplx expect = std::polar(1.0, ph);
                    const cplx got = a[static_cast<size_t>(q1) * g.cols + q2];
                    CHECK(std::abs(got - expect) < 1e-12);
                }
            }
        }
    }
    SUBCASE("conjugate symmetry in the factors") {
        const ArrayGeometry g{3, 4, lambda / 2.0, lambda};
        const cvec a = steering_vector_from_factors(g, 0.37, -0.21);
        const cvec b = steering_vector_from_factors(g, -0.37, 0.21);
        for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - std::conj(b[i])) < 1e-12);
    }
}

TEST_CASE("kron ordering") {
    const cvec a{cplx{1, 0}, cplx{0, 1}};
    const cvec b{cplx{1, 0}, cplx{-1, 0}};
    const cvec k = kron(a, b);
    REQUIRE(k.size() == 4);
    CHECK(k[0] == cplx{1, 0});
    CHECK(k[1] == cplx{-1, 0});
    CHECK(k[2] == cplx{0, 1});
    CHECK(k[3] == cplx{0, -1});
}
