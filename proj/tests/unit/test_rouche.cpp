#include <doctest.h>

#include <cmath>
#include <vector>

#ifdef SIMARR_HAVE_EIGEN
#include <unsupported/Eigen/Polynomials>
#endif

#include "simarr/error.hpp"
#include "simarr/rouche.hpp"

using namespace simarr;
using D = ScalarDistribution;

namespace {

SystemConfig reference() {
    return SystemConfig(1.0, ServiceModel::ordered_increments({D::exponential(2), D::exponential(4)}));
}

// z = s + t(s) solves z^2 + 3z - 4 + 8/(2+s) = 0; the busy-period root is
// the one with the larger real part.
cplx quadratic_root(cplx s) {
    const cplx c = -4.0 + 8.0 / (2.0 + s);
    const cplx d = std::sqrt(9.0 - 4.0 * c);
    const cplx a = (-3.0 + d) / 2.0, b = (-3.0 - d) / 2.0;
    return a.real() >= b.real() ? a : b;
}

}  // namespace

TEST_SUITE("rouche") {

TEST_CASE("t(s) against the quadratic on the real axis") {
    const auto cfg = reference();
    for (double s : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        const auto r = root_t(cfg, s);
        CHECK(std::abs(r.root - (quadratic_root(s) - s)) < 1e-10);
        CHECK(r.residual < 1e-10);
        CHECK(std::abs(r.root.imag()) < 1e-14);
        CHECK(r.partial_sum.real() > 0.0);
        CHECK(r.partial_sum.real() < cfg.lambda());
    }
    const auto half = root_t(cfg, 0.5);
    CHECK(half.root.real() == doctest::Approx(-0.253575080343).epsilon(1e-11));
    CHECK(half.ustar.real() == doctest::Approx(0.753575080343).epsilon(1e-11));
    CHECK(std::abs(half.partial_sum - (-3.0 + std::sqrt(12.2)) / 2.0) < 1e-12);
}

TEST_CASE("busy-period identity on a complex grid") {
    const auto cfg = reference();
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            const cplx s(0.05 + 0.6 * i, -3.0 + 0.65 * j);
            const auto r = root_t(cfg, s);
            CHECK(std::abs(cfg.lambda() * r.ustar - (cfg.lambda() - (s + r.root))) < 1e-10);
            CHECK(std::abs(r.partial_sum - quadratic_root(s)) < 1e-10);
            CHECK(std::abs(r.ustar) <= 1.0 + 1e-12);
        }
}

TEST_CASE("boundary s = 0 and continuity") {
    const auto cfg = reference();
    const auto zero = root_t(cfg, 0.0);
    CHECK(std::abs(zero.ustar - 1.0) < 1e-12);
    CHECK(std::abs(zero.partial_sum) < 1e-12);
    CHECK(std::abs(root_t(cfg, 1e-9).partial_sum) < 1e-8);

    // E U = -d/ds U*(s) at 0
    const double h = 1e-6;
    const double eu = (1.0 - root_t(cfg, h).ustar.real()) / h;
    CHECK(eu == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("level 3 chain and truncation") {
    const SystemConfig k3(1.0, ServiceModel::ordered_increments(
                                   {D::exponential(2), D::exponential(4), D::exponential(8)}));
    const std::vector<cplx> s{0.5, 0.0};
    const auto chain = root_chain(k3, s);
    REQUIRE(chain.size() == 2);
    CHECK(std::abs(chain[0].root - root_t(k3, 0.5).root) < 1e-13);

    // Level 3 with s2 = 0 is level 2 of the model built from (B1, B3).
    const std::size_t keep[] = {0, 2};
    const auto truncated = k3.select(keep);
    CHECK(std::abs(chain[1].root - root_t(truncated, 0.5).root) < 1e-10);

    // Exponential increments give a quadratic in z = s1 + s2 + S3.
    for (const cplx s1 : {cplx(0.3, 0.0), cplx(1.0, 2.0), cplx(0.2, -0.7)}) {
        const cplx s2(0.4, 0.1);
        const std::vector<cplx> arg{s1, s2};
        const auto r = fixed_point_U(k3, arg);
        const cplx ab = 2.0 / (2.0 + s1) * 4.0 / (4.0 + s1 + s2);
        // (1 - z)(8 + z) = 8 ab
        const cplx d = std::sqrt(49.0 - 4.0 * (8.0 * ab - 8.0));
        const cplx z1 = (-7.0 + d) / 2.0, z2 = (-7.0 - d) / 2.0;
        const cplx z = z1.real() > z2.real() ? z1 : z2;
        CHECK(std::abs(r.partial_sum - z) < 1e-10);
        CHECK(r.level == 3);
    }

    const auto all_zero = root_chain(k3, std::vector<cplx>{0.0, 0.0});
    for (const auto& r : all_zero) CHECK(std::abs(r.partial_sum) < 1e-12);
}

#ifdef SIMARR_HAVE_EIGEN
TEST_CASE("hyperexponential increment against polynomial roots") {
    const SystemConfig cfg(1.0, ServiceModel::ordered_increments(
                                    {D::exponential(2), D::hyperexponential({0.5, 0.5}, {4.0, 8.0})}));
    for (const cplx s : {cplx(0.5, 0.0), cplx(1.5, 1.0), cplx(0.1, -2.0), cplx(4.0, 0.5)}) {
        const cplx a = 2.0 / (2.0 + s);
        // -z^3 - 11 z^2 - (20 + 6a) z + 32 (1 - a) = 0
        Eigen::Matrix<cplx, 4, 1> coeffs;
        coeffs << 32.0 * (1.0 - a), -(20.0 + 6.0 * a), -11.0, -1.0;
        Eigen::PolynomialSolver<cplx, 3> solver(coeffs);
        const auto& roots = solver.roots();
        cplx best = roots[0];
        for (int i = 1; i < 3; ++i)
            if (roots[i].real() > best.real()) best = roots[i];
        const auto r = root_t(cfg, s);
        CHECK(std::abs(r.partial_sum - best) < 1e-9);
    }
}
#endif

TEST_CASE("degenerate levels are rejected") {
    const SystemConfig same(0.5, ServiceModel::proportional(D::exponential(1), {1.0, 1.0}));
    try {
        root_t(same, 1.0);
        FAIL("expected Degenerate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Degenerate);
    }
    const SystemConfig unstable(1.5, ServiceModel::ordered_increments({D::exponential(2), D::exponential(4)}));
    CHECK_THROWS_AS(root_t(unstable, 1.0), Error);
}

}  // TEST_SUITE
