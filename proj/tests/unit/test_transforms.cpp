#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "simarr/transforms.hpp"

using namespace simarr;
using D = ScalarDistribution;

namespace {

SystemConfig reference() {
    return SystemConfig(1.0, ServiceModel::ordered_increments({D::exponential(2), D::exponential(4)}));
}

SystemConfig three_queues() {
    return SystemConfig(1.0, ServiceModel::ordered_increments(
                                 {D::exponential(2), D::exponential(4), D::exponential(8)}));
}

// phi(s, 0) of the reference model, and the M/G/1 workload transform of queue 1.
cplx phi_first(cplx s) { return 2.0 / (2.0 + s) * 4.0 / (4.0 + s); }
cplx pk_first(cplx s) { return 0.25 * s / (s - (1.0 - phi_first(s))); }

cplx t_of(cplx s) {
    const cplx d = std::sqrt(9.0 - 4.0 * (-4.0 + 8.0 / (2.0 + s)));
    return (-3.0 + d) / 2.0 - s;
}

std::vector<cplx> grid20() {
    std::vector<cplx> g;
    for (int i = 0; i < 20; ++i) g.emplace_back(0.1 + 0.37 * i, 0.9 * std::sin(1.3 * i));
    return g;
}

TandemSystem symmetric_tandem() { return {0.5, 0.5, D::exponential(2), D::exponential(2)}; }

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("normalization and the first marginal") {
    const auto cfg = reference();
    CHECK(std::abs(psi2(cfg, 0.0, 0.0).value - 1.0) < 1e-14);
    CHECK(std::abs(psi2(cfg, 1.0, 0.0).value - 0.46875) < 1e-13);
    for (double s = 0.1; s < 10.0; s += 0.2) CHECK(std::abs(psi2(cfg, s, 0.0).value - pk_first(s)) < 1e-12);
    for (const cplx s : grid20()) CHECK(std::abs(psi2(cfg, s, 0.0).value - pk_first(s)) < 1e-12);
    // P(queue 1 empty)
    CHECK(std::abs(phi_first(1.0) * psi2(cfg, 1.0, 0.0).value - 0.25) < 1e-13);
}

TEST_CASE("second marginal is M/G/1 with Exp(4) service") {
    const auto cfg = reference();
    for (const cplx t : grid20()) {
        const cplx expected = 0.75 * t / (t - (1.0 - 4.0 / (4.0 + t)));
        CHECK(std::abs(psi2(cfg, 0.0, t).value - expected) < 1e-11);
        CHECK(std::abs(marginal_lst(cfg, 1, t) - expected) < 1e-12);
    }
}

TEST_CASE("values on the positive quadrant") {
    const auto cfg = reference();
    CHECK(psi2(cfg, 1.0, 1.0).value.real() == doctest::Approx(0.458197536).epsilon(1e-9));
    double prev = 1.0;
    for (double s = 0.25; s < 8.0; s += 0.25) {
        const double v = psi2(cfg, s, 0.7).value.real();
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
}

TEST_CASE("removable singularity at t = t(s)") {
    const auto cfg = reference();
    for (const cplx s : {cplx(0.5, 0.0), cplx(1.2, 0.4)}) {
        const cplx t = t_of(s);
        const auto at = psi2(cfg, s, t);
        CHECK(at.branch == Branch::Limit);
        const double d = 1e-3;
        const cplx mid = 0.5 * (psi2(cfg, s, t + d).value + psi2(cfg, s, t - d).value);
        CHECK(std::abs(at.value - mid) < 1e-5);
    }
}

TEST_CASE("analyticity: mean value over a circle") {
    const auto cfg = reference();
    const cplx s0(1.0, 0.3), t0(0.8, -0.2);
    const int n = 64;
    cplx acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n;
        acc += psi2(cfg, s0 + 0.5 * std::polar(1.0, th), t0).value;
    }
    CHECK(std::abs(acc / double(n) - psi2(cfg, s0, t0).value) < 1e-10);
}

TEST_CASE("decomposition into the modified process and the P-K factor") {
    const auto cfg = reference();
    for (const cplx s : grid20()) {
        const cplx t(0.3 * s.real(), -0.5 * s.imag() + 0.2);
        const std::vector<cplx> st{s, t};
        const cplx lhs = psi2(cfg, s, t).value;
        CHECK(std::abs(lhs - pk_factor(cfg, s).value * psi_tilde(cfg, st).value) < 1e-10);
        CHECK(std::abs(lhs - psi_decomposed(cfg, st).value) < 1e-10);
    }
    CHECK(std::abs(psi_tilde(cfg, std::vector<cplx>{0.0, 0.0}).value - 1.0) < 1e-12);

    // psi~(s, lambda - s) phi(s, lambda - s) = (1 - rho_2)(lambda - s - t(s)) / lambda
    const double s = 0.5;
    const std::vector<cplx> edge{s, 1.0 - s};
    const cplx phi = 2.0 / (2.0 + s) * 4.0 / 5.0;
    CHECK(std::abs(psi_tilde(cfg, edge).value * phi - 0.75 * (1.0 - s - t_of(s))) < 1e-10);

    CHECK(std::abs(pk_factor(cfg, 1e-9).value - 1.0) < 1e-7);
    CHECK(std::abs(pk_factor(cfg, 1e7).value - 1.0 / 3.0) < 1e-6);
}

TEST_CASE("K = 3: trailing zeros and factorizations") {
    const auto k3 = three_queues();
    const auto k2 = k3.leading(2);
    for (const cplx s : grid20()) {
        const cplx t(0.5, 0.1 * s.real());
        const std::vector<cplx> arg{s, t, 0.0};
        CHECK(std::abs(psiK(k3, arg).value - psi2(k2, s, t).value) < 1e-10);
        const std::vector<cplx> full{s, t, cplx(0.2, -0.3)};
        const cplx v = psiK(k3, full).value;
        CHECK(std::abs(v - psi_decomposed(k3, full).value) < 1e-10);
        CHECK(std::abs(v - psi_decomposed(k3, full, true).value) < 1e-10);
    }
    CHECK(std::abs(psiK(k3, std::vector<cplx>{0.0, 0.0, 0.0}).value - 1.0) < 1e-13);
}

TEST_CASE("work conservation of the virtual level-2 system") {
    const auto k3 = three_queues();
    for (const cplx s : grid20()) {
        const std::vector<cplx> arg{s};
        const cplx direct = fixed_point_U(k3, arg).ustar;
        CHECK(std::abs(virtual_level2_ustar(k3, s) - direct) < 1e-10);
    }
}

TEST_CASE("survival transform") {
    const auto cfg = reference();
    CHECK(std::abs(survival_lt(cfg, 1.0, 1.0) - psi2(cfg, 1.0, 1.0).value) < 1e-14);
    CHECK(std::abs(1e6 * 1e6 * survival_lt(cfg, 1e6, 1e6) - 0.25) < 1e-4);
    CHECK(std::abs(1e-6 * 1e-6 * survival_lt(cfg, 1e-6, 1e-6) - 1.0) < 1e-4);
}

TEST_CASE("kernel equation residual") {
    const auto cfg = reference();
    CHECK(kernel_residual(cfg, 1.0, 1.0) < 1e-9);
    CHECK(kernel_residual(cfg, 0.5, 2.0) < 1e-9);
    CHECK(kernel_residual(cfg, 0.0, 1.5) < 1e-12);
    for (const cplx s : grid20()) CHECK(kernel_residual(cfg, s, cplx(1.0, -s.imag())) < 1e-9);
}

TEST_CASE("tandem fluid network") {
    const auto sys = symmetric_tandem();
    const auto [a, b] = tandem_crosscheck(sys, 1.0, 0.5);
    CHECK(std::abs(a - b) < 1e-9);
    // total workload is M/G/1 with rate 1, Exp(2) jobs, 2 stages for class 1
    const auto cfg = tandem_config(sys);
    CHECK(cfg.load(0) == doctest::Approx(0.5));
    const auto [x, y] = tandem_crosscheck(sys, 0.7, 0.0);
    CHECK(std::abs(x - y) < 1e-9);
    const auto [o1, o2] = tandem_crosscheck(sys, 0.0, 0.0);
    CHECK(std::abs(o1 - 1.0) < 1e-12);
    CHECK(std::abs(o2 - 1.0) < 1e-12);
    for (const cplx s : grid20()) {
        const auto [p, q] = tandem_crosscheck(sys, s, 0.5 * std::conj(s));
        CHECK(std::abs(p - q) < 1e-9);
    }
}

TEST_CASE("preemptive priority mapping") {
    const auto sys = symmetric_tandem();
    const auto [a, b] = priority_crosscheck(sys, 1.0, 0.4);
    CHECK(std::abs(a - b) < 1e-9);
    // psi_Y(s, s): total work of an M/G/1 queue with Exp(2) jobs at rate 1
    for (double s : {0.3, 1.0, 2.5}) {
        const auto [p, q] = priority_crosscheck(sys, s, s);
        const double total = 0.5 * s / (s - (1.0 - 2.0 / (2.0 + s)));
        CHECK(std::abs(p - total) < 1e-10);
        CHECK(std::abs(q - total) < 1e-10);
    }
}

TEST_CASE("speed scaling maps s to c s") {
    // Proportional(Erlang(2,2); 1.5, 0.5), lambda 0.8, speeds (2, 1)
    const SystemConfig raw(0.8, {2.0, 1.0},
                           ServiceModel::proportional(D::erlang(2, 2.0), {1.5, 0.5}));
    const auto cfg = normalize(raw);
    const double c1 = 2.0, lambda = 0.8;
    for (double s : {0.2, 1.0, 3.0}) {
        // raw queue 1: M/G/1 in work units served at rate c1, jobs 1.5 sigma
        const double bstar = std::pow(2.0 / (2.0 + 1.5 * s), 2);
        const double rho = lambda * 1.5 / c1;
        const double expected = (1.0 - rho) * s / (s - lambda / c1 * (1.0 - bstar));
        CHECK(std::abs(psi2(cfg, c1 * s, 0.0).value.real() - expected) < 1e-12);
    }
}

}  // TEST_SUITE
