#include <doctest.h>

#include <cmath>
#include <vector>

#include "simarr/error.hpp"
#include "simarr/system_config.hpp"

using namespace simarr;
using D = ScalarDistribution;

namespace {

ServiceModel reference_model() { return ServiceModel::ordered_increments({D::exponential(2), D::exponential(4)}); }

cplx lst_at(const ServiceModel& m, std::vector<cplx> s) { return m.joint_lst(s); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("scalar distributions: moments and transforms") {
    CHECK(D::exponential(2).mean() == doctest::Approx(0.5));
    CHECK(D::erlang(3, 2).second_moment() == doctest::Approx(3.0 / 4 + 9.0 / 4));
    CHECK(D::deterministic(1.5).lst(2.0).real() == doctest::Approx(std::exp(-3.0)));
    const auto h = D::hyperexponential({0.3, 0.7}, {1.0, 5.0});
    CHECK(h.mean() == doctest::Approx(0.3 + 0.7 / 5));
    CHECK(h.lst(1.0).real() == doctest::Approx(0.3 / 2 + 0.7 * 5 / 6));
    const auto z = D::zero_inflated(0.4, D::exponential(1));
    CHECK(z.lst(1.0).real() == doctest::Approx(0.4 + 0.6 * 0.5));
    CHECK(z.mean() == doctest::Approx(0.6));
    const auto c = D::convolution({D::exponential(2), D::deterministic(1)});
    CHECK(c.mean() == doctest::Approx(1.5));
    CHECK(std::abs(c.lst(cplx(1, 1)) - 2.0 / cplx(3, 1) * std::exp(-cplx(1, 1))) < 1e-14);

    // complement without cancellation
    const auto e = D::exponential(3);
    CHECK(std::abs(e.lst_complement(1e-12).real() / (1e-12 / (3 + 1e-12)) - 1.0) < 1e-14);
    CHECK(e.mgf(1.0).value() == doctest::Approx(1.5));
    CHECK_FALSE(e.mgf(3.0).has_value());
}

TEST_CASE("joint LST examples") {
    const auto m = reference_model();
    CHECK(std::abs(lst_at(m, {0.0, 0.0}) - 1.0) < 1e-15);
    CHECK(std::abs(lst_at(m, {1.0, 1.0}) - 4.0 / 9.0) < 1e-15);

    const auto p = ServiceModel::proportional(D::exponential(1), {2.0, 0.5});
    // E exp(-(2 s + 0.5 t) sigma)
    CHECK(std::abs(lst_at(p, {1.0, 2.0}) - 1.0 / 4.0) < 1e-15);

    // tandem mapping model
    const auto tandem = ServiceModel::mixture(
        {0.5, 0.5}, {ServiceModel::ordered_increments({D::deterministic(0), D::exponential(2)}),
                     ServiceModel::ordered_increments({D::exponential(2), D::deterministic(0)})});
    const cplx s(0.7, 0.2), t(1.3, -0.4);
    const cplx expected = 0.5 * 2.0 / (2.0 + s + t) + 0.5 * 2.0 / (2.0 + s);
    CHECK(std::abs(lst_at(tandem, {s, t}) - expected) < 1e-14);

    CHECK_THROWS_AS(lst_at(m, {-1.0, 0.0}), Error);
}

TEST_CASE("sampling respects the ordering and the means") {
    Rng rng(7);
    std::vector<double> b(2);
    ServiceModel::ordered_increments({D::deterministic(1), D::deterministic(2)}).sample(rng, b);
    CHECK(b == std::vector<double>{3.0, 2.0});

    const auto p = ServiceModel::proportional(D::exponential(1), {3.0, 1.0});
    for (int i = 0; i < 1000; ++i) {
        p.sample(rng, b);
        REQUIRE(b[0] == 3.0 * b[1]);
    }

    const auto m = reference_model();
    const int n = 1000000;
    double s0 = 0, s1 = 0, q0 = 0, q1 = 0, lst = 0;
    for (int i = 0; i < n; ++i) {
        m.sample(rng, b);
        REQUIRE(b[0] >= b[1]);
        s0 += b[0];
        s1 += b[1];
        q0 += b[0] * b[0];
        q1 += b[1] * b[1];
        lst += std::exp(-b[0] - b[1]);
    }
    const double m0 = s0 / n, m1 = s1 / n;
    CHECK(std::abs(m0 - 0.75) < 3 * std::sqrt((q0 / n - m0 * m0) / n));
    CHECK(std::abs(m1 - 0.25) < 3 * std::sqrt((q1 / n - m1 * m1) / n));
    CHECK(std::abs(lst / n - 4.0 / 9.0) < 2e-3);
}

TEST_CASE("proportional coefficients must be nonincreasing") {
    CHECK_THROWS_AS(ServiceModel::proportional(D::exponential(1), {1.0, 2.0}), Error);
    try {
        ServiceModel::proportional(D::exponential(1), {1.0, 2.0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OrderingViolated);
    }
}

TEST_CASE("loads and normalization") {
    const SystemConfig ref(1.0, reference_model());
    CHECK(ref.load(0) == doctest::Approx(0.75));
    CHECK(ref.load(1) == doctest::Approx(0.25));
    CHECK(ref.stable());

    const auto same = normalize(ref);
    CHECK(same.unit_speeds());
    CHECK(same.load(0) == ref.load(0));
    CHECK(std::abs(same.service().joint_lst(std::vector<cplx>{0.3, 0.9}) -
                   ref.service().joint_lst(std::vector<cplx>{0.3, 0.9})) == 0.0);

    const SystemConfig scaled(0.5, {2.0, 1.0}, ServiceModel::proportional(D::exponential(1), {2.0, 1.0}));
    const auto n = normalize(scaled);
    CHECK(n.unit_speeds());
    CHECK(n.original_speeds()[0] == 2.0);
    const auto& prop = std::get<ServiceModel::Proportional>(n.service().variant());
    CHECK(prop.coefficients == std::vector<double>{1.0, 1.0});
    CHECK(n.degenerate_levels() == std::vector<std::size_t>{2});

    const SystemConfig unstable(2.0, reference_model());
    try {
        normalize(unstable);
        FAIL("expected UnstableSystem");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnstableSystem);
    }

    // Unequal speeds break the increment structure.
    const SystemConfig oi(1.0, {1.0, 2.0}, reference_model());
    try {
        normalize(oi);
        FAIL("expected OrderingViolated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OrderingViolated);
    }
}

TEST_CASE("select and leading") {
    const SystemConfig k3(1.0, ServiceModel::ordered_increments(
                                   {D::exponential(2), D::exponential(4), D::exponential(8)}));
    const std::size_t keep[] = {0, 2};
    const auto sub = k3.select(keep);
    CHECK(sub.dimension() == 2);
    CHECK(sub.load(0) == doctest::Approx(k3.load(0)));
    CHECK(sub.load(1) == doctest::Approx(k3.load(2)));
    const cplx s(0.4, 0.3), t(0.2, -0.1);
    CHECK(std::abs(sub.service().joint_lst(std::vector<cplx>{s, t}) -
                   k3.service().joint_lst(std::vector<cplx>{s, 0.0, t})) < 1e-15);
    CHECK(k3.leading(2).load(1) == doctest::Approx(k3.load(1)));
}

}  // TEST_SUITE
