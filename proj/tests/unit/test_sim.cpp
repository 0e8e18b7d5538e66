#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "simarr/error.hpp"
#include "simarr/sim.hpp"
#include "simarr/transforms.hpp"

using namespace simarr;
using D = ScalarDistribution;

namespace {

SystemConfig reference() {
    return SystemConfig(1.0, ServiceModel::ordered_increments({D::exponential(2), D::exponential(4)}));
}

bool within(const SimEstimate& e, double expected, double sigmas = 4.0) {
    return std::abs(e.estimate - expected) <= sigmas * e.std_error;
}

const JointSamples& reference_path() {
    static const JointSamples path = run_lindley(reference(), 1000000, 42);
    return path;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("service shorter than every gap keeps the system empty") {
    LindleyOptions opts;
    opts.deterministic_interarrival = 2.0;
    LindleyPath path(2, 1.0, [](Rng&, std::span<double> b) { b[0] = 1.0; b[1] = 0.5; }, 1, 0, opts);
    for (int n = 0; n < 1000; ++n) {
        REQUIRE(path.current()[0] == 0.0);
        REQUIRE(path.current()[1] == 0.0);
        path.advance();
    }
}

TEST_CASE("path invariants and reproducibility") {
    const auto& p = reference_path();
    CHECK(p.rows() == 1000000);
    CHECK(p.regeneration[0] == 1);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const auto r = p.row(i);
        REQUIRE(r[1] >= 0.0);
        REQUIRE(r[0] >= r[1]);
        REQUIRE(p.regeneration[i] == (r[0] == 0.0));
    }
    const auto again = run_lindley(reference(), 5000, 42);
    CHECK(std::equal(again.values.begin(), again.values.end(), p.values.begin()));
    const auto other = run_lindley(reference(), 5000, 43);
    CHECK_FALSE(std::equal(other.values.begin(), other.values.end(), p.values.begin()));
    CHECK_THROWS_AS(run_lindley(reference(), 999, 1), Error);
}

TEST_CASE("empty fraction and mean workload of queue 2") {
    const auto& p = reference_path();
    const auto empty = estimate_empty_fraction(p);
    CHECK(within(empty, 0.25));
    CHECK(empty.n_cycles >= kMinCycles);
    // Pollaczek-Khinchine mean: lambda E[B2^2] / (2 (1 - rho2))
    const auto mean2 = estimate_mean(p, 1);
    CHECK(within(mean2, (2.0 / 16.0) / (2.0 * 0.75)));
}

TEST_CASE("empirical transform") {
    const auto& p = reference_path();
    const auto est = estimate_lst(p, {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
    CHECK(est[0].estimate == doctest::Approx(1.0));
    CHECK(est[0].std_error == doctest::Approx(0.0));
    const double phi = 2.0 / 3.0 * 4.0 / 5.0;
    CHECK(std::abs(est[1].estimate * phi - 0.25) <= 4.0 * est[1].std_error * phi);
    CHECK(within(est[2], psi2(reference(), 1.0, 1.0).value.real()));
}

TEST_CASE("cycles are uncorrelated") {
    const auto cycles = cycle_sums(reference_path(), [](std::span<const double> v) { return v[0]; });
    const std::size_t n = cycles.size();
    REQUIRE(n > 1000);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = cycles[i].first;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        den += (y[i] - mean) * (y[i] - mean);
        if (i + 1 < n) num += (y[i] - mean) * (y[i + 1] - mean);
    }
    CHECK(std::abs(num / den) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("too few cycles") {
    JointSamples s;
    s.dimension = 1;
    s.values.assign(20, 0.0);
    s.regeneration.assign(20, 1);
    s.arrivals = 20;
    try {
        estimate_lst(s, {{1.0}});
        FAIL("expected InsufficientCycles");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientCycles);
    }
}

TEST_CASE("streamed estimates are deterministic") {
    const std::vector<std::vector<double>> grid{{0.5, 0.5}};
    const auto a = estimate_lst_stream(reference(), grid, 200000, 9);
    const auto b = estimate_lst_stream(reference(), grid, 200000, 9);
    CHECK(a[0].estimate == b[0].estimate);
    CHECK(a[0].std_error == b[0].std_error);
    CHECK(within(a[0], psi2(reference(), 0.5, 0.5).value.real()));
}

TEST_CASE("extra work at the end of a queue-2 busy period") {
    const auto u = sample_U(reference(), 2, 200000, 5);
    CHECK(u.kind == EpochKind::CycleSummary);
    CHECK(u.dimension == 1);
    CHECK(within(iid_mean(u)[0], 2.0 / 3.0));
    CHECK(within(iid_lst(u, {{0.5}})[0], 0.753575080343));

    const SystemConfig same(0.5, ServiceModel::proportional(D::exponential(1), {1.0, 1.0}));
    try {
        sample_U(same, 2, 100, 1);
        FAIL("expected Degenerate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Degenerate);
    }
}

TEST_CASE("modified process") {
    const auto cfg = reference();
    const auto mod = simulate_modified(cfg, 200000, 42, 2);
    const auto plain = run_lindley(cfg, 200000, 42);
    for (std::size_t i = 0; i < mod.rows(); ++i) {
        REQUIRE(mod.row(i)[1] == plain.row(i)[1]);
        REQUIRE(mod.row(i)[0] <= plain.row(i)[0]);
    }
    const std::vector<std::vector<double>> grid{{0.5, 0.5}, {1.0, 0.0}, {2.0, 1.0}};
    const auto est = estimate_lst(mod, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::vector<cplx> s{grid[g][0], grid[g][1]};
        CHECK(within(est[g], psi_tilde(cfg, s).value.real()));
    }
}

TEST_CASE("duality: single claims, zero capital and random cases") {
    const auto cfg = reference();
    for (double u : {0.0, 0.1, 0.5, 2.0}) {
        const std::vector<double> cap{u, u};
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto r = verify_duality(cfg, cap, 1, seed);
            REQUIRE(r.all_hold());
        }
    }
    const std::vector<double> zero{0.0, 0.0};
    CHECK(verify_duality(cfg, zero, 500, 3).all_hold());
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto c = random_duality_case(17, i);
        CHECK(c.n_claims >= 1);
        CHECK(c.n_claims <= 10000);
        REQUIRE(verify_duality(c.config, c.u, c.n_claims, c.seed).all_hold());
    }
    int detected = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto c = random_duality_case(17, i);
        detected += !verify_duality(c.config, c.u, c.n_claims, c.seed, DualityFault{0}).all_hold();
    }
    CHECK(detected > 0);
}

TEST_CASE("ruin probabilities") {
    const auto cfg = reference();
    CHECK(adjustment_coefficient(cfg) == doctest::Approx((5.0 - std::sqrt(17.0)) / 2.0));

    const std::vector<double> zero{0.0, 0.0};
    const auto z = ruin_probability_mc(cfg, zero, 200, 20000, 4);
    CHECK(std::abs(z.both_survive.estimate - 0.25) <= 4 * z.both_survive.std_error + z.truncation_bound);
    CHECK(z.truncation_bound < 1e-3);
    const double total = z.both_survive.estimate + z.both_ruined.estimate + z.only_first_ruined.estimate +
                         z.only_second_ruined.estimate;
    CHECK(total == doctest::Approx(1.0));
    // ruin of book 2 implies ruin of book 1
    CHECK(z.only_second_ruined.estimate == 0.0);

    const std::vector<double> large{60.0, 60.0};
    const auto l = ruin_probability_mc(cfg, large, 200, 2000, 4);
    CHECK(l.both_survive.estimate > 0.999);
}

}  // TEST_SUITE
