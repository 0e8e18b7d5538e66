#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "simarr/rng.hpp"

namespace simarr {

using cplx = std::complex<double>;

/// A nonnegative univariate law with a closed-form Laplace-Stieltjes transform.
///
/// Values are immutable; copies share nested components.
class ScalarDistribution {
public:
    struct Exponential {
        double rate;
    };
    struct Erlang {
        int shape;
        double rate;
    };
    struct Deterministic {
        double value;
    };
    struct Hyperexponential {
        std::vector<double> weights;
        std::vector<double> rates;
    };
    /// Atom of mass p0 at zero, otherwise distributed as `inner`.
    struct ZeroInflated {
        double p0;
        std::shared_ptr<const ScalarDistribution> inner;
    };
    /// Sum of independent parts. Produced when coordinates of an
    /// ordered-increments model are dropped.
    struct Convolution {
        std::vector<ScalarDistribution> parts;
    };

    using Variant =
        std::variant<Exponential, Erlang, Deterministic, Hyperexponential, ZeroInflated, Convolution>;

    static ScalarDistribution exponential(double rate);
    static ScalarDistribution erlang(int shape, double rate);
    static ScalarDistribution deterministic(double value);
    static ScalarDistribution hyperexponential(std::vector<double> weights,
                                               std::vector<double> rates);
    static ScalarDistribution zero_inflated(double p0, ScalarDistribution inner);
    static ScalarDistribution convolution(std::vector<ScalarDistribution> parts);

    const Variant& variant() const { return v_; }

    double mean() const;
    double second_moment() const;
    double variance() const { return second_moment() - mean() * mean(); }

    /// E exp(-z X), for Re z >= 0.
    cplx lst(cplx z) const;
    /// 1 - E exp(-z X), computed without cancellation for small |z|.
    cplx lst_complement(cplx z) const;

    /// E exp(theta X) for real theta, or nullopt at or beyond the abscissa.
    std::optional<double> mgf(double theta) const;
    /// Supremum of theta with finite mgf (may be +inf).
    double mgf_abscissa() const;

    double sample(Rng& rng) const;

    bool almost_surely_zero() const;

    /// Law of factor * X, factor > 0.
    ScalarDistribution scaled(double factor) const;

    std::string describe() const;

private:
    explicit ScalarDistribution(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

/// exp(w) - 1 for complex w with full relative accuracy near 0.
cplx expm1(cplx w);

}  // namespace simarr
