#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "simarr/distribution.hpp"
#include "simarr/rng.hpp"

namespace simarr {

/// Joint law of the simultaneous service vector (B1, ..., BK) with
/// B1 >= B2 >= ... >= BK holding by construction.
///
/// Transforms are evaluated in partial-sum coordinates S_j = s_1 + ... + s_j,
/// where every variant is regular as long as Re S_j >= 0.
class ServiceModel {
public:
    /// B_i = D_i + D_{i+1} + ... + D_K with independent increments D_j.
    struct OrderedIncrements {
        std::vector<ScalarDistribution> increments;
    };
    /// B_i = a_i * sigma with a_1 >= ... >= a_K >= 0.
    struct Proportional {
        ScalarDistribution base;
        std::vector<double> coefficients;
    };
    struct Mixture {
        std::vector<double> weights;
        std::vector<ServiceModel> components;
    };

    using Variant = std::variant<OrderedIncrements, Proportional, Mixture>;

    static ServiceModel ordered_increments(std::vector<ScalarDistribution> increments);
    static ServiceModel proportional(ScalarDistribution base, std::vector<double> coefficients);
    static ServiceModel mixture(std::vector<double> weights, std::vector<ServiceModel> components);

    const Variant& variant() const { return v_; }
    std::size_t dimension() const { return dim_; }

    /// E exp(-sum_i s_i B_i). Throws DomainError if a partial sum has
    /// negative real part beyond domain_tolerance.
    cplx joint_lst(std::span<const cplx> s) const;

    /// Same transform, parametrized by the partial sums S_1..S_K.
    cplx lst_partial_sums(std::span<const cplx> partial) const;
    /// 1 - lst_partial_sums(partial), without cancellation near the origin.
    cplx lst_complement_partial_sums(std::span<const cplx> partial) const;

    std::vector<double> mean_vector() const;
    /// E[B_i^2], zero-based coordinate.
    double second_moment(std::size_t i) const;

    /// E exp(theta B_i) for real theta, nullopt beyond the abscissa.
    std::optional<double> marginal_mgf(std::size_t i, double theta) const;
    double marginal_mgf_abscissa(std::size_t i) const;

    /// Writes one ordered vector into out (size K).
    void sample(Rng& rng, std::span<double> out) const;

    /// P(B_{m-1} > B_m) > 0, with the one-based level m in 2..K.
    bool level_nondegenerate(std::size_t level) const;

    /// Model of the coordinates listed in increasing zero-based order.
    ServiceModel select(std::span<const std::size_t> coordinates) const;
    /// Model of the first m coordinates.
    ServiceModel leading(std::size_t m) const;

    /// Law of (f_1 B_1, ..., f_K B_K). Throws OrderingViolated when the
    /// scaled vector cannot be guaranteed ordered by this variant.
    ServiceModel scaled(std::span<const double> factors) const;

    std::string describe() const;

    static constexpr double domain_tolerance = 1e-12;

private:
    ServiceModel(Variant v, std::size_t dim) : v_(std::move(v)), dim_(dim) {}
    Variant v_;
    std::size_t dim_;
};

/// Partial sums S_j = s_1 + ... + s_j.
std::vector<cplx> partial_sums(std::span<const cplx> s);

}  // namespace simarr
