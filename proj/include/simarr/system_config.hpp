#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "simarr/service_model.hpp"

namespace simarr {

/// Arrival rate, server speeds and service law of K coupled queues.
///
/// A config built directly carries whatever speeds it was given. `normalize`
/// produces the unit-speed form that every transform expects, remembering the
/// original speeds so results can be mapped back.
class SystemConfig {
public:
    SystemConfig(double lambda, std::vector<double> speeds, ServiceModel service);
    /// Unit speeds.
    SystemConfig(double lambda, ServiceModel service);

    double lambda() const { return lambda_; }
    std::size_t dimension() const { return service_.dimension(); }
    std::span<const double> speeds() const { return speeds_; }
    std::span<const double> original_speeds() const { return original_speeds_; }
    const ServiceModel& service() const { return service_; }

    /// rho_i = lambda E[B_i] / c_i, zero-based.
    double load(std::size_t i) const { return loads_[i]; }
    std::span<const double> loads() const { return loads_; }

    bool unit_speeds() const;
    bool stable() const { return loads_.front() < 1.0; }

    /// One-based levels m in 2..K where queue m-1 and queue m are a.s. identical.
    std::vector<std::size_t> degenerate_levels() const;

    /// Config of the listed zero-based queues (increasing). Unit-speed
    /// configs only.
    SystemConfig select(std::span<const std::size_t> queues) const;
    SystemConfig leading(std::size_t m) const;

private:
    friend SystemConfig normalize(const SystemConfig& config);

    double lambda_;
    std::vector<double> speeds_;
    std::vector<double> original_speeds_;
    ServiceModel service_;
    std::vector<double> loads_;
};

/// Unit-speed form with B_i -> B_i / c_i. Throws UnstableSystem when
/// rho_1 >= 1 and OrderingViolated when the scaled model is not
/// structurally ordered. Degenerate levels are accepted and reported by
/// `degenerate_levels`.
SystemConfig normalize(const SystemConfig& config);

}  // namespace simarr
