#include "simarr/system_config.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "simarr/error.hpp"

namespace simarr {

SystemConfig::SystemConfig(double lambda, std::vector<double> speeds, ServiceModel service)
    : lambda_(lambda),
      speeds_(std::move(speeds)),
      original_speeds_(speeds_),
      service_(std::move(service)) {
    if (!std::isfinite(lambda_) || lambda_ <= 0.0)
        throw Error(ErrorCode::ValidationError, "lambda must be positive");
    if (speeds_.size() != service_.dimension())
        throw Error(ErrorCode::ValidationError,
                    "speeds has " + std::to_string(speeds_.size()) +
                        " entries but the service model has dimension " +
                        std::to_string(service_.dimension()));
    for (double c : speeds_)
        if (!std::isfinite(c) || c <= 0.0)
            throw Error(ErrorCode::ValidationError, "speeds must be positive");
    const auto means = service_.mean_vector();
    loads_.resize(means.size());
    for (std::size_t i = 0; i < means.size(); ++i) loads_[i] = lambda_ * means[i] / speeds_[i];
}

SystemConfig::SystemConfig(double lambda, ServiceModel service)
    : SystemConfig(lambda, std::vector<double>(service.dimension(), 1.0), std::move(service)) {}

bool SystemConfig::unit_speeds() const {
    for (double c : speeds_)
        if (c != 1.0) return false;
    return true;
}

std::vector<std::size_t> SystemConfig::degenerate_levels() const {
    std::vector<std::size_t> out;
    for (std::size_t m = 2; m <= dimension(); ++m)
        if (!service_.level_nondegenerate(m)) out.push_back(m);
    return out;
}

SystemConfig SystemConfig::select(std::span<const std::size_t> queues) const {
    if (!unit_speeds())
        throw Error(ErrorCode::InvalidArgument, "select requires a normalized config");
    SystemConfig out(lambda_, service_.select(queues));
    out.original_speeds_.clear();
    for (auto q : queues) out.original_speeds_.push_back(original_speeds_[q]);
    return out;
}

SystemConfig SystemConfig::leading(std::size_t m) const {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return select(idx);
}

SystemConfig normalize(const SystemConfig& config) {
    if (config.loads_.front() >= 1.0) {
        std::ostringstream os;
        os << "rho_1 = " << config.loads_.front() << " >= 1";
        throw Error(ErrorCode::UnstableSystem, os.str());
    }
    if (config.unit_speeds()) return config;
    std::vector<double> factors(config.dimension());
    for (std::size_t i = 0; i < factors.size(); ++i) factors[i] = 1.0 / config.speeds_[i];
    SystemConfig out(config.lambda_, config.service_.scaled(factors));
    out.original_speeds_ = config.original_speeds_;
    return out;
}

}  // namespace simarr
