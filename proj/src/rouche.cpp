#include "simarr/rouche.hpp"

#include <cmath>
#include <sstream>

#include "simarr/error.hpp"

namespace simarr {

namespace {

// Partial-sum coordinates of (s_1, .., s_{m-1}, z - sum s, 0, .., 0): the
// leading m-1 entries are the partial sums of s, every later entry equals z.
class LevelArgument {
public:
    LevelArgument(std::span<const cplx> s, std::size_t dim) : partial_(dim) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            acc += s[j];
            partial_[j] = acc;
        }
        lead_ = s.size();
        sum_ = acc;
    }

    std::span<const cplx> at(cplx z) {
        for (std::size_t j = lead_; j < partial_.size(); ++j) partial_[j] = z;
        return partial_;
    }

    cplx sum() const { return sum_; }

private:
    std::vector<cplx> partial_;
    std::size_t lead_ = 0;
    cplx sum_;
};

}  // namespace

void require_normalized_stable(const SystemConfig& config) {
    if (!config.unit_speeds())
        throw Error(ErrorCode::InvalidArgument, "transforms expect a normalized (unit-speed) config");
    if (!config.stable()) {
        std::ostringstream os;
        os << "rho_1 = " << config.load(0) << " >= 1";
        throw Error(ErrorCode::UnstableSystem, os.str());
    }
}

RootResult fixed_point_U(const SystemConfig& config, std::span<const cplx> s,
                         const RootOptions& options) {
    require_normalized_stable(config);
    const std::size_t level = s.size() + 1;
    const std::size_t dim = config.dimension();
    if (s.empty() || level > dim)
        throw Error(ErrorCode::InvalidArgument,
                    "fixed_point_U: level " + std::to_string(level) + " outside 2.." +
                        std::to_string(dim));
    const ServiceModel& model = config.service();
    if (!model.level_nondegenerate(level))
        throw Error(ErrorCode::Degenerate, "queues " + std::to_string(level - 1) + " and " +
                                               std::to_string(level) + " are a.s. identical");

    LevelArgument arg(s, dim);
    {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            acc += s[j];
            if (acc.real() < -ServiceModel::domain_tolerance)
                throw Error(ErrorCode::DomainError, "fixed_point_U: partial sum S_" +
                                                        std::to_string(j + 1) +
                                                        " has negative real part");
        }
    }

    const double lambda = config.lambda();
    RootResult out;
    out.level = level;

    bool all_zero = true;
    for (const auto& x : s) all_zero = all_zero && x == cplx(0.0);
    if (all_zero) {
        out.root = 0.0;
        out.ustar = 1.0;
        out.partial_sum = 0.0;
        out.method = RootMethod::Exact;
        return out;
    }

    // Iterate in z = lambda (1 - u), where the complement form keeps full
    // relative accuracy as z -> 0.
    auto step = [&](cplx z) { return lambda * model.lst_complement_partial_sums(arg.at(z)); };

    cplx z_prev = lambda;
    cplx z = step(z_prev);
    int iterations = 1;
    double last_delta = std::abs(z - z_prev);
    int non_contracting = 0;
    bool converged = false;
    while (iterations < options.max_iterations) {
        const double delta = std::abs(z - z_prev);
        if (delta <= options.relative_tolerance * std::abs(z)) {
            converged = true;
            break;
        }
        const cplx next = step(z);
        ++iterations;
        const double next_delta = std::abs(next - z);
        non_contracting = next_delta >= last_delta ? non_contracting + 1 : 0;
        last_delta = next_delta;
        z_prev = z;
        z = next;
        if (non_contracting >= options.non_contracting_limit) break;
    }
    out.method = RootMethod::FixedPoint;

    if (!converged) {
        // Damped secant on g(z) = z - lambda (1 - phi~(s, z)).
        auto g = [&](cplx w) { return w - step(w); };
        cplx z0 = z_prev;
        cplx z1 = z;
        cplx g0 = g(z0);
        cplx g1 = g(z1);
        for (int k = 0; k < options.secant_max_iterations; ++k) {
            if (g1 == g0) break;
            cplx delta = -g1 * (z1 - z0) / (g1 - g0);
            int halvings = 0;
            while ((z1 + delta).real() <= 0.0 && halvings < 60) {
                delta *= 0.5;
                ++halvings;
            }
            z0 = z1;
            g0 = g1;
            z1 = z1 + delta;
            g1 = g(z1);
            ++iterations;
            if (std::abs(delta) <= options.relative_tolerance * std::abs(z1)) {
                converged = true;
                break;
            }
        }
        z = z1;
        out.method = RootMethod::Secant;
        if (!converged) {
            std::ostringstream os;
            os << "level " << level << " root did not converge after " << iterations
               << " iterations (last z = " << z << ", |g| = " << std::abs(g1) << ")";
            throw Error(ErrorCode::NoConvergence, os.str());
        }
    }

    if (z.real() <= -ServiceModel::domain_tolerance) {
        std::ostringstream os;
        os << "level " << level << " root left the uniqueness region (z = " << z << ")";
        throw Error(ErrorCode::NoConvergence, os.str());
    }

    out.partial_sum = z;
    out.ustar = 1.0 - z / lambda;
    out.root = z - arg.sum();
    out.iterations = iterations;
    out.residual =
        std::abs(lambda * model.lst_partial_sums(arg.at(z)) - (lambda - z));
    return out;
}

RootResult root_t(const SystemConfig& config, cplx s, const RootOptions& options) {
    const cplx arg[1] = {s};
    return fixed_point_U(config, arg, options);
}

std::vector<RootResult> root_chain(const SystemConfig& config, std::span<const cplx> s,
                                   const RootOptions& options) {
    const std::size_t dim = config.dimension();
    if (s.size() + 1 != dim)
        throw Error(ErrorCode::InvalidArgument, "root_chain expects K - 1 arguments");
    std::vector<RootResult> chain;
    chain.reserve(dim - 1);
    for (std::size_t j = 1; j < dim; ++j) chain.push_back(fixed_point_U(config, s.first(j), options));
    return chain;
}

}  // namespace simarr
