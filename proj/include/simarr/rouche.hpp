#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "simarr/system_config.hpp"

namespace simarr {

struct RootOptions {
    /// Stop when |z_{n+1} - z_n| <= relative_tolerance * |z_{n+1}|.
    double relative_tolerance = 1e-13;
    int max_iterations = 100000;
    /// Consecutive non-contracting fixed-point steps before switching to secant.
    int non_contracting_limit = 1000;
    int secant_max_iterations = 200;
};

enum class RootMethod { Exact, FixedPoint, Secant };

/// Kernel zero at level m: the root S_m(s_1..s_{m-1}) together with the
/// busy-period transform U*_m at the same argument.
struct RootResult {
    std::size_t level = 2;
    cplx root;         ///< S_m (t(s) when m = 2)
    cplx ustar;        ///< U*_m(s_1..s_{m-1})
    cplx partial_sum;  ///< s_1 + ... + s_{m-1} + S_m = lambda (1 - U*_m)
    int iterations = 0;
    double residual = 0.0;  ///< |lambda phi(s, S_m, 0..0) - (lambda - sum s - S_m)|
    RootMethod method = RootMethod::FixedPoint;
};

/// Busy-period fixed point u = phi~(s, lambda (1 - u)) at level m = s.size() + 1,
/// iterated from u = 0. The config must be normalized and stable, and the level
/// nondegenerate.
RootResult fixed_point_U(const SystemConfig& config, std::span<const cplx> s,
                         const RootOptions& options = {});

/// t(s) for the pair of queues (1, 2).
RootResult root_t(const SystemConfig& config, cplx s, const RootOptions& options = {});

/// S_2, ..., S_K for s of length K - 1.
std::vector<RootResult> root_chain(const SystemConfig& config, std::span<const cplx> s,
                                   const RootOptions& options = {});

/// Checks shared by every transform entry point: unit speeds, rho_1 < 1.
void require_normalized_stable(const SystemConfig& config);

}  // namespace simarr
