#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "simarr/rouche.hpp"
#include "simarr/system_config.hpp"

namespace simarr {

/// How a transform value was obtained: straight from the closed form, or as
/// the limit at a removable singularity.
enum class Branch { Direct, Limit };

const char* to_string(Branch b);

struct TransformPoint {
    std::vector<cplx> s;
    cplx value;
    Branch branch = Branch::Direct;
};

/// Denominators below this (relative to 1 + sum |s_i|) switch to the limit branch.
inline constexpr double kSingularThreshold = 1e-8;
/// Imaginary shift used by the limit branch.
inline constexpr double kLimitShift = 1e-5;

/// Joint workload transform E exp(-s V1 - t V2) of the first two queues, with
/// t(s) computed once so that many t can be evaluated cheaply.
class Psi2Slice {
public:
    Psi2Slice(const SystemConfig& config, cplx s, const RootOptions& options = {});

    cplx s() const { return s_; }
    /// t(s); absent for s == 0.
    const std::optional<RootResult>& root() const { return root_; }

    cplx operator()(cplx t, Branch* branch = nullptr) const;

    /// lim_{t -> inf} psi(s, t) = E[exp(-s V1); V2 = 0].
    cplx at_infinity() const;

private:
    cplx direct(cplx t) const;
    cplx kernel(cplx t) const;

    const SystemConfig* config_;
    cplx s_;
    std::optional<RootResult> root_;
    std::vector<cplx> partial_;
};

/// E exp(-s V1 - t V2) for the first two queues.
TransformPoint psi2(const SystemConfig& config, cplx s, cplx t);

/// E exp(-sum s_i V_i) via the root-chain product, s of length K.
TransformPoint psiK(const SystemConfig& config, std::span<const cplx> s);

/// Transform of the modified process that clears the excess of queues
/// 1..m-1 whenever queue m empties; m = s.size() in 2..K.
TransformPoint psi_tilde(const SystemConfig& config, std::span<const cplx> s);

/// Pollaczek-Khinchine factor at level m = s.size() + 1:
/// (1-rho_{m-1})/(1-rho_m) (sum s - lambda(1-U*_{m-1})) / (sum s - lambda(1-U*_m)),
/// with the lower-level term equal to sum s when m = 2.
TransformPoint pk_factor(const SystemConfig& config, std::span<const cplx> s);
TransformPoint pk_factor(const SystemConfig& config, cplx s);

/// psi_tilde(s) times pk_factor at every level m = 2..K. With
/// virtual_level2 set (K >= 3) the last factor uses the level-2 root of the
/// virtual system driven by U*_3 instead of U*_2.
TransformPoint psi_decomposed(const SystemConfig& config, std::span<const cplx> s,
                              bool virtual_level2 = false);

/// One-dimensional M/G/1 workload transform of queue i (zero-based).
cplx marginal_lst(const SystemConfig& config, std::size_t queue, cplx s);

/// Laplace transform of the joint survival function, psi(s, t) / (s t).
cplx survival_lt(const SystemConfig& config, cplx s, cplx t);

/// |K(s,t) psi(s,t) - t psi_1(s) - s psi_2(t)| with the ordered-case
/// boundary functions psi_2 = 1 - rho_1, psi_1(s) = -(s / t(s)) (1 - rho_1).
double kernel_residual(const SystemConfig& config, cplx s, cplx t);

/// Level-2 busy-period transform of the virtual two-queue system whose input
/// is the extra work left in queues 1, 2 when queue 3 empties. Needs K >= 3.
cplx virtual_level2_ustar(const SystemConfig& config, cplx s1, const RootOptions& options = {});

/// Two-station tandem fluid network with independent compound Poisson input.
struct TandemSystem {
    double lambda1;
    double lambda2;
    ScalarDistribution b1;
    ScalarDistribution b2;
};

/// Equivalent coupled-arrival config: lambda = lambda1 + lambda2 and
/// phi(s,t) = p1 B1*(s+t) + p2 B2*(s).
SystemConfig tandem_config(const TandemSystem& system);

/// Fluid-level transform E exp(-a1 W1 - a2 W2) from the tandem formula with
/// its own root.
cplx tandem_fluid_lst(const TandemSystem& system, cplx a1, cplx a2);

/// (tandem formula, psi2 under psi_W(a1, a2) = psi(a2, a1 - a2)).
std::pair<cplx, cplx> tandem_crosscheck(const TandemSystem& system, cplx a1, cplx a2);

/// Preemptive-priority workload transform psi_Y(s, t):
/// (psi2 at (t, s - t), tandem formula at (s, t)).
std::pair<cplx, cplx> priority_crosscheck(const TandemSystem& system, cplx s, cplx t);

}  // namespace simarr
