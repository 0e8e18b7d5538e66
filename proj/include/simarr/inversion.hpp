#pragma once

#include <functional>
#include <string>
#include <vector>

#include "simarr/transforms.hpp"

namespace simarr {

enum class InversionMethod { Euler, GaverStehfest };

const char* to_string(InversionMethod m);

struct InversionParams {
    InversionMethod method = InversionMethod::Euler;
    /// Euler: binomial averaging order.
    int m_euler = 11;
    /// Euler: terms before averaging. Gaver-Stehfest: N (even, at most 18).
    int n_terms = 38;
    /// Sets the Euler contour abscissa A = ln(2 / target_abs_error), which keeps
    /// the discretization error of a function bounded by 1 below the target.
    double target_abs_error = 1e-8;

    static InversionParams euler(int m_euler = 11, int n_terms = 38);
    static InversionParams gaver_stehfest(int n_terms = 14);

    /// Throws InvalidArgument when a parameter is outside its stable range.
    void validate() const;
};

struct InversionResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool clamped = false;
};

/// Results whose error estimate exceeds this raise MethodUnstable.
inline constexpr double kUnstableErrorEstimate = 1e-3;

using Transform1D = std::function<cplx(cplx)>;

/// f(u) from its Laplace transform F, u > 0.
InversionResult invert1d(const Transform1D& transform, double u, const InversionParams& params = {});

/// Survival function P(V_i <= u) of queue i from psi / s. u >= 0; clamped to [0, 1].
InversionResult marginal_survival(const SystemConfig& config, std::size_t queue, double u,
                                  const InversionParams& params = {});

/// Joint survival probability xi(u1, u2) = P(V1 <= u1, V2 <= u2); clamped to [0, 1].
/// Gaver-Stehfest uses at most 10 terms per axis here.
InversionResult invert2d(const SystemConfig& config, double u1, double u2,
                         const InversionParams& params = {});

/// "a" or "a:b:step" (inclusive of b up to rounding).
std::vector<double> parse_axis(const std::string& text);

struct SurvivalRow {
    double u1;
    double u2;
    InversionResult result;
};

/// xi on the product grid u1 x u2, rows ordered by u1 then u2. The inner
/// transform root is computed once per contour node of u1 and shared across u2.
std::vector<SurvivalRow> survival_curve(const SystemConfig& config, const std::vector<double>& u1,
                                        const std::vector<double>& u2,
                                        const InversionParams& params = {});

}  // namespace simarr
