#include "simarr/transforms.hpp"

#include <cmath>
#include <sstream>

#include "simarr/error.hpp"

namespace simarr {

namespace {

constexpr cplx kZero{0.0, 0.0};

// Value at the center of a removable singularity from analytic samples at
// center +- i h, Richardson-extrapolated over h and h/2.
template <class F>
cplx shifted_limit(F&& f, double h = kLimitShift) {
    auto average = [&](double eps) { return 0.5 * (f(cplx(0.0, eps)) + f(cplx(0.0, -eps))); };
    return (4.0 * average(0.5 * h) - average(h)) / 3.0;
}

double scale_of(std::span<const cplx> s) {
    double acc = 1.0;
    for (const auto& x : s) acc += std::abs(x);
    return acc;
}

bool all_zero(std::span<const cplx> s) {
    for (const auto& x : s)
        if (x != kZero) return false;
    return true;
}

void check_partial_sums(std::span<const cplx> s, const char* who) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        acc += s[j];
        if (acc.real() < -ServiceModel::domain_tolerance)
            throw Error(ErrorCode::DomainError, std::string(who) + ": partial sum S_" +
                                                    std::to_string(j + 1) +
                                                    " has negative real part");
    }
}

// Partial sums of s padded to the model dimension (trailing arguments zero).
std::vector<cplx> padded_partial_sums(std::span<const cplx> s, std::size_t dim) {
    std::vector<cplx> p(dim);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        if (j < s.size()) acc += s[j];
        p[j] = acc;
    }
    return p;
}

cplx sum_of(std::span<const cplx> s) {
    cplx acc = 0.0;
    for (const auto& x : s) acc += x;
    return acc;
}

// s_1 + ... + s_m - lambda (1 - phi(s_1..s_m, 0..0)).
cplx kernel_value(const SystemConfig& config, std::span<const cplx> s) {
    const auto p = padded_partial_sums(s, config.dimension());
    return sum_of(s) - config.lambda() * config.service().lst_complement_partial_sums(p);
}

// lambda (1 - U*_m) for s of length m-1; zero for the empty level-1 case.
cplx level_partial_sum(const SystemConfig& config, std::span<const cplx> s) {
    if (s.empty() || all_zero(s)) return 0.0;
    return fixed_point_U(config, s).partial_sum;
}

struct DirectEval {
    cplx value;
    std::vector<std::size_t> offending;
};

DirectEval psiK_direct(const SystemConfig& config, std::span<const cplx> s) {
    const std::size_t dim = config.dimension();
    const double scale = scale_of(s);
    DirectEval out;
    const cplx k_full = kernel_value(config, s);
    if (std::abs(k_full) < kSingularThreshold * scale) out.offending.push_back(dim - 1);
    cplx value = (1.0 - config.load(0)) * s[0] / k_full;
    for (std::size_t j = 2; j <= dim; ++j) {
        const cplx root = fixed_point_U(config, s.first(j - 1)).root;
        if (j >= 3 && std::abs(root) < kSingularThreshold * scale) out.offending.push_back(j - 2);
        value *= (root - s[j - 1]) / root;
    }
    out.value = value;
    return out;
}

cplx evaluate_shifted(std::span<const cplx> s, const std::vector<std::size_t>& dirs,
                      const auto& eval) {
    std::vector<cplx> work(s.begin(), s.end());
    return shifted_limit([&](cplx h) {
        for (std::size_t i = 0; i < s.size(); ++i) work[i] = s[i];
        for (auto d : dirs) work[d] += h;
        return eval(std::span<const cplx>(work));
    });
}

}  // namespace

const char* to_string(Branch b) { return b == Branch::Direct ? "direct" : "limit"; }

// ---------------------------------------------------------------------------
// Two queues

Psi2Slice::Psi2Slice(const SystemConfig& config, cplx s, const RootOptions& options)
    : config_(&config), s_(s), partial_(config.dimension()) {
    require_normalized_stable(config);
    if (config.dimension() < 2)
        throw Error(ErrorCode::InvalidArgument, "psi2 needs at least two queues");
    if (s.real() < -ServiceModel::domain_tolerance)
        throw Error(ErrorCode::DomainError, "psi2: Re s < 0");
    if (s != kZero) root_ = root_t(config, s, options);
    partial_[0] = s;
}

cplx Psi2Slice::kernel(cplx t) const {
    auto p = partial_;
    for (std::size_t j = 1; j < p.size(); ++j) p[j] = s_ + t;
    return s_ + t - config_->lambda() * config_->service().lst_complement_partial_sums(p);
}

cplx Psi2Slice::direct(cplx t) const {
    const cplx ts = root_->root;
    return (1.0 - config_->load(0)) * s_ / kernel(t) * (ts - t) / ts;
}

cplx Psi2Slice::operator()(cplx t, Branch* branch) const {
    if ((s_ + t).real() < -ServiceModel::domain_tolerance)
        throw Error(ErrorCode::DomainError, "psi2: Re(s + t) < 0");
    Branch b = Branch::Direct;
    cplx value;
    if (s_ == kZero) {
        // Marginal of the second queue.
        if (t == kZero) {
            value = 1.0;
        } else {
            value = (1.0 - config_->load(1)) * t / kernel(t);
            b = Branch::Limit;
        }
    } else if (std::abs(kernel(t)) <
               kSingularThreshold * (1.0 + std::abs(s_) + std::abs(t))) {
        value = shifted_limit([&](cplx h) { return direct(t + h); });
        b = Branch::Limit;
    } else {
        value = direct(t);
    }
    if (branch) *branch = b;
    return value;
}

cplx Psi2Slice::at_infinity() const {
    if (s_ == kZero) return 1.0 - config_->load(1);
    return -(1.0 - config_->load(0)) * s_ / root_->root;
}

TransformPoint psi2(const SystemConfig& config, cplx s, cplx t) {
    Psi2Slice slice(config, s);
    TransformPoint out;
    out.s = {s, t};
    out.value = slice(t, &out.branch);
    return out;
}

// ---------------------------------------------------------------------------
// K queues

cplx marginal_lst(const SystemConfig& config, std::size_t queue, cplx s) {
    require_normalized_stable(config);
    if (queue >= config.dimension())
        throw Error(ErrorCode::InvalidArgument, "marginal_lst: queue out of range");
    if (s.real() < -ServiceModel::domain_tolerance)
        throw Error(ErrorCode::DomainError, "marginal_lst: Re s < 0");
    if (s == kZero) return 1.0;
    std::vector<cplx> p(config.dimension(), kZero);
    for (std::size_t j = queue; j < p.size(); ++j) p[j] = s;
    const cplx c = config.service().lst_complement_partial_sums(p);
    return (1.0 - config.load(queue)) * s / (s - config.lambda() * c);
}

TransformPoint psiK(const SystemConfig& config, std::span<const cplx> s) {
    require_normalized_stable(config);
    const std::size_t dim = config.dimension();
    if (s.size() != dim)
        throw Error(ErrorCode::InvalidArgument, "psiK expects one argument per queue");
    check_partial_sums(s, "psiK");
    TransformPoint out;
    out.s.assign(s.begin(), s.end());
    if (all_zero(s)) {
        out.value = 1.0;
        return out;
    }
    if (s[0] == kZero) {
        // Queue 1 carries no weight: the transform of queues 2..K.
        std::vector<std::size_t> rest;
        for (std::size_t q = 1; q < dim; ++q) rest.push_back(q);
        const auto sub = config.select(rest);
        out.value = psiK(sub, s.subspan(1)).value;
        out.branch = Branch::Limit;
        return out;
    }
    if (dim == 1) {
        out.value = marginal_lst(config, 0, s[0]);
        return out;
    }
    auto direct = psiK_direct(config, s);
    if (direct.offending.empty()) {
        out.value = direct.value;
        return out;
    }
    out.value = evaluate_shifted(s, direct.offending, [&](std::span<const cplx> w) {
        return psiK_direct(config, w).value;
    });
    out.branch = Branch::Limit;
    return out;
}

TransformPoint psi_tilde(const SystemConfig& config, std::span<const cplx> s) {
    require_normalized_stable(config);
    const std::size_t m = s.size();
    if (m < 2 || m > config.dimension())
        throw Error(ErrorCode::InvalidArgument, "psi_tilde expects 2..K arguments");
    check_partial_sums(s, "psi_tilde");
    TransformPoint out;
    out.s.assign(s.begin(), s.end());
    if (all_zero(s)) {
        out.value = 1.0;
        return out;
    }
    const cplx z = level_partial_sum(config, s.first(m - 1));
    const double rho = config.load(m - 1);
    auto eval = [&](std::span<const cplx> w, cplx zw) {
        return (1.0 - rho) * (sum_of(w) - zw) / kernel_value(config, w);
    };
    if (std::abs(kernel_value(config, s)) >= kSingularThreshold * scale_of(s)) {
        out.value = eval(s, z);
        return out;
    }
    // Only s_m moves, so the level-m root is unchanged.
    out.value = evaluate_shifted(s, {m - 1}, [&](std::span<const cplx> w) { return eval(w, z); });
    out.branch = Branch::Limit;
    return out;
}

TransformPoint pk_factor(const SystemConfig& config, std::span<const cplx> s) {
    require_normalized_stable(config);
    const std::size_t level = s.size() + 1;
    if (s.empty() || level > config.dimension())
        throw Error(ErrorCode::InvalidArgument, "pk_factor: level outside 2..K");
    check_partial_sums(s, "pk_factor");
    TransformPoint out;
    out.s.assign(s.begin(), s.end());
    if (all_zero(s)) {
        out.value = 1.0;
        out.branch = Branch::Limit;
        return out;
    }
    const double atom = (1.0 - config.load(level - 2)) / (1.0 - config.load(level - 1));
    auto eval = [&](std::span<const cplx> w) {
        const cplx total = sum_of(w);
        const cplx upper = level_partial_sum(config, w.first(w.size() - 1));
        const cplx lower = fixed_point_U(config, w).partial_sum;
        return atom * (total - upper) / (total - lower);
    };
    const cplx denom = sum_of(s) - fixed_point_U(config, s).partial_sum;
    if (level == 2 || std::abs(denom) >= kSingularThreshold * scale_of(s)) {
        out.value = eval(s);
        return out;
    }
    out.value = evaluate_shifted(s, {level - 2}, eval);
    out.branch = Branch::Limit;
    return out;
}

TransformPoint pk_factor(const SystemConfig& config, cplx s) {
    const cplx arg[1] = {s};
    return pk_factor(config, std::span<const cplx>(arg));
}

cplx virtual_level2_ustar(const SystemConfig& config, cplx s1, const RootOptions& options) {
    require_normalized_stable(config);
    if (config.dimension() < 3)
        throw Error(ErrorCode::InvalidArgument, "virtual_level2_ustar needs K >= 3");
    if (s1 == kZero) return 1.0;
    const double lambda = config.lambda();
    // z = lambda (1 - u) iterated through the level-3 busy-period transform.
    cplx z = lambda;
    for (int it = 0; it < options.max_iterations; ++it) {
        const cplx arg[2] = {s1, z - s1};
        const cplx next = fixed_point_U(config, arg, options).partial_sum;
        const double delta = std::abs(next - z);
        z = next;
        if (delta <= options.relative_tolerance * std::abs(z)) return 1.0 - z / lambda;
    }
    throw Error(ErrorCode::NoConvergence, "virtual level-2 fixed point did not converge");
}

TransformPoint psi_decomposed(const SystemConfig& config, std::span<const cplx> s,
                              bool virtual_level2) {
    const std::size_t dim = config.dimension();
    if (s.size() != dim || dim < 2)
        throw Error(ErrorCode::InvalidArgument, "psi_decomposed expects K >= 2 arguments");
    TransformPoint out = psi_tilde(config, s);
    for (std::size_t m = 2; m <= dim; ++m) {
        TransformPoint f;
        if (m == 2 && virtual_level2 && dim >= 3 && s[0] != kZero) {
            const cplx u = virtual_level2_ustar(config, s[0]);
            const double atom = (1.0 - config.load(0)) / (1.0 - config.load(1));
            f.value = atom * s[0] / (s[0] - config.lambda() * (1.0 - u));
        } else {
            f = pk_factor(config, s.first(m - 1));
        }
        out.value *= f.value;
        if (f.branch == Branch::Limit) out.branch = Branch::Limit;
    }
    return out;
}

cplx survival_lt(const SystemConfig& config, cplx s, cplx t) {
    if (s.real() <= 0.0 || t.real() <= 0.0)
        throw Error(ErrorCode::DomainError, "survival_lt needs Re s > 0 and Re t > 0");
    return psi2(config, s, t).value / (s * t);
}

double kernel_residual(const SystemConfig& config, cplx s, cplx t) {
    Psi2Slice slice(config, s);
    const double empty = 1.0 - config.load(0);
    const cplx arg[2] = {s, t};
    const cplx kernel = kernel_value(config, arg);
    const cplx psi1 = s == kZero ? cplx(1.0 - config.load(1)) : -(s / slice.root()->root) * empty;
    return std::abs(kernel * slice(t) - t * psi1 - s * empty);
}

// ---------------------------------------------------------------------------
// Tandem fluid network and priority queue

SystemConfig tandem_config(const TandemSystem& sys) {
    const double lambda = sys.lambda1 + sys.lambda2;
    const auto zero = ScalarDistribution::deterministic(0.0);
    // Station-1 input loads both coordinates; station-2 input only the larger one.
    auto both = ServiceModel::ordered_increments({zero, sys.b1});
    auto larger = ServiceModel::ordered_increments({sys.b2, zero});
    return SystemConfig(lambda, ServiceModel::mixture({sys.lambda1 / lambda, sys.lambda2 / lambda},
                                                      {both, larger}));
}

cplx tandem_fluid_lst(const TandemSystem& sys, cplx a1, cplx a2) {
    if (a1.real() < -ServiceModel::domain_tolerance || a2.real() < -ServiceModel::domain_tolerance)
        throw Error(ErrorCode::DomainError, "tandem transform needs Re a1, Re a2 >= 0");
    const double rho1 = sys.lambda1 * sys.b1.mean();
    const double rho2 = sys.lambda2 * sys.b2.mean();
    if (rho1 + rho2 >= 1.0) throw Error(ErrorCode::UnstableSystem, "tandem: rho1 + rho2 >= 1");
    auto eta1 = [&](cplx a) { return sys.lambda1 * sys.b1.lst_complement(a); };
    auto eta2 = [&](cplx a) { return sys.lambda2 * sys.b2.lst_complement(a); };

    if (a2 == kZero) {
        if (a1 == kZero) return 1.0;
        return (1.0 - rho1) * a1 / (a1 - eta1(a1));
    }
    // eta_hat solves eta - eta1(eta) = eta2(a2); iterate from eta = lambda1 + lambda2.
    const cplx target = eta2(a2);
    cplx eta = sys.lambda1 + sys.lambda2;
    bool converged = false;
    for (int it = 0; it < 100000; ++it) {
        const cplx next = eta1(eta) + target;
        const double delta = std::abs(next - eta);
        eta = next;
        if (delta <= 1e-14 * std::abs(eta)) {
            converged = true;
            break;
        }
    }
    if (!converged) throw Error(ErrorCode::NoConvergence, "tandem root did not converge");

    auto direct = [&](cplx x1) {
        return (1.0 - rho1 - rho2) * a2 / (x1 - eta1(x1) - target) * (x1 - eta) / (a2 - eta);
    };
    const cplx denom = a1 - eta1(a1) - target;
    if (std::abs(denom) >= kSingularThreshold * (1.0 + std::abs(a1) + std::abs(a2)))
        return direct(a1);
    return shifted_limit([&](cplx h) { return direct(a1 + h); });
}

std::pair<cplx, cplx> tandem_crosscheck(const TandemSystem& sys, cplx a1, cplx a2) {
    const auto config = tandem_config(sys);
    const cplx direct = tandem_fluid_lst(sys, a1, a2);
    const cplx mapped = psi2(config, a2, a1 - a2).value;
    return {direct, mapped};
}

std::pair<cplx, cplx> priority_crosscheck(const TandemSystem& sys, cplx s, cplx t) {
    const auto config = tandem_config(sys);
    const cplx mapped = psi2(config, t, s - t).value;
    const cplx tandem = tandem_fluid_lst(sys, s, t);
    return {mapped, tandem};
}

}  // namespace simarr
