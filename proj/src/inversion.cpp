#include "simarr/inversion.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "simarr/error.hpp"
#include "simarr/parallel.hpp"

namespace simarr {

namespace {

using std::numbers::ln2;
using std::numbers::pi;

// Binomial (Euler) average of partial sums S_n .. S_{n+m}.
template <class T>
T euler_average(const std::vector<T>& partial, int n, int m) {
    T acc{};
    double binom = 1.0;
    const double scale = std::ldexp(1.0, -m);
    for (int j = 0; j <= m; ++j) {
        acc += binom * scale * partial[n + j];
        binom = binom * (m - j) / (j + 1);
    }
    return acc;
}

struct EulerGrid {
    double a;  // contour abscissa A
    int n;
    int m;

    explicit EulerGrid(const InversionParams& p)
        : a(std::log(2.0 / p.target_abs_error)), n(p.n_terms), m(p.m_euler) {}

    int size() const { return n + m + 1; }
    cplx node(int k, double u) const { return cplx(a, 2.0 * pi * k) / (2.0 * u); }
    double prefactor(double u) const { return std::exp(0.5 * a) / u; }
};

// The double sum squares the weights, so 2-D use keeps N small.
constexpr int kStehfest2dMaxTerms = 10;

// Stehfest weights V_1..V_N.
std::vector<double> stehfest_weights(int n) {
    const int half = n / 2;
    auto fact = [](int k) { return std::tgamma(k + 1.0); };
    std::vector<double> v(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) {
        double acc = 0.0;
        for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
            acc += std::pow(j, half) * fact(2 * j) /
                   (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        v[k] = ((k + half) % 2 == 0 ? 1.0 : -1.0) * acc;
    }
    return v;
}

// Real-line Euler sum for F at u, returning (estimate, error).
std::pair<double, double> euler_real(const std::function<cplx(cplx)>& f, double u,
                                     const EulerGrid& g) {
    std::vector<double> partial(g.size());
    double acc = 0.0;
    for (int k = 0; k < g.size(); ++k) {
        const double term = f(g.node(k, u)).real();
        acc += k == 0 ? 0.5 * term : ((k % 2) ? -term : term);
        partial[k] = acc;
    }
    const double pre = g.prefactor(u);
    const double est = pre * euler_average(partial, g.n, g.m);
    const double prev = pre * euler_average(partial, g.n - 1, g.m);
    return {est, std::abs(est - prev)};
}

std::pair<double, double> stehfest_real(const std::function<cplx(cplx)>& f, double u, int n) {
    const auto w = stehfest_weights(n);
    const auto w_lower = stehfest_weights(n - 2);
    double est = 0.0;
    double lower = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double val = f(cplx(k * ln2 / u, 0.0)).real();
        est += w[k] * val;
        if (k <= n - 2) lower += w_lower[k] * val;
    }
    est *= ln2 / u;
    lower *= ln2 / u;
    return {est, n > 2 ? std::abs(est - lower) : 0.0};
}

InversionResult finish(double value, double error, bool clamp, const char* what) {
    if (!std::isfinite(value) || !std::isfinite(error)) {
        throw Error(ErrorCode::MethodUnstable, std::string(what) + ": non-finite result");
    }
    if (error > kUnstableErrorEstimate) {
        std::ostringstream os;
        os << what << ": error estimate " << error << " exceeds " << kUnstableErrorEstimate;
        throw Error(ErrorCode::MethodUnstable, os.str());
    }
    InversionResult out{value, error, false};
    if (clamp && (value < 0.0 || value > 1.0)) {
        out.value = std::clamp(value, 0.0, 1.0);
        out.clamped = true;
    }
    return out;
}

InversionResult invert_real_line(const Transform1D& f, double u, const InversionParams& p,
                                 bool clamp, const char* what) {
    const auto [est, err] = p.method == InversionMethod::Euler
                                ? euler_real(f, u, EulerGrid(p))
                                : stehfest_real(f, u, p.n_terms);
    return finish(est, err, clamp, what);
}

// All u2 values of one u1 row share the outer contour nodes and their roots.
class SurvivalRowEvaluator {
public:
    SurvivalRowEvaluator(const SystemConfig& config, double u1, const InversionParams& params)
        : config_(config), u1_(u1), params_(params) {
        if (u1 <= 0.0) return;
        if (params.method == InversionMethod::Euler) {
            const EulerGrid g(params);
            for (int k = 0; k < g.size(); ++k) slices_.emplace_back(config, g.node(k, u1));
        } else {
            for (int k = 1; k <= params.n_terms; ++k)
                slices_.emplace_back(config, cplx(k * ln2 / u1, 0.0));
        }
    }

    InversionResult operator()(double u2) const {
        if (u1_ < 0.0 || u2 < 0.0)
            throw Error(ErrorCode::DomainError, "survival arguments must be nonnegative");
        if (u1_ == 0.0) {
            // V1 = 0 forces V2 = 0.
            return {1.0 - config_.load(0), 0.0, false};
        }
        if (u2 == 0.0) return edge_row();
        return params_.method == InversionMethod::Euler ? euler(u2) : stehfest(u2);
    }

private:
    // P(V1 <= u1, V2 = 0) has transform psi(s, inf) / s.
    InversionResult edge_row() const {
        if (params_.method == InversionMethod::Euler) {
            const EulerGrid g(params_);
            std::vector<double> partial(g.size());
            double acc = 0.0;
            for (int k = 0; k < g.size(); ++k) {
                const double term = (slices_[k].at_infinity() / slices_[k].s()).real();
                acc += k == 0 ? 0.5 * term : ((k % 2) ? -term : term);
                partial[k] = acc;
            }
            const double pre = g.prefactor(u1_);
            const double est = pre * euler_average(partial, g.n, g.m);
            const double prev = pre * euler_average(partial, g.n - 1, g.m);
            return finish(est, std::abs(est - prev), true, "survival edge u2 = 0");
        }
        const int n = params_.n_terms;
        const auto w = stehfest_weights(n);
        const auto wl = stehfest_weights(n - 2);
        double est = 0.0, lower = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double val = (slices_[k - 1].at_infinity() / slices_[k - 1].s()).real();
            est += w[k] * val;
            if (k <= n - 2) lower += wl[k] * val;
        }
        est *= ln2 / u1_;
        lower *= ln2 / u1_;
        return finish(est, std::abs(est - lower), true, "survival edge u2 = 0");
    }

    InversionResult euler(double u2) const {
        const EulerGrid g(params_);
        // Inner sums over t are complex because s is; use both signs of k.
        auto inner = [&](const Psi2Slice& slice) {
            const cplx s = slice.s();
            auto xi = [&](cplx t) { return slice(t) / (s * t); };
            std::vector<cplx> partial(g.size());
            cplx acc = 0.5 * xi(g.node(0, u2));
            partial[0] = acc;
            for (int k = 1; k < g.size(); ++k) {
                const cplx pair = 0.5 * (xi(g.node(k, u2)) + xi(g.node(-k, u2)));
                acc += (k % 2) ? -pair : pair;
                partial[k] = acc;
            }
            return g.prefactor(u2) * euler_average(partial, g.n, g.m);
        };
        std::vector<double> partial(g.size());
        double acc = 0.0;
        for (int k = 0; k < g.size(); ++k) {
            const double term = inner(slices_[k]).real();
            acc += k == 0 ? 0.5 * term : ((k % 2) ? -term : term);
            partial[k] = acc;
        }
        const double pre = g.prefactor(u1_);
        const double est = pre * euler_average(partial, g.n, g.m);
        const double prev = pre * euler_average(partial, g.n - 1, g.m);
        return finish(est, std::abs(est - prev), true, "invert2d");
    }

    InversionResult stehfest(double u2) const {
        const int n = std::min(params_.n_terms, kStehfest2dMaxTerms);
        const auto w = stehfest_weights(n);
        const auto wl = stehfest_weights(n - 2);
        double est = 0.0, lower = 0.0;
        for (int j = 1; j <= n; ++j) {
            const Psi2Slice& slice = slices_[j - 1];
            const double s = slice.s().real();
            for (int k = 1; k <= n; ++k) {
                const double t = k * ln2 / u2;
                const double val = slice(t).real() / (s * t);
                est += w[j] * w[k] * val;
                if (j <= n - 2 && k <= n - 2) lower += wl[j] * wl[k] * val;
            }
        }
        const double scale = (ln2 / u1_) * (ln2 / u2);
        est *= scale;
        lower *= scale;
        return finish(est, std::abs(est - lower), true, "invert2d");
    }

    const SystemConfig& config_;
    double u1_;
    InversionParams params_;
    std::vector<Psi2Slice> slices_;
};

}  // namespace

const char* to_string(InversionMethod m) {
    return m == InversionMethod::Euler ? "euler" : "gs";
}

InversionParams InversionParams::euler(int m_euler, int n_terms) {
    InversionParams p;
    p.method = InversionMethod::Euler;
    p.m_euler = m_euler;
    p.n_terms = n_terms;
    return p;
}

InversionParams InversionParams::gaver_stehfest(int n_terms) {
    InversionParams p;
    p.method = InversionMethod::GaverStehfest;
    p.n_terms = n_terms;
    return p;
}

void InversionParams::validate() const {
    if (!(target_abs_error >= 1e-8) || !(target_abs_error < 1.0))
        throw Error(ErrorCode::InvalidArgument, "target_abs_error must lie in [1e-8, 1)");
    if (method == InversionMethod::GaverStehfest) {
        if (n_terms < 2 || n_terms > 18 || n_terms % 2 != 0)
            throw Error(ErrorCode::InvalidArgument,
                        "Gaver-Stehfest needs an even number of terms in 2..18");
    } else {
        if (n_terms < 2 || m_euler < 1 || n_terms + m_euler > 200)
            throw Error(ErrorCode::InvalidArgument, "Euler needs n_terms >= 2, m_euler >= 1");
    }
}

InversionResult invert1d(const Transform1D& transform, double u, const InversionParams& params) {
    params.validate();
    if (!(u > 0.0)) throw Error(ErrorCode::DomainError, "invert1d needs u > 0");
    return invert_real_line(transform, u, params, false, "invert1d");
}

InversionResult marginal_survival(const SystemConfig& config, std::size_t queue, double u,
                                  const InversionParams& params) {
    params.validate();
    require_normalized_stable(config);
    if (queue >= config.dimension())
        throw Error(ErrorCode::InvalidArgument, "marginal_survival: queue out of range");
    if (u < 0.0) throw Error(ErrorCode::DomainError, "marginal_survival needs u >= 0");
    if (u == 0.0) return {1.0 - config.load(queue), 0.0, false};
    auto f = [&](cplx s) { return marginal_lst(config, queue, s) / s; };
    return invert_real_line(f, u, params, true, "marginal_survival");
}

InversionResult invert2d(const SystemConfig& config, double u1, double u2,
                         const InversionParams& params) {
    params.validate();
    require_normalized_stable(config);
    if (u1 < 0.0 || u2 < 0.0) throw Error(ErrorCode::DomainError, "invert2d needs u1, u2 >= 0");
    return SurvivalRowEvaluator(config, u1, params)(u2);
}

std::vector<double> parse_axis(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (...) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, "bad axis value '" + item + "' in '" + text + "'");
        parts.push_back(v);
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3)
        throw Error(ErrorCode::InvalidArgument, "axis must be 'a' or 'a:b:step', got '" + text + "'");
    const double a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0.0) || b < a)
        throw Error(ErrorCode::InvalidArgument, "axis needs step > 0 and b >= a: '" + text + "'");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 1000000) throw Error(ErrorCode::InvalidArgument, "axis has too many points");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = a + static_cast<double>(i) * step;
    return out;
}

std::vector<SurvivalRow> survival_curve(const SystemConfig& config, const std::vector<double>& u1,
                                        const std::vector<double>& u2,
                                        const InversionParams& params) {
    params.validate();
    require_normalized_stable(config);
    std::vector<SurvivalRow> rows(u1.size() * u2.size());
    parallel_for(u1.size(), [&](std::size_t i) {
        const SurvivalRowEvaluator row(config, u1[i], params);
        for (std::size_t j = 0; j < u2.size(); ++j)
            rows[i * u2.size() + j] = SurvivalRow{u1[i], u2[j], row(u2[j])};
    });
    return rows;
}

}  // namespace simarr
