#include "simarr/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "simarr/error.hpp"

namespace simarr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::ValidationError, msg);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// 1 - (1-a)(1-b) without forming the products near 1.
cplx combine_complements(cplx a, cplx b) { return a + b - a * b; }

}  // namespace

cplx expm1(cplx w) {
    const double x = w.real();
    const double y = w.imag();
    if (std::abs(x) > 0.5 || std::abs(y) > 0.5) return std::exp(w) - 1.0;
    const double em1 = std::expm1(x);
    const double half_sin = std::sin(0.5 * y);
    return {em1 * std::cos(y) - 2.0 * half_sin * half_sin, std::exp(x) * std::sin(y)};
}

ScalarDistribution ScalarDistribution::exponential(double rate) {
    require(positive_finite(rate), "exponential rate must be positive");
    return ScalarDistribution(Exponential{rate});
}

ScalarDistribution ScalarDistribution::erlang(int shape, double rate) {
    require(shape >= 1, "erlang shape must be a positive integer");
    require(positive_finite(rate), "erlang rate must be positive");
    return ScalarDistribution(Erlang{shape, rate});
}

ScalarDistribution ScalarDistribution::deterministic(double value) {
    require(std::isfinite(value) && value >= 0.0, "deterministic value must be >= 0");
    return ScalarDistribution(Deterministic{value});
}

ScalarDistribution ScalarDistribution::hyperexponential(std::vector<double> weights,
                                                        std::vector<double> rates) {
    require(!weights.empty() && weights.size() == rates.size(),
            "hyperexponential needs matching, nonempty weights and rates");
    double total = 0.0;
    for (double w : weights) {
        require(std::isfinite(w) && w >= 0.0, "hyperexponential weights must be >= 0");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "hyperexponential weights must sum to 1");
    for (double r : rates) require(positive_finite(r), "hyperexponential rates must be positive");
    return ScalarDistribution(Hyperexponential{std::move(weights), std::move(rates)});
}

ScalarDistribution ScalarDistribution::zero_inflated(double p0, ScalarDistribution inner) {
    require(std::isfinite(p0) && p0 >= 0.0 && p0 <= 1.0, "zero_inflated p0 must lie in [0,1]");
    return ScalarDistribution(
        ZeroInflated{p0, std::make_shared<const ScalarDistribution>(std::move(inner))});
}

ScalarDistribution ScalarDistribution::convolution(std::vector<ScalarDistribution> parts) {
    require(!parts.empty(), "convolution needs at least one part");
    if (parts.size() == 1) return parts.front();
    return ScalarDistribution(Convolution{std::move(parts)});
}

double ScalarDistribution::mean() const {
    return std::visit(
        overloaded{
            [](const Exponential& d) { return 1.0 / d.rate; },
            [](const Erlang& d) { return d.shape / d.rate; },
            [](const Deterministic& d) { return d.value; },
            [](const Hyperexponential& d) {
                double m = 0.0;
                for (std::size_t i = 0; i < d.rates.size(); ++i) m += d.weights[i] / d.rates[i];
                return m;
            },
            [](const ZeroInflated& d) { return (1.0 - d.p0) * d.inner->mean(); },
            [](const Convolution& d) {
                double m = 0.0;
                for (const auto& p : d.parts) m += p.mean();
                return m;
            },
        },
        v_);
}

double ScalarDistribution::second_moment() const {
    return std::visit(
        overloaded{
            [](const Exponential& d) { return 2.0 / (d.rate * d.rate); },
            [](const Erlang& d) { return d.shape * (d.shape + 1.0) / (d.rate * d.rate); },
            [](const Deterministic& d) { return d.value * d.value; },
            [](const Hyperexponential& d) {
                double m = 0.0;
                for (std::size_t i = 0; i < d.rates.size(); ++i)
                    m += 2.0 * d.weights[i] / (d.rates[i] * d.rates[i]);
                return m;
            },
            [](const ZeroInflated& d) { return (1.0 - d.p0) * d.inner->second_moment(); },
            [](const Convolution& d) {
                double var = 0.0;
                double m = 0.0;
                for (const auto& p : d.parts) {
                    var += p.variance();
                    m += p.mean();
                }
                return var + m * m;
            },
        },
        v_);
}

cplx ScalarDistribution::lst(cplx z) const {
    return std::visit(
        overloaded{
            [z](const Exponential& d) { return d.rate / (d.rate + z); },
            [z](const Erlang& d) { return std::pow(d.rate / (d.rate + z), d.shape); },
            [z](const Deterministic& d) { return std::exp(-z * d.value); },
            [z](const Hyperexponential& d) {
                cplx v = 0.0;
                for (std::size_t i = 0; i < d.rates.size(); ++i)
                    v += d.weights[i] * d.rates[i] / (d.rates[i] + z);
                return v;
            },
            [z](const ZeroInflated& d) { return d.p0 + (1.0 - d.p0) * d.inner->lst(z); },
            [z](const Convolution& d) {
                cplx v = 1.0;
                for (const auto& p : d.parts) v *= p.lst(z);
                return v;
            },
        },
        v_);
}

cplx ScalarDistribution::lst_complement(cplx z) const {
    return std::visit(
        overloaded{
            [z](const Exponential& d) { return z / (d.rate + z); },
            [z](const Erlang& d) {
                const cplx a = z / (d.rate + z);
                cplx c = a;
                for (int j = 1; j < d.shape; ++j) c = a + c * (1.0 - a);
                return c;
            },
            [z](const Deterministic& d) { return -expm1(-z * d.value); },
            [z](const Hyperexponential& d) {
                cplx v = 0.0;
                for (std::size_t i = 0; i < d.rates.size(); ++i)
                    v += d.weights[i] * z / (d.rates[i] + z);
                return v;
            },
            [z](const ZeroInflated& d) { return (1.0 - d.p0) * d.inner->lst_complement(z); },
            [z](const Convolution& d) {
                cplx c = 0.0;
                for (const auto& p : d.parts) c = combine_complements(c, p.lst_complement(z));
                return c;
            },
        },
        v_);
}

std::optional<double> ScalarDistribution::mgf(double theta) const {
    if (theta >= mgf_abscissa()) return std::nullopt;
    return std::visit(
        overloaded{
            [theta](const Exponential& d) -> std::optional<double> {
                return d.rate / (d.rate - theta);
            },
            [theta](const Erlang& d) -> std::optional<double> {
                return std::pow(d.rate / (d.rate - theta), d.shape);
            },
            [theta](const Deterministic& d) -> std::optional<double> {
                return std::exp(theta * d.value);
            },
            [theta](const Hyperexponential& d) -> std::optional<double> {
                double v = 0.0;
                for (std::size_t i = 0; i < d.rates.size(); ++i)
                    v += d.weights[i] * d.rates[i] / (d.rates[i] - theta);
                return v;
            },
            [theta](const ZeroInflated& d) -> std::optional<double> {
                if (d.p0 == 1.0) return 1.0;
                return d.p0 + (1.0 - d.p0) * *d.inner->mgf(theta);
            },
            [theta](const Convolution& d) -> std::optional<double> {
                double v = 1.0;
                for (const auto& p : d.parts) v *= *p.mgf(theta);
                return v;
            },
        },
        v_);
}

double ScalarDistribution::mgf_abscissa() const {
    return std::visit(
        overloaded{
            [](const Exponential& d) { return d.rate; },
            [](const Erlang& d) { return d.rate; },
            [](const Deterministic&) { return kInf; },
            [](const Hyperexponential& d) {
                double r = kInf;
                for (std::size_t i = 0; i < d.rates.size(); ++i)
                    if (d.weights[i] > 0.0) r = std::min(r, d.rates[i]);
                return r;
            },
            [](const ZeroInflated& d) { return d.p0 == 1.0 ? kInf : d.inner->mgf_abscissa(); },
            [](const Convolution& d) {
                double r = kInf;
                for (const auto& p : d.parts) r = std::min(r, p.mgf_abscissa());
                return r;
            },
        },
        v_);
}

double ScalarDistribution::sample(Rng& rng) const {
    return std::visit(
        overloaded{
            [&rng](const Exponential& d) { return rng.exponential(d.rate); },
            [&rng](const Erlang& d) {
                double x = 0.0;
                for (int j = 0; j < d.shape; ++j) x += rng.exponential(d.rate);
                return x;
            },
            [](const Deterministic& d) { return d.value; },
            [&rng](const Hyperexponential& d) {
                const double u = rng.uniform();
                double acc = 0.0;
                std::size_t i = 0;
                for (; i + 1 < d.rates.size(); ++i) {
                    acc += d.weights[i];
                    if (u <= acc) break;
                }
                return rng.exponential(d.rates[i]);
            },
            [&rng](const ZeroInflated& d) {
                // One uniform is always consumed so stream alignment does not depend on p0.
                const bool zero = rng.uniform() <= d.p0;
                return zero ? 0.0 : d.inner->sample(rng);
            },
            [&rng](const Convolution& d) {
                double x = 0.0;
                for (const auto& p : d.parts) x += p.sample(rng);
                return x;
            },
        },
        v_);
}

bool ScalarDistribution::almost_surely_zero() const {
    return std::visit(
        overloaded{
            [](const Exponential&) { return false; },
            [](const Erlang&) { return false; },
            [](const Deterministic& d) { return d.value == 0.0; },
            [](const Hyperexponential&) { return false; },
            [](const ZeroInflated& d) { return d.p0 == 1.0 || d.inner->almost_surely_zero(); },
            [](const Convolution& d) {
                return std::all_of(d.parts.begin(), d.parts.end(),
                                   [](const auto& p) { return p.almost_surely_zero(); });
            },
        },
        v_);
}

ScalarDistribution ScalarDistribution::scaled(double factor) const {
    require(positive_finite(factor), "scale factor must be positive");
    return std::visit(
        overloaded{
            [factor](const Exponential& d) { return exponential(d.rate / factor); },
            [factor](const Erlang& d) { return erlang(d.shape, d.rate / factor); },
            [factor](const Deterministic& d) { return deterministic(d.value * factor); },
            [factor](const Hyperexponential& d) {
                std::vector<double> rates = d.rates;
                for (double& r : rates) r /= factor;
                return ScalarDistribution(Hyperexponential{d.weights, std::move(rates)});
            },
            [factor](const ZeroInflated& d) {
                return zero_inflated(d.p0, d.inner->scaled(factor));
            },
            [factor](const Convolution& d) {
                std::vector<ScalarDistribution> parts;
                parts.reserve(d.parts.size());
                for (const auto& p : d.parts) parts.push_back(p.scaled(factor));
                return convolution(std::move(parts));
            },
        },
        v_);
}

std::string ScalarDistribution::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&os](const Exponential& d) { os << "Exp(" << d.rate << ")"; },
                   [&os](const Erlang& d) { os << "Erlang(" << d.shape << ", " << d.rate << ")"; },
                   [&os](const Deterministic& d) { os << "Det(" << d.value << ")"; },
                   [&os](const Hyperexponential& d) {
                       os << "HypExp(";
                       for (std::size_t i = 0; i < d.rates.size(); ++i)
                           os << (i ? ", " : "") << d.weights[i] << "@" << d.rates[i];
                       os << ")";
                   },
                   [&os](const ZeroInflated& d) {
                       os << "ZeroInflated(" << d.p0 << ", " << d.inner->describe() << ")";
                   },
                   [&os](const Convolution& d) {
                       for (std::size_t i = 0; i < d.parts.size(); ++i)
                           os << (i ? " + " : "") << d.parts[i].describe();
                   },
               },
               v_);
    return os.str();
}

}  // namespace simarr
