#include "simarr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "simarr/error.hpp"
#include "simarr/parallel.hpp"
#include "simarr/rouche.hpp"

namespace simarr {

namespace {

// Feeds arrival-epoch rows into per-cycle sums.
class CycleTracker {
public:
    CycleTracker(std::size_t functionals, std::uint64_t burn_in)
        : acc_(functionals), current_(functionals, 0.0), burn_in_(burn_in) {}

    template <class F>
    void observe(std::uint64_t index, bool regeneration, F&& eval) {
        if (regeneration && index >= burn_in_) {
            if (active_) acc_.add_cycle(current_, length_);
            active_ = true;
            std::fill(current_.begin(), current_.end(), 0.0);
            length_ = 0.0;
        }
        if (!active_) return;
        eval(std::span<double>(current_));
        length_ += 1.0;
    }

    const RegenerativeAccumulator& accumulator() const { return acc_; }

private:
    RegenerativeAccumulator acc_;
    std::vector<double> current_;
    double length_ = 0.0;
    bool active_ = false;
    std::uint64_t burn_in_;
};

std::uint64_t burn_in_for(std::uint64_t n) {
    return static_cast<std::uint64_t>(std::ceil(kBurnInFraction * static_cast<double>(n)));
}

void check_grid(const std::vector<std::vector<double>>& grid, std::size_t dim) {
    for (const auto& s : grid)
        if (s.size() != dim)
            throw Error(ErrorCode::InvalidArgument,
                        "grid point has " + std::to_string(s.size()) + " coordinates, expected " +
                            std::to_string(dim));
}

// Adds exp(-<s, v>) for each grid point to out.
void add_lst_terms(const std::vector<std::vector<double>>& grid, std::span<const double> v,
                   std::span<double> out) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += grid[g][i] * v[i];
        out[g] += std::exp(-dot);
    }
}

std::vector<SimEstimate> finish_estimates(const RegenerativeAccumulator& acc) {
    std::vector<SimEstimate> out(acc.functionals());
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = acc.estimate(f);
    return out;
}

void require_simulable(const SystemConfig& config) {
    if (!config.stable()) {
        std::ostringstream os;
        os << "rho_1 = " << config.load(0) << " >= 1";
        throw Error(ErrorCode::UnstableSystem, os.str());
    }
}

constexpr int kServiceGridBits = 20;
constexpr int kSpeedGridBits = 6;
constexpr int kCapitalGridBits = kServiceGridBits + kSpeedGridBits;

double to_grid(double x, int bits) { return std::ldexp(std::nearbyint(std::ldexp(x, bits)), -bits); }

SimEstimate proportion(std::uint64_t hits, std::uint64_t n) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), static_cast<std::size_t>(n)};
}

}  // namespace

// ---------------------------------------------------------------------------

RegenerativeAccumulator::RegenerativeAccumulator(std::size_t functionals)
    : y_(functionals, 0.0), y2_(functionals, 0.0), ytau_(functionals, 0.0) {}

void RegenerativeAccumulator::add_cycle(std::span<const double> sums, double length) {
    ++n_;
    tau_ += length;
    tau2_ += length * length;
    for (std::size_t f = 0; f < y_.size(); ++f) {
        y_[f] += sums[f];
        y2_[f] += sums[f] * sums[f];
        ytau_[f] += sums[f] * length;
    }
}

void RegenerativeAccumulator::merge(const RegenerativeAccumulator& other) {
    if (other.y_.size() != y_.size())
        throw Error(ErrorCode::InvalidArgument, "merging accumulators of different width");
    n_ += other.n_;
    tau_ += other.tau_;
    tau2_ += other.tau2_;
    for (std::size_t f = 0; f < y_.size(); ++f) {
        y_[f] += other.y_[f];
        y2_[f] += other.y2_[f];
        ytau_[f] += other.ytau_[f];
    }
}

SimEstimate RegenerativeAccumulator::estimate(std::size_t f) const {
    if (n_ < kMinCycles)
        throw Error(ErrorCode::InsufficientCycles,
                    std::to_string(n_) + " complete cycles, need " + std::to_string(kMinCycles));
    const double n = static_cast<double>(n_);
    const double r = y_[f] / tau_;
    const double ss = y2_[f] - 2.0 * r * ytau_[f] + r * r * tau2_;
    const double var = std::max(0.0, ss / (n - 1.0));
    return {r, std::sqrt(var / n) / (tau_ / n), n_};
}

// ---------------------------------------------------------------------------

LindleyPath::LindleyPath(const SystemConfig& config, std::uint64_t seed, std::uint64_t stream,
                         LindleyOptions options)
    : LindleyPath(
          config.dimension(), config.lambda(),
          [&model = config.service()](Rng& rng, std::span<double> out) { model.sample(rng, out); },
          seed, stream, options) {
    if (!config.unit_speeds())
        throw Error(ErrorCode::InvalidArgument, "simulation expects a normalized config");
}

LindleyPath::LindleyPath(std::size_t dimension, double lambda, ServiceSource source,
                         std::uint64_t seed, std::uint64_t stream, LindleyOptions options)
    : dim_(dimension),
      lambda_(lambda),
      source_(std::move(source)),
      rng_(seed, stream),
      options_(options),
      v_(dimension, 0.0),
      b_(dimension, 0.0) {
    if (options_.pivot != 0 && (options_.pivot < 2 || options_.pivot > dim_))
        throw Error(ErrorCode::InvalidArgument, "pivot queue must lie in 2..K");
    if (options_.deterministic_interarrival && !(*options_.deterministic_interarrival > 0.0))
        throw Error(ErrorCode::InvalidArgument, "deterministic interarrival must be positive");
}

void LindleyPath::advance() {
    source_(rng_, b_);
    const double a = options_.deterministic_interarrival ? *options_.deterministic_interarrival
                                                         : rng_.exponential(lambda_);
    for (std::size_t i = 0; i < dim_; ++i) v_[i] = std::max(v_[i] + b_[i] - a, 0.0);
    if (options_.pivot != 0 && v_[options_.pivot - 1] == 0.0)
        std::fill(v_.begin(), v_.begin() + static_cast<std::ptrdiff_t>(options_.pivot - 1), 0.0);
    ++n_;
}

JointSamples run_lindley(const SystemConfig& config, std::uint64_t n_arrivals, std::uint64_t seed,
                         LindleyOptions options) {
    require_simulable(config);
    if (n_arrivals < 1000) throw Error(ErrorCode::InvalidArgument, "need at least 1000 arrivals");
    LindleyPath path(config, seed, 0, options);
    JointSamples out;
    out.dimension = config.dimension();
    out.seed = seed;
    out.arrivals = n_arrivals;
    out.values.reserve(n_arrivals * out.dimension);
    out.regeneration.reserve(n_arrivals);
    for (std::uint64_t n = 0; n < n_arrivals; ++n) {
        const auto v = path.current();
        out.values.insert(out.values.end(), v.begin(), v.end());
        out.regeneration.push_back(path.regeneration() ? 1 : 0);
        path.advance();
    }
    return out;
}

JointSamples simulate_modified(const SystemConfig& config, std::uint64_t n_arrivals,
                               std::uint64_t seed, std::size_t pivot) {
    LindleyOptions options;
    options.pivot = pivot;
    if (pivot < 2 || pivot > config.dimension())
        throw Error(ErrorCode::InvalidArgument, "pivot queue must lie in 2..K");
    return run_lindley(config, n_arrivals, seed, options);
}

std::vector<SimEstimate> estimate_functionals(
    const JointSamples& samples,
    const std::function<void(std::span<const double>, std::span<double>)>& f, std::size_t count) {
    CycleTracker tracker(count, burn_in_for(samples.rows()));
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        tracker.observe(i, samples.regeneration[i] != 0,
                        [&](std::span<double> acc) { f(samples.row(i), acc); });
    }
    return finish_estimates(tracker.accumulator());
}

std::vector<SimEstimate> estimate_lst(const JointSamples& samples,
                                      const std::vector<std::vector<double>>& grid) {
    check_grid(grid, samples.dimension);
    return estimate_functionals(
        samples,
        [&](std::span<const double> v, std::span<double> acc) { add_lst_terms(grid, v, acc); },
        grid.size());
}

SimEstimate estimate_mean(const JointSamples& samples, std::size_t queue) {
    if (queue >= samples.dimension) throw Error(ErrorCode::InvalidArgument, "queue out of range");
    return estimate_functionals(
        samples, [&](std::span<const double> v, std::span<double> acc) { acc[0] += v[queue]; },
        1)[0];
}

SimEstimate estimate_empty_fraction(const JointSamples& samples) {
    return estimate_functionals(
        samples,
        [](std::span<const double> v, std::span<double> acc) { acc[0] += v[0] == 0.0 ? 1.0 : 0.0; },
        1)[0];
}

std::vector<std::pair<double, double>> cycle_sums(
    const JointSamples& samples, const std::function<double(std::span<const double>)>& f) {
    std::vector<std::pair<double, double>> out;
    const std::uint64_t burn = burn_in_for(samples.rows());
    bool active = false;
    double y = 0.0, len = 0.0;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        if (samples.regeneration[i] && i >= burn) {
            if (active) out.emplace_back(y, len);
            active = true;
            y = len = 0.0;
        }
        if (!active) continue;
        y += f(samples.row(i));
        len += 1.0;
    }
    return out;
}

std::vector<SimEstimate> estimate_lst_stream(const SystemConfig& config,
                                             const std::vector<std::vector<double>>& grid,
                                             std::uint64_t n_arrivals, std::uint64_t seed,
                                             const StreamOptions& options) {
    require_simulable(config);
    check_grid(grid, config.dimension());
    const std::size_t reps = std::max<std::size_t>(1, options.replications);
    std::vector<RegenerativeAccumulator> parts(reps, RegenerativeAccumulator(grid.size()));
    parallel_for(reps, [&](std::size_t r) {
        const std::uint64_t n = n_arrivals / reps + (r < n_arrivals % reps ? 1 : 0);
        LindleyPath path(config, seed, r, options.lindley);
        CycleTracker tracker(grid.size(), burn_in_for(n));
        for (std::uint64_t i = 0; i < n; ++i) {
            tracker.observe(i, path.regeneration(),
                            [&](std::span<double> acc) { add_lst_terms(grid, path.current(), acc); });
            path.advance();
        }
        parts[r] = tracker.accumulator();
    });
    RegenerativeAccumulator total(grid.size());
    for (const auto& p : parts) total.merge(p);
    return finish_estimates(total);
}

// ---------------------------------------------------------------------------

ExtraWorkSampler::ExtraWorkSampler(const SystemConfig& config, std::size_t level)
    : config_(&config), level_(level), v_(level, 0.0), b_(config.dimension(), 0.0) {
    require_simulable(config);
    if (!config.unit_speeds())
        throw Error(ErrorCode::InvalidArgument, "simulation expects a normalized config");
    if (level < 2 || level > config.dimension())
        throw Error(ErrorCode::InvalidArgument, "level must lie in 2..K");
    if (!config.service().level_nondegenerate(level))
        throw Error(ErrorCode::Degenerate, "queues " + std::to_string(level - 1) + " and " +
                                               std::to_string(level) + " are a.s. identical");
}

void ExtraWorkSampler::operator()(Rng& rng, std::span<double> out) {
    const std::size_t pivot = level_ - 1;
    std::fill(v_.begin(), v_.end(), 0.0);
    for (;;) {
        config_->service().sample(rng, b_);
        for (std::size_t i = 0; i < level_; ++i) v_[i] += b_[i];
        const double a = rng.exponential(config_->lambda());
        if (a >= v_[pivot]) {
            for (std::size_t i = 0; i < pivot; ++i) out[i] = v_[i] - v_[pivot];
            return;
        }
        for (std::size_t i = 0; i < level_; ++i) v_[i] -= a;
    }
}

JointSamples sample_U(const SystemConfig& config, std::size_t level, std::size_t n_cycles,
                      std::uint64_t seed) {
    ExtraWorkSampler sampler(config, level);
    Rng rng(seed, 0);
    JointSamples out;
    out.dimension = level - 1;
    out.kind = EpochKind::CycleSummary;
    out.seed = seed;
    out.values.resize(n_cycles * out.dimension);
    out.regeneration.assign(n_cycles, 1);
    for (std::size_t c = 0; c < n_cycles; ++c)
        sampler(rng, std::span<double>(out.values.data() + c * out.dimension, out.dimension));
    return out;
}

JointSamples simulate_virtual(const SystemConfig& config, std::size_t level,
                              std::uint64_t n_arrivals, std::uint64_t seed) {
    if (n_arrivals < 1000) throw Error(ErrorCode::InvalidArgument, "need at least 1000 arrivals");
    auto sampler = std::make_shared<ExtraWorkSampler>(config, level);
    const std::size_t dim = sampler->dimension();
    LindleyPath path(
        dim, config.lambda(), [sampler](Rng& rng, std::span<double> out) { (*sampler)(rng, out); },
        seed, 0);
    JointSamples out;
    out.dimension = dim;
    out.seed = seed;
    out.arrivals = n_arrivals;
    out.values.reserve(n_arrivals * dim);
    out.regeneration.reserve(n_arrivals);
    for (std::uint64_t n = 0; n < n_arrivals; ++n) {
        const auto v = path.current();
        out.values.insert(out.values.end(), v.begin(), v.end());
        out.regeneration.push_back(path.regeneration() ? 1 : 0);
        path.advance();
    }
    return out;
}

std::vector<SimEstimate> iid_mean(const JointSamples& samples) {
    const std::size_t n = samples.rows();
    if (n < 2) throw Error(ErrorCode::InsufficientCycles, "need at least two samples");
    std::vector<SimEstimate> out(samples.dimension);
    for (std::size_t j = 0; j < samples.dimension; ++j) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = samples.row(i)[j];
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, (sum2 - sum * mean) / static_cast<double>(n - 1));
        out[j] = {mean, std::sqrt(var / static_cast<double>(n)), n};
    }
    return out;
}

std::vector<SimEstimate> iid_lst(const JointSamples& samples,
                                 const std::vector<std::vector<double>>& grid) {
    check_grid(grid, samples.dimension);
    const std::size_t n = samples.rows();
    if (n < 2) throw Error(ErrorCode::InsufficientCycles, "need at least two samples");
    std::vector<double> sum(grid.size(), 0.0), sum2(grid.size(), 0.0), term(grid.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(term.begin(), term.end(), 0.0);
        add_lst_terms(grid, samples.row(i), term);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            sum[g] += term[g];
            sum2[g] += term[g] * term[g];
        }
    }
    std::vector<SimEstimate> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double mean = sum[g] / static_cast<double>(n);
        const double var = std::max(0.0, (sum2[g] - sum[g] * mean) / static_cast<double>(n - 1));
        out[g] = {mean, std::sqrt(var / static_cast<double>(n)), n};
    }
    return out;
}

// ---------------------------------------------------------------------------

bool DualityReport::all_hold() const {
    return cylinder_ok && identities[0] && identities[1] && identities[2] && identities[3];
}

DualityReport verify_duality(const SystemConfig& config, std::span<const double> u,
                             std::uint64_t n_claims, std::uint64_t seed,
                             std::optional<DualityFault> fault) {
    const std::size_t dim = config.dimension();
    if (u.size() != dim)
        throw Error(ErrorCode::InvalidArgument, "capital vector must have one entry per book");
    if (n_claims < 1) throw Error(ErrorCode::InvalidArgument, "need at least one claim");
    if (fault && fault->queue >= dim) throw Error(ErrorCode::InvalidArgument, "fault queue out of range");

    DualityReport rep;
    rep.dimension = dim;
    rep.n_claims = n_claims;
    std::vector<double> c(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        if (u[i] < 0.0) throw Error(ErrorCode::InvalidArgument, "capital must be nonnegative");
        c[i] = std::max(to_grid(config.speeds()[i], kSpeedGridBits), std::ldexp(1.0, -kSpeedGridBits));
        rep.capital.push_back(to_grid(u[i], kCapitalGridBits));
    }

    // Claims B[n][i] and interarrival times A[n], n = 0..N-1 (A[n] precedes claim n).
    Rng rng(seed, 0);
    std::vector<double> b(n_claims * dim), a(n_claims), draw(dim);
    double total = 0.0;
    for (std::uint64_t n = 0; n < n_claims; ++n) {
        config.service().sample(rng, draw);
        for (std::size_t i = 0; i < dim; ++i) {
            b[n * dim + i] = to_grid(draw[i], kServiceGridBits);
            total = std::max(total, b[n * dim + i]);
        }
        a[n] = to_grid(rng.exponential(config.lambda()), kServiceGridBits);
        total = std::max(total, a[n] * *std::max_element(c.begin(), c.end()));
    }
    if (total * static_cast<double>(n_claims) > std::ldexp(1.0, 52 - kCapitalGridBits))
        throw Error(ErrorCode::InvalidArgument, "path too large for exact comparison");

    // Risk side: ruin by sigma_N iff some partial sum of B - cA exceeds u.
    rep.ruined.assign(dim, false);
    for (std::size_t i = 0; i < dim; ++i) {
        double s = 0.0;
        for (std::uint64_t n = 0; n < n_claims && !rep.ruined[i]; ++n) {
            s += b[n * dim + i] - c[i] * a[n];
            if (s > rep.capital[i]) rep.ruined[i] = true;
        }
    }

    // Queue side: customer k (0-based) is claim N-1-k, followed by the gap
    // A[N-1-k]; the workload after the last gap is compared with u.
    std::vector<double> queue_b(b);
    if (fault) {
        double sum = 0.0;
        for (std::uint64_t n = 0; n < n_claims; ++n) sum += b[n * dim + fault->queue];
        queue_b[fault->queue] += to_grid(1.0 + rep.capital[fault->queue] + sum, kServiceGridBits);
    }
    rep.exceeded.assign(dim, false);
    for (std::size_t i = 0; i < dim; ++i) {
        double v = 0.0;
        for (std::uint64_t k = 0; k < n_claims; ++k) {
            const std::uint64_t n = n_claims - 1 - k;
            v = std::max(v + queue_b[n * dim + i] - c[i] * a[n], 0.0);
        }
        rep.exceeded[i] = v > rep.capital[i];
    }

    for (std::size_t i = 0; i < dim; ++i)
        if (rep.ruined[i] != rep.exceeded[i]) rep.cylinder_ok = false;
    if (dim >= 2) {
        const bool e1 = rep.exceeded[0], e2 = rep.exceeded[1];
        const bool r1 = rep.ruined[0], r2 = rep.ruined[1];
        rep.identities[0] = (e1 && e2) == (r1 && r2);
        rep.identities[1] = (!e1 && !e2) == (!r1 && !r2);
        rep.identities[2] = (e1 && !e2) == (r1 && !r2);
        rep.identities[3] = (!e1 && e2) == (!r1 && r2);
    }
    return rep;
}

namespace {

ScalarDistribution random_distribution(Rng& rng) {
    const double pick = rng.uniform();
    auto rate = [&] { return 0.5 + 4.5 * rng.uniform(); };
    if (pick < 0.3) return ScalarDistribution::exponential(rate());
    if (pick < 0.5) {
        const int shape = 1 + static_cast<int>(rng.next_u64() % 4);
        return ScalarDistribution::erlang(shape, rate());
    }
    if (pick < 0.65) return ScalarDistribution::deterministic(rng.uniform());
    if (pick < 0.8) {
        const double w = rng.uniform();
        return ScalarDistribution::hyperexponential({w, 1.0 - w}, {rate(), rate()});
    }
    const double p0 = 0.9 * rng.uniform();
    return ScalarDistribution::zero_inflated(p0, ScalarDistribution::exponential(rate()));
}

}  // namespace

DualityCase random_duality_case(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, index);
    const std::size_t dim = 2 + rng.next_u64() % 2;
    const double lambda = 0.2 + 2.8 * rng.uniform();
    std::optional<ServiceModel> model;
    if (rng.uniform() < 0.75) {
        std::vector<ScalarDistribution> inc;
        for (std::size_t i = 0; i < dim; ++i) inc.push_back(random_distribution(rng));
        model = ServiceModel::ordered_increments(inc);
    } else {
        std::vector<double> a(dim);
        double level = 0.5 + 1.5 * rng.uniform();
        for (std::size_t i = 0; i < dim; ++i) {
            a[i] = level;
            level *= rng.uniform();
        }
        const auto base = random_distribution(rng);
        model = ServiceModel::proportional(base, a);
    }
    std::vector<double> speeds(dim);
    for (auto& c : speeds) c = 0.5 + 0.25 * static_cast<double>(rng.next_u64() % 7);
    SystemConfig config(lambda, speeds, *model);
    const auto means = config.service().mean_vector();
    std::vector<double> u(dim);
    for (std::size_t i = 0; i < dim; ++i) u[i] = (rng.uniform() < 0.1) ? 0.0 : 5.0 * means[0] * rng.uniform();
    const std::uint64_t n = 1 + rng.next_u64() % 10000;
    return {std::move(config), std::move(u), n, rng.next_u64()};
}

double truncation_bound(const SystemConfig& config, std::span<const double> u,
                        std::uint64_t horizon_claims) {
    if (!config.unit_speeds())
        throw Error(ErrorCode::InvalidArgument, "truncation bound expects a normalized config");
    require_simulable(config);
    const double lambda = config.lambda();
    const double umin = *std::min_element(u.begin(), u.end());
    const double n1 = static_cast<double>(horizon_claims) + 1.0;
    // log of exp(-theta umin) m^{N+1} / (1 - m), m = M_B1(theta) lambda / (lambda + theta).
    auto objective = [&](double theta) {
        const auto mgf = config.service().marginal_mgf(0, theta);
        if (!mgf) return std::numeric_limits<double>::infinity();
        const double m = *mgf * lambda / (lambda + theta);
        if (!(m < 1.0)) return std::numeric_limits<double>::infinity();
        return -theta * umin + n1 * std::log(m) - std::log1p(-m);
    };
    double hi = config.service().marginal_mgf_abscissa(0);
    if (!std::isfinite(hi)) {
        hi = 1.0;
        while (std::isfinite(objective(2.0 * hi)) && hi < 1e6) hi *= 2.0;
        hi *= 2.0;
    }
    constexpr int kGrid = 4000;
    double best = std::numeric_limits<double>::infinity();
    double best_theta = 0.0;
    for (int k = 1; k < kGrid; ++k) {
        const double theta = hi * k / kGrid;
        const double f = objective(theta);
        if (f < best) {
            best = f;
            best_theta = theta;
        }
    }
    if (!std::isfinite(best)) return 1.0;
    // Golden-section refinement on the bracketing cell.
    double lo_t = std::max(0.0, best_theta - hi / kGrid), hi_t = std::min(hi, best_theta + hi / kGrid);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double x1 = hi_t - g * (hi_t - lo_t), x2 = lo_t + g * (hi_t - lo_t);
        if (objective(x1) < objective(x2)) hi_t = x2; else lo_t = x1;
    }
    best = std::min(best, objective(0.5 * (lo_t + hi_t)));
    return std::min(1.0, std::exp(best));
}

double adjustment_coefficient(const SystemConfig& config) {
    const double lambda = config.lambda();
    // g(theta) = log E exp(theta (B1 - A)); convex with g(0) = 0, g'(0) < 0.
    auto g = [&](double theta) {
        const auto mgf = config.service().marginal_mgf(0, theta);
        if (!mgf) return std::numeric_limits<double>::infinity();
        return std::log(*mgf) + std::log(lambda / (lambda + theta));
    };
    const double abscissa = config.service().marginal_mgf_abscissa(0);
    double lo = 0.0, hi = 0.0;
    bool bracketed = false;
    if (std::isfinite(abscissa)) {
        for (int k = 1; k < 4000 && !bracketed; ++k) {
            const double theta = abscissa * k / 4000.0;
            if (g(theta) > 0.0) {
                hi = theta;
                bracketed = true;
            } else {
                lo = theta;
            }
        }
    } else {
        for (double theta = 1e-6; theta < 1e6 && !bracketed; theta *= 1.5) {
            if (g(theta) > 0.0) {
                hi = theta;
                bracketed = true;
            } else {
                lo = theta;
            }
        }
    }
    if (!bracketed) return 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    return lo;
}

RuinEstimates ruin_probability_mc(const SystemConfig& config, std::span<const double> u,
                                  std::uint64_t horizon_claims, std::uint64_t n_paths,
                                  std::uint64_t seed) {
    const std::size_t dim = config.dimension();
    if (dim < 2) throw Error(ErrorCode::InvalidArgument, "ruin events need at least two books");
    if (u.size() != dim)
        throw Error(ErrorCode::InvalidArgument, "capital vector must have one entry per book");
    if (n_paths < 2) throw Error(ErrorCode::InvalidArgument, "need at least two paths");
    if (!config.unit_speeds())
        throw Error(ErrorCode::InvalidArgument, "ruin simulation expects a normalized config");
    RuinEstimates out;
    out.a_priori_bound = truncation_bound(config, u, horizon_claims);
    // Book 2 claims never exceed book 1 claims, so R_1 serves both books.
    const double r1 = adjustment_coefficient(config);

    constexpr std::size_t kChunks = 64;
    const std::size_t chunks = std::min<std::uint64_t>(kChunks, n_paths);
    struct Counts {
        std::uint64_t survive = 0, ruined = 0, first = 0, second = 0;
        double tail = 0.0, tail2 = 0.0;
    };
    std::vector<Counts> counts(chunks);
    const double lambda = config.lambda();
    parallel_for(chunks, [&](std::size_t j) {
        const std::uint64_t paths = n_paths / chunks + (j < n_paths % chunks ? 1 : 0);
        Rng rng(seed, j + 1);
        std::vector<double> b(dim);
        Counts cnt;
        for (std::uint64_t p = 0; p < paths; ++p) {
            double s1 = 0.0, s2 = 0.0;
            bool r1_hit = false, r2_hit = false;
            for (std::uint64_t n = 0; n < horizon_claims && !(r1_hit && r2_hit); ++n) {
                config.service().sample(rng, b);
                const double a = rng.exponential(lambda);
                s1 += b[0] - a;
                s2 += b[1] - a;
                r1_hit = r1_hit || s1 > u[0];
                r2_hit = r2_hit || s2 > u[1];
            }
            if (!r1_hit && !r2_hit) ++cnt.survive;
            if (r1_hit && r2_hit) ++cnt.ruined;
            if (r1_hit && !r2_hit) ++cnt.first;
            if (!r1_hit && r2_hit) ++cnt.second;
            // Lundberg: P(later ruin | state at claim N) <= exp(-R (u - S_N)).
            double tail = 0.0;
            if (!r1_hit) tail += std::exp(-r1 * (u[0] - s1));
            if (!r2_hit) tail += std::exp(-r1 * (u[1] - s2));
            cnt.tail += tail;
            cnt.tail2 += tail * tail;
        }
        counts[j] = cnt;
    });
    Counts total;
    for (const auto& c : counts) {
        total.survive += c.survive;
        total.ruined += c.ruined;
        total.first += c.first;
        total.second += c.second;
        total.tail += c.tail;
        total.tail2 += c.tail2;
    }
    const double n = static_cast<double>(n_paths);
    out.both_survive = proportion(total.survive, n_paths);
    out.both_ruined = proportion(total.ruined, n_paths);
    out.only_first_ruined = proportion(total.first, n_paths);
    out.only_second_ruined = proportion(total.second, n_paths);
    if (r1 > 0.0) {
        const double mean = total.tail / n;
        const double var = std::max(0.0, (total.tail2 - total.tail * mean) / (n - 1.0));
        out.lundberg_remainder = mean + 4.0 * std::sqrt(var / n);
    }
    out.truncation_bound = std::min({1.0, out.a_priori_bound, out.lundberg_remainder});
    return out;
}

}  // namespace simarr
