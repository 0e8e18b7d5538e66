#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "simarr/rng.hpp"
#include "simarr/system_config.hpp"

namespace simarr {

enum class EpochKind { Arrival, CycleSummary };

/// Workload vectors, one row per observation epoch.
struct JointSamples {
    std::size_t dimension = 0;
    std::vector<double> values;             ///< row-major, rows() x dimension
    std::vector<std::uint8_t> regeneration;  ///< 1 where the row starts a cycle
    EpochKind kind = EpochKind::Arrival;
    std::uint64_t seed = 0;
    std::uint64_t arrivals = 0;

    std::size_t rows() const { return dimension ? values.size() / dimension : 0; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * dimension, dimension};
    }
};

struct SimEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_cycles = 0;
};

/// Fewer cycles than this raise InsufficientCycles.
inline constexpr std::size_t kMinCycles = 30;
/// Cycles starting within this leading fraction of the arrivals are discarded.
inline constexpr double kBurnInFraction = 0.1;

/// Sufficient statistics of the regenerative ratio estimator for several
/// functionals at once. Merging is associative and order independent.
class RegenerativeAccumulator {
public:
    explicit RegenerativeAccumulator(std::size_t functionals = 1);

    /// One complete cycle: sums[f] of functional f over the cycle, and its length.
    void add_cycle(std::span<const double> sums, double length);
    void merge(const RegenerativeAccumulator& other);

    std::size_t cycles() const { return n_; }
    std::size_t functionals() const { return y_.size(); }
    /// Ratio estimate with std error sqrt(Var(Y - r tau) / n) / mean(tau).
    SimEstimate estimate(std::size_t f) const;

private:
    std::size_t n_ = 0;
    double tau_ = 0.0, tau2_ = 0.0;
    std::vector<double> y_, y2_, ytau_;
};

/// Draws one service vector per call.
using ServiceSource = std::function<void(Rng&, std::span<double>)>;

struct LindleyOptions {
    /// Test-only non-Poisson mode: every interarrival time equals this value.
    std::optional<double> deterministic_interarrival;
    /// One-based pivot queue p >= 2: queues 1..p-1 are cleared whenever queue p
    /// empties. Zero runs the plain recursion.
    std::size_t pivot = 0;
};

/// Streaming multivariate Lindley recursion at arrival epochs, started empty.
/// Each step draws the full service vector, then the interarrival time.
class LindleyPath {
public:
    LindleyPath(const SystemConfig& config, std::uint64_t seed, std::uint64_t stream = 0,
                LindleyOptions options = {});
    LindleyPath(std::size_t dimension, double lambda, ServiceSource source, std::uint64_t seed,
                std::uint64_t stream = 0, LindleyOptions options = {});

    /// Workload seen by the current arrival.
    std::span<const double> current() const { return v_; }
    /// True when the current arrival finds queue 1 empty.
    bool regeneration() const { return v_[0] == 0.0; }
    std::uint64_t index() const { return n_; }
    void advance();

private:
    std::size_t dim_;
    double lambda_;
    ServiceSource source_;
    Rng rng_;
    LindleyOptions options_;
    std::vector<double> v_, b_;
    std::uint64_t n_ = 0;
};

/// n_arrivals >= 1000 rows of arrival-epoch workloads.
JointSamples run_lindley(const SystemConfig& config, std::uint64_t n_arrivals, std::uint64_t seed,
                         LindleyOptions options = {});

/// Modified process with pivot queue `pivot` (one-based, 2..K).
JointSamples simulate_modified(const SystemConfig& config, std::uint64_t n_arrivals,
                               std::uint64_t seed, std::size_t pivot);

/// Regenerative estimate of E f(V) from stored samples after burn-in.
std::vector<SimEstimate> estimate_functionals(
    const JointSamples& samples,
    const std::function<void(std::span<const double>, std::span<double>)>& f,
    std::size_t count);

/// E exp(-sum s_i V_i) for each real s in the grid.
std::vector<SimEstimate> estimate_lst(const JointSamples& samples,
                                      const std::vector<std::vector<double>>& grid);

/// Mean workload of a queue (zero-based).
SimEstimate estimate_mean(const JointSamples& samples, std::size_t queue);

/// Fraction of arrivals that find queue 1 empty.
SimEstimate estimate_empty_fraction(const JointSamples& samples);

/// Per-cycle (sum of f, length) pairs, in path order, after burn-in.
std::vector<std::pair<double, double>> cycle_sums(
    const JointSamples& samples, const std::function<double(std::span<const double>)>& f);

struct StreamOptions {
    /// Independent replications, each started empty with its own stream id.
    std::size_t replications = 8;
    LindleyOptions lindley;
};

/// estimate_lst without storing the path: n_arrivals split evenly over the
/// replications, whose cycles are pooled.
std::vector<SimEstimate> estimate_lst_stream(const SystemConfig& config,
                                             const std::vector<std::vector<double>>& grid,
                                             std::uint64_t n_arrivals, std::uint64_t seed,
                                             const StreamOptions& options = {});

/// Extra-work vectors (U_1..U_{m-1}) at the end of n_cycles independent busy
/// periods of queue m, each started by one arrival to an empty system.
JointSamples sample_U(const SystemConfig& config, std::size_t level, std::size_t n_cycles,
                      std::uint64_t seed);

/// Draws extra-work vectors of level m one busy period at a time.
class ExtraWorkSampler {
public:
    ExtraWorkSampler(const SystemConfig& config, std::size_t level);
    void operator()(Rng& rng, std::span<double> out);
    std::size_t dimension() const { return level_ - 1; }

private:
    const SystemConfig* config_;
    std::size_t level_;
    std::vector<double> v_, b_;
};

/// Virtual M/G/1 queue (vector valued, dimension m-1) with Poisson(lambda)
/// arrivals and service vectors drawn from the level-m extra work.
JointSamples simulate_virtual(const SystemConfig& config, std::size_t level,
                              std::uint64_t n_arrivals, std::uint64_t seed);

/// Sample mean and std error of i.i.d. rows, per column.
std::vector<SimEstimate> iid_mean(const JointSamples& samples);
/// Empirical E exp(-sum s_i X_i) of i.i.d. rows.
std::vector<SimEstimate> iid_lst(const JointSamples& samples,
                                 const std::vector<std::vector<double>>& grid);

/// Test hook: perturbs one queue-side service sample of the reversed path.
struct DualityFault {
    std::size_t queue = 0;
};

struct DualityReport {
    std::size_t dimension = 0;
    std::uint64_t n_claims = 0;
    std::vector<double> capital;   ///< u on the comparison grid
    std::vector<bool> ruined;      ///< tau_i(u_i) <= sigma_N
    std::vector<bool> exceeded;    ///< reversed-queue workload after N customers > u_i
    bool cylinder_ok = true;       ///< ruined == exceeded for every queue
    /// Queues 1, 2: both ruined, neither, only the first, only the second.
    bool identities[4] = {true, true, true, true};
    bool all_hold() const;
};

/// Builds one risk path of N claims and its time-reversed queue, then compares
/// the ruin events with the workload exceedances. Values are placed on a
/// dyadic grid so both sides are computed exactly.
DualityReport verify_duality(const SystemConfig& config, std::span<const double> u,
                             std::uint64_t n_claims, std::uint64_t seed,
                             std::optional<DualityFault> fault = {});

/// One randomized duality case: a raw config (random dimension 2..3, model,
/// speeds and rate), capital u and horizon N <= 10^4, with its path seed.
struct DualityCase {
    SystemConfig config;
    std::vector<double> u;
    std::uint64_t n_claims;
    std::uint64_t seed;
};

DualityCase random_duality_case(std::uint64_t seed, std::uint64_t index);

struct RuinEstimates {
    SimEstimate both_survive;
    SimEstimate both_ruined;
    SimEstimate only_first_ruined;
    SimEstimate only_second_ruined;
    /// Deterministic bound on the infinite-horizon bias (see truncation_bound).
    double a_priori_bound = 1.0;
    /// Sample mean + 4 std errors of sum_i exp(-R_1 (u_i - S_N^(i))) over books
    /// not yet ruined, R_1 the adjustment coefficient of book 1.
    double lundberg_remainder = 1.0;
    /// min(a_priori_bound, lundberg_remainder).
    double truncation_bound = 1.0;
};

/// Positive root R of E exp(R (B1 - A)) = 1, or 0 when none exists.
double adjustment_coefficient(const SystemConfig& config);

/// Bound on P(some book is first ruined after claim N), using the Lundberg
/// exponential bound of queue 1 and the smallest capital.
double truncation_bound(const SystemConfig& config, std::span<const double> u,
                        std::uint64_t horizon_claims);

/// Monte-Carlo ruin events of books 1 and 2 within horizon_claims claims.
RuinEstimates ruin_probability_mc(const SystemConfig& config, std::span<const double> u,
                                  std::uint64_t horizon_claims, std::uint64_t n_paths,
                                  std::uint64_t seed);

}  // namespace simarr
