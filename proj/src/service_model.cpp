#include "simarr/service_model.hpp"

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

// Weighted combination sum_j (a_j - a_{j+1}) S_j of the partial sums, which
// equals sum_i a_i s_i.
cplx proportional_argument(const std::vector<double>& a, std::span<const cplx> partial) {
    cplx z = 0.0;
    const std::size_t k = a.size();
    for (std::size_t j = 0; j < k; ++j) {
        const double next = j + 1 < k ? a[j + 1] : 0.0;
        const double w = a[j] - next;
        if (w != 0.0) z += w * partial[j];
    }
    return z;
}

}  // namespace

std::vector<cplx> partial_sums(std::span<const cplx> s) {
    std::vector<cplx> out(s.size());
    cplx acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        acc += s[i];
        out[i] = acc;
    }
    return out;
}

ServiceModel ServiceModel::ordered_increments(std::vector<ScalarDistribution> increments) {
    if (increments.empty())
        throw Error(ErrorCode::ValidationError, "ordered_increments needs at least one increment");
    const std::size_t dim = increments.size();
    return ServiceModel(OrderedIncrements{std::move(increments)}, dim);
}

ServiceModel ServiceModel::proportional(ScalarDistribution base, std::vector<double> coefficients) {
    if (coefficients.empty())
        throw Error(ErrorCode::ValidationError, "proportional needs at least one coefficient");
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        if (!std::isfinite(coefficients[i]) || coefficients[i] < 0.0)
            throw Error(ErrorCode::ValidationError, "proportional coefficients must be >= 0");
        if (i > 0 && coefficients[i] > coefficients[i - 1])
            throw Error(ErrorCode::OrderingViolated,
                        "proportional coefficients must be nonincreasing (a_" + std::to_string(i) +
                            " < a_" + std::to_string(i + 1) + ")");
    }
    const std::size_t dim = coefficients.size();
    return ServiceModel(Proportional{std::move(base), std::move(coefficients)}, dim);
}

ServiceModel ServiceModel::mixture(std::vector<double> weights, std::vector<ServiceModel> components) {
    if (components.empty() || weights.size() != components.size())
        throw Error(ErrorCode::ValidationError,
                    "mixture needs matching, nonempty weights and components");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw Error(ErrorCode::ValidationError, "mixture weights must be >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorCode::ValidationError, "mixture weights must sum to 1");
    const std::size_t dim = components.front().dimension();
    for (const auto& c : components)
        if (c.dimension() != dim)
            throw Error(ErrorCode::ValidationError, "mixture components differ in dimension");
    return ServiceModel(Mixture{std::move(weights), std::move(components)}, dim);
}

cplx ServiceModel::joint_lst(std::span<const cplx> s) const {
    if (s.size() != dim_)
        throw Error(ErrorCode::InvalidArgument, "joint_lst: argument length " +
                                                    std::to_string(s.size()) + " != dimension " +
                                                    std::to_string(dim_));
    const auto partial = partial_sums(s);
    for (std::size_t j = 0; j < partial.size(); ++j)
        if (partial[j].real() < -domain_tolerance)
            throw Error(ErrorCode::DomainError,
                        "partial sum S_" + std::to_string(j + 1) + " has negative real part");
    return lst_partial_sums(partial);
}

cplx ServiceModel::lst_partial_sums(std::span<const cplx> partial) const {
    return std::visit(overloaded{
                          [&](const OrderedIncrements& m) {
                              cplx v = 1.0;
                              for (std::size_t j = 0; j < m.increments.size(); ++j)
                                  v *= m.increments[j].lst(partial[j]);
                              return v;
                          },
                          [&](const Proportional& m) {
                              return m.base.lst(proportional_argument(m.coefficients, partial));
                          },
                          [&](const Mixture& m) {
                              cplx v = 0.0;
                              for (std::size_t c = 0; c < m.components.size(); ++c)
                                  v += m.weights[c] * m.components[c].lst_partial_sums(partial);
                              return v;
                          },
                      },
                      v_);
}

cplx ServiceModel::lst_complement_partial_sums(std::span<const cplx> partial) const {
    return std::visit(overloaded{
                          [&](const OrderedIncrements& m) {
                              cplx c = 0.0;
                              for (std::size_t j = 0; j < m.increments.size(); ++j) {
                                  const cplx cj = m.increments[j].lst_complement(partial[j]);
                                  c = c + cj - c * cj;
                              }
                              return c;
                          },
                          [&](const Proportional& m) {
                              return m.base.lst_complement(
                                  proportional_argument(m.coefficients, partial));
                          },
                          [&](const Mixture& m) {
                              cplx v = 0.0;
                              for (std::size_t c = 0; c < m.components.size(); ++c)
                                  v += m.weights[c] *
                                       m.components[c].lst_complement_partial_sums(partial);
                              return v;
                          },
                      },
                      v_);
}

std::vector<double> ServiceModel::mean_vector() const {
    return std::visit(overloaded{
                          [](const OrderedIncrements& m) {
                              std::vector<double> out(m.increments.size());
                              double acc = 0.0;
                              for (std::size_t j = m.increments.size(); j-- > 0;) {
                                  acc += m.increments[j].mean();
                                  out[j] = acc;
                              }
                              return out;
                          },
                          [](const Proportional& m) {
                              std::vector<double> out(m.coefficients.size());
                              const double mu = m.base.mean();
                              for (std::size_t i = 0; i < out.size(); ++i)
                                  out[i] = m.coefficients[i] * mu;
                              return out;
                          },
                          [this](const Mixture& m) {
                              std::vector<double> out(dim_, 0.0);
                              for (std::size_t c = 0; c < m.components.size(); ++c) {
                                  const auto mc = m.components[c].mean_vector();
                                  for (std::size_t i = 0; i < dim_; ++i)
                                      out[i] += m.weights[c] * mc[i];
                              }
                              return out;
                          },
                      },
                      v_);
}

double ServiceModel::second_moment(std::size_t i) const {
    return std::visit(overloaded{
                          [i](const OrderedIncrements& m) {
                              double var = 0.0;
                              double mean = 0.0;
                              for (std::size_t j = i; j < m.increments.size(); ++j) {
                                  var += m.increments[j].variance();
                                  mean += m.increments[j].mean();
                              }
                              return var + mean * mean;
                          },
                          [i](const Proportional& m) {
                              const double a = m.coefficients[i];
                              return a * a * m.base.second_moment();
                          },
                          [i](const Mixture& m) {
                              double v = 0.0;
                              for (std::size_t c = 0; c < m.components.size(); ++c)
                                  v += m.weights[c] * m.components[c].second_moment(i);
                              return v;
                          },
                      },
                      v_);
}

std::optional<double> ServiceModel::marginal_mgf(std::size_t i, double theta) const {
    if (theta >= marginal_mgf_abscissa(i)) return std::nullopt;
    return std::visit(overloaded{
                          [i, theta](const OrderedIncrements& m) -> std::optional<double> {
                              double v = 1.0;
                              for (std::size_t j = i; j < m.increments.size(); ++j)
                                  v *= *m.increments[j].mgf(theta);
                              return v;
                          },
                          [i, theta](const Proportional& m) -> std::optional<double> {
                              return m.base.mgf(m.coefficients[i] * theta);
                          },
                          [i, theta](const Mixture& m) -> std::optional<double> {
                              double v = 0.0;
                              for (std::size_t c = 0; c < m.components.size(); ++c)
                                  v += m.weights[c] * *m.components[c].marginal_mgf(i, theta);
                              return v;
                          },
                      },
                      v_);
}

double ServiceModel::marginal_mgf_abscissa(std::size_t i) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(overloaded{
                          [i](const OrderedIncrements& m) {
                              double r = inf;
                              for (std::size_t j = i; j < m.increments.size(); ++j)
                                  r = std::min(r, m.increments[j].mgf_abscissa());
                              return r;
                          },
                          [i](const Proportional& m) {
                              const double a = m.coefficients[i];
                              return a == 0.0 ? inf : m.base.mgf_abscissa() / a;
                          },
                          [i](const Mixture& m) {
                              double r = inf;
                              for (std::size_t c = 0; c < m.components.size(); ++c)
                                  if (m.weights[c] > 0.0)
                                      r = std::min(r, m.components[c].marginal_mgf_abscissa(i));
                              return r;
                          },
                      },
                      v_);
}

void ServiceModel::sample(Rng& rng, std::span<double> out) const {
    std::visit(overloaded{
                   [&](const OrderedIncrements& m) {
                       double acc = 0.0;
                       for (std::size_t j = m.increments.size(); j-- > 0;) {
                           acc += m.increments[j].sample(rng);
                           out[j] = acc;
                       }
                   },
                   [&](const Proportional& m) {
                       const double x = m.base.sample(rng);
                       for (std::size_t i = 0; i < m.coefficients.size(); ++i)
                           out[i] = m.coefficients[i] * x;
                   },
                   [&](const Mixture& m) {
                       const double u = rng.uniform();
                       double acc = 0.0;
                       std::size_t c = 0;
                       for (; c + 1 < m.components.size(); ++c) {
                           acc += m.weights[c];
                           if (u <= acc) break;
                       }
                       m.components[c].sample(rng, out);
                   },
               },
               v_);
}

bool ServiceModel::level_nondegenerate(std::size_t level) const {
    if (level < 2 || level > dim_)
        throw Error(ErrorCode::InvalidArgument, "level must lie in 2..K");
    const std::size_t hi = level - 2;
    const std::size_t lo = level - 1;
    return std::visit(overloaded{
                          [&](const OrderedIncrements& m) {
                              return !m.increments[hi].almost_surely_zero();
                          },
                          [&](const Proportional& m) {
                              return m.coefficients[hi] > m.coefficients[lo] &&
                                     !m.base.almost_surely_zero();
                          },
                          [&](const Mixture& m) {
                              for (std::size_t c = 0; c < m.components.size(); ++c)
                                  if (m.weights[c] > 0.0 &&
                                      m.components[c].level_nondegenerate(level))
                                      return true;
                              return false;
                          },
                      },
                      v_);
}

ServiceModel ServiceModel::select(std::span<const std::size_t> coordinates) const {
    if (coordinates.empty())
        throw Error(ErrorCode::InvalidArgument, "select needs at least one coordinate");
    for (std::size_t k = 0; k < coordinates.size(); ++k) {
        if (coordinates[k] >= dim_ || (k > 0 && coordinates[k] <= coordinates[k - 1]))
            throw Error(ErrorCode::InvalidArgument,
                        "select coordinates must be increasing and in range");
    }
    return std::visit(overloaded{
                          [&](const OrderedIncrements& m) {
                              std::vector<ScalarDistribution> inc;
                              for (std::size_t k = 0; k < coordinates.size(); ++k) {
                                  const std::size_t end =
                                      k + 1 < coordinates.size() ? coordinates[k + 1] : dim_;
                                  std::vector<ScalarDistribution> parts(
                                      m.increments.begin() + coordinates[k],
                                      m.increments.begin() + end);
                                  inc.push_back(ScalarDistribution::convolution(std::move(parts)));
                              }
                              return ordered_increments(std::move(inc));
                          },
                          [&](const Proportional& m) {
                              std::vector<double> a;
                              for (auto c : coordinates) a.push_back(m.coefficients[c]);
                              return proportional(m.base, std::move(a));
                          },
                          [&](const Mixture& m) {
                              std::vector<ServiceModel> comps;
                              for (const auto& c : m.components) comps.push_back(c.select(coordinates));
                              return mixture(m.weights, std::move(comps));
                          },
                      },
                      v_);
}

ServiceModel ServiceModel::leading(std::size_t m) const {
    if (m == dim_) return *this;
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return select(idx);
}

ServiceModel ServiceModel::scaled(std::span<const double> factors) const {
    if (factors.size() != dim_)
        throw Error(ErrorCode::InvalidArgument, "scaled: one factor per coordinate");
    for (double f : factors)
        if (!std::isfinite(f) || f <= 0.0)
            throw Error(ErrorCode::InvalidArgument, "scaled: factors must be positive");
    return std::visit(
        overloaded{
            [&](const OrderedIncrements& m) {
                for (double f : factors)
                    if (f != factors[0])
                        throw Error(ErrorCode::OrderingViolated,
                                    "ordered_increments with unequal speeds has no "
                                    "independent-increment form after scaling");
                std::vector<ScalarDistribution> inc;
                for (const auto& d : m.increments) inc.push_back(d.scaled(factors[0]));
                return ordered_increments(std::move(inc));
            },
            [&](const Proportional& m) {
                std::vector<double> a(m.coefficients.size());
                for (std::size_t i = 0; i < a.size(); ++i) a[i] = m.coefficients[i] * factors[i];
                return proportional(m.base, std::move(a));
            },
            [&](const Mixture& m) {
                std::vector<ServiceModel> comps;
                for (const auto& c : m.components) comps.push_back(c.scaled(factors));
                return mixture(m.weights, std::move(comps));
            },
        },
        v_);
}

std::string ServiceModel::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const OrderedIncrements& m) {
                       os << "OrderedIncrements[";
                       for (std::size_t j = 0; j < m.increments.size(); ++j)
                           os << (j ? ", " : "") << m.increments[j].describe();
                       os << "]";
                   },
                   [&](const Proportional& m) {
                       os << "Proportional[" << m.base.describe() << "; a=";
                       for (std::size_t j = 0; j < m.coefficients.size(); ++j)
                           os << (j ? "," : "") << m.coefficients[j];
                       os << "]";
                   },
                   [&](const Mixture& m) {
                       os << "Mixture[";
                       for (std::size_t c = 0; c < m.components.size(); ++c)
                           os << (c ? ", " : "") << m.weights[c] << ":" << m.components[c].describe();
                       os << "]";
                   },
               },
               v_);
    return os.str();
}

}  // namespace simarr
