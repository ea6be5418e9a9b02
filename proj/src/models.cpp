#include "seqcl/models.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace seqcl {

namespace {

// Terms smaller than this fraction of the running sum are dropped once the
// summation has moved past the mode.
constexpr double kNegligible = 1e-18;

double clamp01(double p)
{
    return std::min(1.0, std::max(0.0, p));
}

void check_n(std::int64_t n)
{
    if (n < 1)
        throw DomainError("sample size must be positive, got " + std::to_string(n));
}

// Sum of pmf(j) for j = from, from-1, ..., 0, assuming the pmf is
// non-increasing in that direction.
double sum_downward(const DistributionModel& model, std::int64_t n, std::int64_t from, double theta)
{
    CompensatedSum acc;
    for (std::int64_t j = from; j >= 0; --j) {
        const double term = std::exp(log_pmf_sum(model, n, j, theta));
        acc.add(term);
        if (term <= kNegligible * acc.value())
            break;
    }
    return acc.value();
}

// Sum of pmf(j) for j = from, from+1, ..., up to the support end, assuming the
// pmf is non-increasing in that direction.
double sum_upward(const DistributionModel& model, std::int64_t n, std::int64_t from, double theta)
{
    const std::int64_t last = model.max_sum(n);
    CompensatedSum acc;
    for (std::int64_t j = from; last < 0 || j <= last; ++j) {
        const double term = std::exp(log_pmf_sum(model, n, j, theta));
        acc.add(term);
        if (term <= kNegligible * acc.value())
            break;
        if (term == 0.0 && acc.value() == 0.0 && static_cast<double>(j) > static_cast<double>(n) * theta + 1.0)
            break;
    }
    return acc.value();
}

} // namespace

double DistributionModel::theta_max() const
{
    return kind == ModelKind::bernoulli ? 1.0 : kInf;
}

bool DistributionModel::in_parameter_space(double theta) const
{
    return theta > 0.0 && theta < theta_max();
}

bool DistributionModel::in_closure(double theta) const
{
    return theta >= 0.0 && theta <= theta_max();
}

std::string_view DistributionModel::name() const
{
    return kind == ModelKind::bernoulli ? "bernoulli" : "poisson";
}

DistributionModel model_from_name(std::string_view name)
{
    if (name == "bernoulli")
        return DistributionModel::bernoulli();
    if (name == "poisson")
        return DistributionModel::poisson();
    throw DomainError("unknown model '" + std::string(name) + "'");
}

SumStatistic statistic_from_mean(const DistributionModel& model, std::int64_t n, double z)
{
    check_n(n);
    const double scaled = z * static_cast<double>(n);
    const auto k = static_cast<std::int64_t>(std::llround(scaled));
    if (!std::isfinite(scaled) || std::fabs(scaled - static_cast<double>(k)) > 1e-9 * std::max(1.0, scaled) || k < 0
        || (model.bounded_support() && k > n))
        throw DomainError("sample mean " + format_double(z) + " is not on the support grid for n = " + std::to_string(n));
    return {n, k};
}

void check_theta(const DistributionModel& model, double theta)
{
    if (!model.in_closure(theta) || std::isnan(theta))
        throw DomainError("parameter " + format_double(theta) + " outside the " + std::string(model.name())
                          + " parameter space");
}

double log_pmf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta)
{
    check_n(n);
    check_theta(model, theta);
    if (k < 0)
        return -kInf;
    if (model.kind == ModelKind::bernoulli) {
        if (k > n)
            return -kInf;
        if (theta == 0.0)
            return k == 0 ? 0.0 : -kInf;
        if (theta == 1.0)
            return k == n ? 0.0 : -kInf;
        return log_choose(n, k) + static_cast<double>(k) * std::log(theta)
               + static_cast<double>(n - k) * std::log1p(-theta);
    }
    const double lambda = static_cast<double>(n) * theta;
    if (lambda == 0.0)
        return k == 0 ? 0.0 : -kInf;
    return static_cast<double>(k) * std::log(lambda) - lambda - log_factorial(k);
}

double pmf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta)
{
    return std::exp(log_pmf_sum(model, n, k, theta));
}

double cdf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta)
{
    check_n(n);
    check_theta(model, theta);
    if (k < 0)
        return 0.0;
    if (model.bounded_support() && k >= n)
        return 1.0;
    const double mean = static_cast<double>(n) * theta;
    if (static_cast<double>(k) < mean)
        return clamp01(sum_downward(model, n, k, theta));
    return clamp01(1.0 - sum_upward(model, n, k + 1, theta));
}

double sf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta)
{
    check_n(n);
    check_theta(model, theta);
    if (k <= 0)
        return 1.0;
    if (model.bounded_support() && k > n)
        return 0.0;
    const double mean = static_cast<double>(n) * theta;
    if (static_cast<double>(k) > mean)
        return clamp01(sum_upward(model, n, k, theta));
    return clamp01(1.0 - sum_downward(model, n, k - 1, theta));
}

double tail_lower(const DistributionModel& model, std::int64_t n, double z, double theta)
{
    check_n(n);
    const double k = std::floor(z * static_cast<double>(n) + 1e-9);
    if (k < 0.0)
        return 0.0;
    if (k > 9e15)
        return 1.0;
    return cdf_sum(model, n, static_cast<std::int64_t>(k), theta);
}

double tail_upper(const DistributionModel& model, std::int64_t n, double z, double theta)
{
    check_n(n);
    const double k = std::ceil(z * static_cast<double>(n) - 1e-9);
    if (k <= 0.0)
        return 1.0;
    if (k > 9e15)
        return 0.0;
    return sf_sum(model, n, static_cast<std::int64_t>(k), theta);
}

double log_chernoff(const DistributionModel& model, double z, double theta)
{
    check_theta(model, theta);
    if (model.kind == ModelKind::bernoulli) {
        if (!(z >= 0.0 && z <= 1.0))
            throw DomainError("Chernoff argument " + format_double(z) + " outside [0, 1]");
        const double low = z == 0.0 ? 0.0 : z * (std::log(theta) - std::log(z));
        const double high = z == 1.0 ? 0.0 : (1.0 - z) * (std::log1p(-theta) - std::log1p(-z));
        const double value = low + high;
        return std::isnan(value) ? -kInf : std::min(0.0, value);
    }
    if (!(z >= 0.0) || std::isinf(z))
        throw DomainError("Chernoff argument " + format_double(z) + " outside [0, inf)");
    if (z == 0.0)
        return -theta;
    if (theta == 0.0)
        return -kInf;
    return std::min(0.0, z - theta + z * (std::log(theta) - std::log(z)));
}

double chernoff_value(const DistributionModel& model, double z, double theta)
{
    return std::exp(log_chernoff(model, z, theta));
}

double log_likelihood_ratio(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta_a,
                            double theta_b)
{
    check_n(n);
    check_theta(model, theta_a);
    check_theta(model, theta_b);
    const auto kk = static_cast<double>(k);
    const auto nn = static_cast<double>(n);
    if (model.kind == ModelKind::bernoulli) {
        const double la = xlogy(kk, theta_a) + xlogy(nn - kk, 1.0 - theta_a);
        const double lb = xlogy(kk, theta_b) + xlogy(nn - kk, 1.0 - theta_b);
        return la - lb;
    }
    return xlogy(kk, theta_a) - xlogy(kk, theta_b) - nn * (theta_a - theta_b);
}

std::int64_t support_cutoff(const DistributionModel& model, std::int64_t n, double theta, double eps)
{
    check_n(n);
    check_theta(model, theta);
    const auto mode = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * theta));
    const std::int64_t last = model.max_sum(n);
    // pmf from the mode upward until negligible
    std::vector<double> terms;
    for (std::int64_t j = mode + 1; last < 0 || j <= last; ++j) {
        const double term = pmf_sum(model, n, j, theta);
        terms.push_back(term);
        if (term < eps * 1e-6 || (term == 0.0 && j > mode + 1))
            break;
    }
    // tail_after[K] = Pr{sum > K} for K = mode .. mode + terms.size()
    double tail = 0.0;
    std::int64_t cutoff = mode + static_cast<std::int64_t>(terms.size());
    for (std::int64_t idx = static_cast<std::int64_t>(terms.size()) - 1; idx >= 0; --idx) {
        tail += terms[static_cast<std::size_t>(idx)];
        if (tail > eps)
            break;
        cutoff = mode + idx;
    }
    if (last >= 0)
        cutoff = std::min(cutoff, last);
    return std::max<std::int64_t>(cutoff, 0);
}

} // namespace seqcl
