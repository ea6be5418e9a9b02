#include "seqcl/limits.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace seqcl {

namespace {

// n ln C(z, theta) <= ln delta, with ln delta pulled in by a relative 1e-12 so that
// log rounding cannot admit a theta just past the true boundary.
bool chernoff_small(const DistributionModel& model, std::int64_t n, double z, double theta, double delta)
{
    const double log_delta = std::log(delta);
    return static_cast<double>(n) * log_chernoff(model, z, theta) <= log_delta * (1.0 + 1e-12);
}

// Grows hi geometrically until pred(hi) fails (unbounded parameter spaces).
template <class Pred>
double expand_until_false(double start, Pred&& pred)
{
    double hi = std::max(start, 1.0);
    for (int it = 0; it < 2000 && pred(hi); ++it)
        hi *= 2.0;
    if (pred(hi))
        throw DomainError("limit search failed to bracket the root");
    return hi;
}

double clamp_to_closure(const DistributionModel& model, double theta)
{
    return std::min(model.theta_max(), std::max(0.0, theta));
}

void check_stat(const DistributionModel& model, SumStatistic stat)
{
    if (stat.n < 1 || stat.k < 0 || (model.bounded_support() && stat.k > stat.n))
        throw DomainError("sum statistic (n = " + std::to_string(stat.n) + ", k = " + std::to_string(stat.k)
                          + ") outside the support");
}

} // namespace

void check_delta(double delta)
{
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("confidence coefficient " + format_double(delta) + " outside (0, 1)");
}

LimitFamily LimitFamily::approx(double w)
{
    if (!(w >= 0.0 && w <= 1.0))
        throw DomainError("approximation weight w = " + format_double(w) + " outside [0, 1]");
    return {LimitKind::approx, w};
}

std::string LimitFamily::name() const
{
    switch (kind) {
    case LimitKind::exact:
        return "exact";
    case LimitKind::chernoff:
        return "chernoff";
    case LimitKind::approx:
        return "approx";
    }
    return "exact";
}

LimitFamily limit_family_from_name(std::string_view name, double w)
{
    if (name == "exact")
        return LimitFamily::exact();
    if (name == "chernoff")
        return LimitFamily::chernoff();
    if (name == "approx")
        return LimitFamily::approx(w);
    throw DomainError("unknown limit family '" + std::string(name) + "'");
}

LimitValue exact_lower(const DistributionModel& model, SumStatistic stat, double delta)
{
    check_stat(model, stat);
    check_delta(delta);
    if (stat.k == 0)
        return {0.0, true};
    auto pred = [&](double theta) { return sf_sum(model, stat.n, stat.k, theta) <= delta; };
    const double hi = model.bounded_support() ? 1.0 : expand_until_false(2.0 * stat.mean(), pred);
    return {bisect_boundary(0.0, hi, pred).first, false};
}

LimitValue exact_upper(const DistributionModel& model, SumStatistic stat, double delta)
{
    check_stat(model, stat);
    check_delta(delta);
    if (model.bounded_support() && stat.k == stat.n)
        return {1.0, true};
    auto above = [&](double theta) { return cdf_sum(model, stat.n, stat.k, theta) > delta; };
    const double hi = model.bounded_support() ? 1.0 : expand_until_false(2.0 * stat.mean() + 1.0, above);
    return {bisect_boundary(0.0, hi, above).second, false};
}

LimitValue chernoff_lower(const DistributionModel& model, SumStatistic stat, double delta)
{
    check_stat(model, stat);
    check_delta(delta);
    const double z = stat.mean();
    if (z == 0.0)
        return {0.0, true};
    auto pred = [&](double theta) { return chernoff_small(model, stat.n, z, theta, delta); };
    return {bisect_boundary(0.0, z, pred).first, false};
}

LimitValue chernoff_upper(const DistributionModel& model, SumStatistic stat, double delta)
{
    check_stat(model, stat);
    check_delta(delta);
    const double z = stat.mean();
    if (model.bounded_support() && z == 1.0)
        return {1.0, true};
    auto above = [&](double theta) { return !chernoff_small(model, stat.n, z, theta, delta); };
    const double hi = model.bounded_support() ? 1.0 : expand_until_false(2.0 * z + 1.0, above);
    return {bisect_boundary(z, hi, above).second, false};
}

std::pair<double, double> approx_limits(const DistributionModel& model, SumStatistic stat, double delta, double w)
{
    check_stat(model, stat);
    check_delta(delta);
    if (!(w >= 0.0 && w <= 1.0))
        throw DomainError("approximation weight w = " + format_double(w) + " outside [0, 1]");
    const double z = stat.mean();
    const auto n = static_cast<double>(stat.n);
    const double crit = normal_quantile(1.0 - delta / 2.0);
    double lower = z;
    double upper = z;
    if (model.kind == ModelKind::bernoulli) {
        const double centre = z + w * crit * crit / (2.0 * n) * (1.0 - 2.0 * (1.0 - w) * z);
        const double half = crit * std::sqrt(z * (1.0 - z) / n + std::pow(w * crit / (2.0 * n), 2));
        const double denom = 1.0 + (w * crit) * (w * crit) / n;
        lower = (centre - half) / denom;
        upper = (centre + half) / denom;
    } else {
        // (theta - z)^2 = crit^2 (z + w (theta - z)) / n, solved for theta - z
        const double b = w * crit * crit / n;
        const double disc = std::sqrt(b * b + 4.0 * crit * crit * z / n);
        lower = z + 0.5 * (b - disc);
        upper = z + 0.5 * (b + disc);
    }
    lower = std::min(z, clamp_to_closure(model, lower));
    upper = std::max(z, clamp_to_closure(model, upper));
    return {lower, upper};
}

double lower_limit(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double delta)
{
    switch (family.kind) {
    case LimitKind::exact:
        return exact_lower(model, stat, delta).value;
    case LimitKind::chernoff:
        return chernoff_lower(model, stat, delta).value;
    case LimitKind::approx:
        return approx_limits(model, stat, delta, family.w).first;
    }
    return 0.0;
}

double upper_limit(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double delta)
{
    switch (family.kind) {
    case LimitKind::exact:
        return exact_upper(model, stat, delta).value;
    case LimitKind::chernoff:
        return chernoff_upper(model, stat, delta).value;
    case LimitKind::approx:
        return approx_limits(model, stat, delta, family.w).second;
    }
    return 0.0;
}

bool lower_crossed(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double theta_ref,
                   double delta)
{
    check_stat(model, stat);
    check_delta(delta);
    switch (family.kind) {
    case LimitKind::exact:
        return sf_sum(model, stat.n, stat.k, theta_ref) <= delta;
    case LimitKind::chernoff:
        return stat.mean() >= theta_ref && chernoff_small(model, stat.n, stat.mean(), theta_ref, delta);
    case LimitKind::approx:
        return approx_limits(model, stat, delta, family.w).first >= theta_ref;
    }
    return false;
}

bool upper_crossed(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double theta_ref,
                   double delta)
{
    check_stat(model, stat);
    check_delta(delta);
    switch (family.kind) {
    case LimitKind::exact:
        return cdf_sum(model, stat.n, stat.k, theta_ref) <= delta;
    case LimitKind::chernoff:
        return stat.mean() <= theta_ref && chernoff_small(model, stat.n, stat.mean(), theta_ref, delta);
    case LimitKind::approx:
        return approx_limits(model, stat, delta, family.w).second <= theta_ref;
    }
    return false;
}

Crossing crossing_test(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double theta_ref,
                       double delta)
{
    return {lower_crossed(family, model, stat, theta_ref, delta), upper_crossed(family, model, stat, theta_ref, delta)};
}

double lower_limit(const LimitFamily& family, const DistributionModel& model, std::int64_t n, double z, double delta)
{
    return lower_limit(family, model, statistic_from_mean(model, n, z), delta);
}

double upper_limit(const LimitFamily& family, const DistributionModel& model, std::int64_t n, double z, double delta)
{
    return upper_limit(family, model, statistic_from_mean(model, n, z), delta);
}

Crossing crossing_test(const LimitFamily& family, const DistributionModel& model, std::int64_t n, double z,
                       double theta_ref, double delta)
{
    return crossing_test(family, model, statistic_from_mean(model, n, z), theta_ref, delta);
}

} // namespace seqcl
