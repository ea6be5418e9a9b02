#pragma once

#include "seqcl/models.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace seqcl {

enum class LimitKind { exact, chernoff, approx };

// Confidence-limit construction for the mean parameter.
//  exact    - limits from the exact tails (Clopper-Pearson / Garwood).
//  chernoff - limits from the Chernoff bound on the tails.
//  approx   - normal approximation with the variance evaluated at
//             z + w (theta - z); w = 1 gives score limits, w = 0 Wald limits.
//             A coefficient delta maps to the critical value Phi^-1(1 - delta/2).
struct LimitFamily {
    LimitKind kind = LimitKind::exact;
    double w = 1.0;

    static constexpr LimitFamily exact() { return {LimitKind::exact, 1.0}; }
    static constexpr LimitFamily chernoff() { return {LimitKind::chernoff, 1.0}; }
    static LimitFamily approx(double w);

    std::string name() const;
    friend bool operator==(const LimitFamily&, const LimitFamily&) = default;
};

LimitFamily limit_family_from_name(std::string_view name, double w = 1.0);

// A computed limit. at_boundary is set when the defining set is empty and the
// value is the corresponding edge of the parameter space.
struct LimitValue {
    double value = 0.0;
    bool at_boundary = false;
};

// max{theta : G(z, theta) <= delta} and min{theta : F(z, theta) <= delta}.
LimitValue exact_lower(const DistributionModel& model, SumStatistic stat, double delta);
LimitValue exact_upper(const DistributionModel& model, SumStatistic stat, double delta);

// max{theta <= z : C(z, theta)^n <= delta} and min{theta >= z : C(z, theta)^n <= delta}.
LimitValue chernoff_lower(const DistributionModel& model, SumStatistic stat, double delta);
LimitValue chernoff_upper(const DistributionModel& model, SumStatistic stat, double delta);

// Normal-approximation limits, lower <= z <= upper, clamped to the closure of
// the parameter space.
std::pair<double, double> approx_limits(const DistributionModel& model, SumStatistic stat, double delta, double w);

double lower_limit(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double delta);
double upper_limit(const LimitFamily& family, const DistributionModel& model, SumStatistic stat, double delta);

// Limit-free crossing tests: lower_limit >= theta_ref and upper_limit <= theta_ref.
// Exact family: G(z, theta_ref) <= delta and F(z, theta_ref) <= delta.
// Chernoff family: C(z, theta_ref)^n <= delta with z >= theta_ref (resp. z <= theta_ref).
bool lower_crossed(const LimitFamily& family, const DistributionModel& model, SumStatistic stat,
                   double theta_ref, double delta);
bool upper_crossed(const LimitFamily& family, const DistributionModel& model, SumStatistic stat,
                   double theta_ref, double delta);

struct Crossing {
    bool lower_crossed = false;
    bool upper_crossed = false;
};

Crossing crossing_test(const LimitFamily& family, const DistributionModel& model, SumStatistic stat,
                       double theta_ref, double delta);

// Mean-valued convenience overloads (z must be on the support grid of n).
double lower_limit(const LimitFamily& family, const DistributionModel& model, std::int64_t n, double z, double delta);
double upper_limit(const LimitFamily& family, const DistributionModel& model, std::int64_t n, double z, double delta);
Crossing crossing_test(const LimitFamily& family, const DistributionModel& model, std::int64_t n, double z,
                       double theta_ref, double delta);

void check_delta(double delta);

} // namespace seqcl
