#pragma once

#include <cstdint>
#include <string_view>

namespace seqcl {

enum class ModelKind { bernoulli, poisson };

// A one-parameter family whose mean parameter theta = E[X] is estimated by the
// sample mean. Bernoulli: theta in (0, 1). Poisson: theta in (0, inf).
//
// Functions below accept theta on the closure of the parameter space so that
// limit searches and rectangle bounds can evaluate boundary values; anything
// outside the closure raises DomainError.
struct DistributionModel {
    ModelKind kind = ModelKind::bernoulli;

    static constexpr DistributionModel bernoulli() { return {ModelKind::bernoulli}; }
    static constexpr DistributionModel poisson() { return {ModelKind::poisson}; }

    double theta_min() const { return 0.0; }
    double theta_max() const;
    bool bounded_support() const { return kind == ModelKind::bernoulli; }
    bool in_parameter_space(double theta) const;
    bool in_closure(double theta) const;
    // Largest attainable sum of n samples; -1 when unbounded.
    std::int64_t max_sum(std::int64_t n) const { return bounded_support() ? n : -1; }
    std::string_view name() const;

    friend bool operator==(const DistributionModel&, const DistributionModel&) = default;
};

DistributionModel model_from_name(std::string_view name);

// Sufficient statistic of n samples: k = X_1 + ... + X_n, estimate k / n.
struct SumStatistic {
    std::int64_t n = 0;
    std::int64_t k = 0;

    double mean() const { return static_cast<double>(k) / static_cast<double>(n); }
};

// Maps an observed sample mean z back to the sum statistic; throws DomainError
// when z is not on the support grid {k / n}.
SumStatistic statistic_from_mean(const DistributionModel& model, std::int64_t n, double z);

void check_theta(const DistributionModel& model, double theta);

// ln Pr{K = k | theta} for the n-sample sum K; -inf outside the support.
double log_pmf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta);
double pmf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta);

// Pr{K <= k | theta} and Pr{K >= k | theta}.
double cdf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta);
double sf_sum(const DistributionModel& model, std::int64_t n, std::int64_t k, double theta);

// F(z, theta) = Pr{mean <= z | theta} and G(z, theta) = Pr{mean >= z | theta}
// for any real z.
double tail_lower(const DistributionModel& model, std::int64_t n, double z, double theta);
double tail_upper(const DistributionModel& model, std::int64_t n, double z, double theta);

// Chernoff function inf_rho exp(-rho z) E[exp(rho X)], closed forms. z must lie
// in the closed convex hull of the support of X.
double log_chernoff(const DistributionModel& model, double z, double theta);
double chernoff_value(const DistributionModel& model, double z, double theta);

// ln f(x_1..x_n; a) - ln f(x_1..x_n; b) given the sum k (depends on data only
// through k for both families).
double log_likelihood_ratio(const DistributionModel& model, std::int64_t n, std::int64_t k,
                            double theta_a, double theta_b);

// Smallest K with Pr{sum > K | theta} <= eps (n-sample sum). For Bernoulli this
// is at most n.
std::int64_t support_cutoff(const DistributionModel& model, std::int64_t n, double theta, double eps);

} // namespace seqcl
