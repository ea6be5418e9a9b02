#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// library's pmf, DP or threshold code unless stated.

#include "seqcl/models.hpp"
#include "seqcl/plans.hpp"
#include "seqcl/two_prop.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

// Binomial mass from a direct factorial product in long double.
double binom_pmf(std::int64_t n, std::int64_t k, double p);
// Poisson(lambda) mass by repeated multiplication (small k only).
double poisson_pmf(double lambda, std::int64_t k);
double model_pmf(const seqcl::DistributionModel& m, std::int64_t n, std::int64_t k, double theta);

// Pr{sum <= k} / Pr{sum >= k} by summing model_pmf.
double cdf(const seqcl::DistributionModel& m, std::int64_t n, std::int64_t k, double theta);
double sf(const seqcl::DistributionModel& m, std::int64_t n, std::int64_t k, double theta);

// inf_rho exp(-rho z) E exp(rho X) by a rho grid followed by golden-section refinement.
double chernoff_min(const seqcl::DistributionModel& m, double z, double theta);

// Hypotheses i = 1..m whose inclusion rule holds at (n, k):
//   (i == 1 or L(k/n, alpha_{i-1}) >= theta'_{i-1}) and (i == m or U(k/n, beta_i) <= theta''_i)
// evaluated with the library's confidence limits (not its thresholds).
std::vector<int> inclusion_set(const seqcl::HypothesisDesign& d, std::int64_t n, std::int64_t k);

// Acceptance probabilities by enumerating every sequence of per-stage sum
// increments (no merging of states). Decisions come from inclusion_set; on a
// tie the plan's own choice is used after checking it is one of the candidates.
// Bernoulli plans only.
std::vector<double> enumerate_oc(const seqcl::MultiHypPlan& plan, double theta);

// Pr{reject H_i | p} by enumerating per-stage increment pairs with binom_pmf.
double enumerate_two_prop_reject(const seqcl::TwoPropPlan& plan, int hypothesis, double px, double py);

// Label of one cell straight from the Newcombe inclusion rule with the
// zone-midpoint split between adjacent hypotheses (recomputes the score roots
// independently).
int two_prop_label(const seqcl::TwoPropDesign& d, std::int64_t nx, std::int64_t ny, std::int64_t kx,
                   std::int64_t ky);

// Newcombe limits from the displayed quadratic roots.
std::pair<double, double> newcombe(std::int64_t kx, std::int64_t nx, std::int64_t ky, std::int64_t ny, double delta);

} // namespace oracle
