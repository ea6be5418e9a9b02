#pragma once

#include "seqcl/limits.hpp"
#include "seqcl/models.hpp"
#include "seqcl/stream.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace seqcl {

// How a stage resolves a point that satisfies the inclusion rule for two
// adjacent hypotheses (the sets C_i below).
//  likelihood_ratio - accept the lower one iff f(x; theta'_i) / f(x; theta''_i) >= alpha_i / beta_i
//  midpoint         - accept the lower one iff z <= (min C + max C) / 2
//  zone_midpoint    - accept the lower one iff z <= (theta'_i + theta''_i) / 2
//  accept_lower / accept_upper - always the lower / upper one
enum class TiePolicy { likelihood_ratio, midpoint, zone_midpoint, accept_lower, accept_upper };

std::string_view tie_policy_name(TiePolicy policy);
TiePolicy tie_policy_from_name(std::string_view name);

enum class PlanKind { one_sided, multi };

std::string_view plan_kind_name(PlanKind kind);

// Zones and risks for m hypotheses H_0 .. H_{m-1} ordered by theta.
//
// zone_lower[i-1] = theta'_i and zone_upper[i-1] = theta''_i for i = 1 .. m-1,
// risks[i] = delta_i. The coefficients fed to the limits are
// alpha_i = zeta * delta_{i-1} and beta_i = zeta * delta_i, so that a one-sided
// design (m = 2, theta0 = theta'_1, theta1 = theta''_1) uses zeta*alpha and zeta*beta.
struct HypothesisDesign {
    DistributionModel model;
    LimitFamily family;
    std::vector<double> zone_lower;
    std::vector<double> zone_upper;
    std::vector<double> risks;
    double zeta = 1.0;
    TiePolicy tie = TiePolicy::midpoint;

    int hypotheses() const { return static_cast<int>(risks.size()); }
    // alpha_i, beta_i for i = 0 .. m with alpha_0 = alpha_1, alpha_m = 0,
    // beta_0 = 0, beta_m = beta_{m-1}.
    double alpha(int i) const;
    double beta(int i) const;
    // Supremum of admissible zeta: every alpha_i, beta_i and alpha_i + beta_i stays below 1.
    double zeta_max() const;
    void validate() const;
};

HypothesisDesign one_sided_design(DistributionModel model, LimitFamily family, double theta0, double theta1,
                                  double alpha, double beta, double zeta,
                                  TiePolicy tie = TiePolicy::likelihood_ratio);

// Sentinels for the integer sum thresholds.
inline constexpr std::int64_t kSumNegInf = std::numeric_limits<std::int64_t>::min();
inline constexpr std::int64_t kSumPosInf = std::numeric_limits<std::int64_t>::max();

// Thresholds of one stage, kept as integer sums. D = i iff g_sum[i-1] < k <= f_sum[i]
// (first match in i = 1 .. m), else 0. Vectors have m + 1 entries; f_sum[0] and
// g_sum[m] are unused, g_sum[0] = -inf and f_sum[m] = +inf.
//
// a_sum[i] = min A_i (kSumPosInf when empty) and b_sum[i] = max B_i (kSumNegInf
// when empty) for i = 1 .. m-1, where
//   A_i = {k : L(k/n, n, alpha_i) >= theta'_i},  B_i = {k : U(k/n, n, beta_i) <= theta''_i}.
struct StageRule {
    std::int64_t n = 0;
    std::vector<std::int64_t> f_sum;
    std::vector<std::int64_t> g_sum;
    std::vector<std::int64_t> a_sum;
    std::vector<std::int64_t> b_sum;

    int hypotheses() const { return static_cast<int>(f_sum.size()) - 1; }
    int decision(std::int64_t k) const;
    // f_{l,i} and g_{l,i} on the mean scale.
    double f(int i) const;
    double g(int i) const;
    // C_i nonempty (a point may satisfy the rule for both H_{i-1} and H_i).
    bool overlap(int i) const { return a_sum[i] <= b_sum[i]; }
    bool in_overlap(std::int64_t k) const;
};

// Closed: every support point of the n-sample sum gets a decision. Can stop:
// at least one support point does.
bool stage_closed(const DistributionModel& model, const StageRule& rule);
bool stage_can_stop(const DistributionModel& model, const StageRule& rule);

StageRule build_stage(const HypothesisDesign& design, std::int64_t n);

enum class ScheduleKind { fixed, arithmetic, geometric, fully_sequential };

std::string_view schedule_kind_name(ScheduleKind kind);
ScheduleKind schedule_kind_from_name(std::string_view name);

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::geometric;
    int stages = 5;
    std::vector<std::int64_t> sizes;  // used when kind == fixed
    std::int64_t n_limit = 200000;    // search limit for n_1 / n_s
};

struct MultiHypPlan {
    PlanKind kind = PlanKind::multi;
    HypothesisDesign design;
    ScheduleSpec schedule;
    std::vector<StageRule> stages;

    int hypotheses() const { return design.hypotheses(); }
    int stage_count() const { return static_cast<int>(stages.size()); }
    std::int64_t n_max() const { return stages.empty() ? 0 : stages.back().n; }
    std::vector<std::int64_t> sample_sizes() const;
};

using OneSidedPlan = MultiHypPlan;

// Smallest n where some support point stops, and the smallest n_s admissible for
// the last stage (closed; for m > 2 every C_i nonempty as well).
std::int64_t first_stopping_size(const HypothesisDesign& design, std::int64_t n_limit);
std::int64_t closing_size(const HypothesisDesign& design, PlanKind kind, std::int64_t n_limit);

std::vector<std::int64_t> stage_schedule(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule);

// Thresholds for given stage sizes (no closedness requirement).
MultiHypPlan build_thresholds(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule,
                              const std::vector<std::int64_t>& sizes);
MultiHypPlan build_plan(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule);

bool plan_closed(const MultiHypPlan& plan);

// D_l for a stage index (0-based) and a sum or a mean on the support grid.
int decision_variable(const MultiHypPlan& plan, int stage, std::int64_t k);
int decision_variable(const MultiHypPlan& plan, int stage, double mean);

// The value B with the guarantee that the one-sided continuation event is empty
// for every n >= B:
//   max{ ln(zeta alpha) / ln C(mid, theta0), ln(zeta beta) / ln C(mid, theta1) }, mid = (theta0 + theta1) / 2.
double sample_bound_value(const DistributionModel& model, double theta0, double theta1, double zeta_alpha,
                          double zeta_beta);
// Integer cap: the smallest integer >= B.
std::int64_t sample_bound(const DistributionModel& model, double theta0, double theta1, double zeta_alpha,
                          double zeta_beta);

struct TestOutcome {
    int stage = 0;                 // 1-based stage index at termination
    std::int64_t samples = 0;      // n at termination
    int accepted = -1;             // index of the accepted hypothesis, -1 if the plan never stopped
    double estimate = 0.0;         // sample mean at termination
    bool tie = false;              // terminal point satisfied the rule for two hypotheses
    bool forced = false;           // decision imposed by a sample cap
};

// Runs a plan through its thresholds. Throws InputError when the stream ends early
// or yields a value outside the model support.
TestOutcome run_plan(const MultiHypPlan& plan, SampleSource& source);

// One-sided execution straight from the crossing tests (no thresholds). Must agree
// with run_plan on every stream.
TestOutcome run_one_sided(const MultiHypPlan& plan, SampleSource& source);

// 0 continue, 1 accept H_0, 2 reject H_0, from the crossing tests at (n, k).
int one_sided_decision(const HypothesisDesign& design, std::int64_t n, std::int64_t k);

void check_observation(const DistributionModel& model, std::int64_t x);

} // namespace seqcl
