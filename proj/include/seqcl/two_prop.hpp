#pragma once

#include "seqcl/plans.hpp"
#include "seqcl/stream.hpp"
#include "seqcl/tuning.hpp"

#include <cstdint>
#include <algorithm>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seqcl {

// Score-root limits for p_x - p_y with c = Z^2, Z = Phi^-1(1 - delta/2).
double newcombe_lower(double px, double py, std::int64_t nx, std::int64_t ny, double delta);
double newcombe_upper(double px, double py, std::int64_t nx, std::int64_t ny, double delta);
std::pair<double, double> newcombe_limits(double px, double py, std::int64_t nx, std::int64_t ny, double delta);

// Roots of |phat - p| = Z sqrt(p (1 - p) / n) for phat = k / n.
std::pair<double, double> score_roots(std::int64_t k, std::int64_t n, double crit);

// Truncation of the sample-mean range: with probability at least 1 - eta the mean of
// n Bernoulli(theta) samples lies in [T_lb, T_ub]. eta = 0 gives [0, 1].
std::pair<double, double> truncation_bounds(double theta, std::int64_t n, double eta);
// The same as sums: [ceil-part, floor-part] clamped to [0, n].
std::pair<std::int64_t, std::int64_t> truncation_sums(double theta, std::int64_t n, double eta);

// N_y = ceil(scale * N_x) + offset.
struct LinkMap {
    double scale = 1.0;
    std::int64_t offset = 0;

    std::int64_t operator()(std::int64_t nx) const;
};

// m hypotheses on theta = p_x - p_y; zones and risks as in HypothesisDesign.
struct TwoPropDesign {
    std::vector<double> zone_lower;
    std::vector<double> zone_upper;
    std::vector<double> risks;
    double zeta = 0.5;
    LinkMap link;
    ScheduleKind schedule = ScheduleKind::geometric;
    int stages = 2;
    std::vector<std::int64_t> sizes_x;  // fixed schedules
    std::int64_t n_limit = 4000;

    int hypotheses() const { return static_cast<int>(risks.size()); }
    double alpha(int i) const;
    double beta(int i) const;
    double zeta_max() const;
    void validate() const;
};

inline constexpr std::int8_t kContinue = -1;

// Decision regions of one stage: label(kx, ky) is the accepted hypothesis or kContinue.
struct StageRegion {
    std::int64_t nx = 0;
    std::int64_t ny = 0;
    std::vector<std::int8_t> labels;  // row-major in kx

    int label(std::int64_t kx, std::int64_t ky) const
    {
        return labels[static_cast<std::size_t>(kx * (ny + 1) + ky)];
    }
    bool closed() const;
    bool can_stop() const;
};

struct TwoPropPlan {
    TwoPropDesign design;
    std::vector<StageRegion> stages;

    int stage_count() const { return static_cast<int>(stages.size()); }
    int hypotheses() const { return design.hypotheses(); }
};

// Labels from the inclusion rule. A cell admitting two adjacent hypotheses goes to
// the lower one iff p_x - p_y is at most the midpoint of the zone between them;
// otherwise the first admitted hypothesis wins.
StageRegion build_region(const TwoPropDesign& design, std::int64_t nx);

// Every bracketing set {theta'_i <= L(alpha_i) <= U(beta_i) <= theta''_i} nonempty.
bool brackets_nonempty(const TwoPropDesign& design, std::int64_t nx);

std::int64_t two_prop_first_size(const TwoPropDesign& design);
std::int64_t two_prop_last_size(const TwoPropDesign& design);
std::vector<std::int64_t> two_prop_schedule(const TwoPropDesign& design);

TwoPropPlan build_two_prop_plan(const TwoPropDesign& design);
TwoPropPlan two_prop_plan_from_sizes(const TwoPropDesign& design, const std::vector<std::int64_t>& sizes_x);

// Exact Pr{reject H_i | p} by forward recursion over (K_x, K_y).
double exact_reject_prob(const TwoPropPlan& plan, int hypothesis, double px, double py);
// Exact Pr{accept H_j | p} for all j.
std::vector<double> exact_accept_probs(const TwoPropPlan& plan, double px, double py);

struct Rectangle {
    double x_lo = 0.0;
    double x_hi = 1.0;
    double y_lo = 0.0;
    double y_hi = 1.0;

    double width() const { return std::max(x_hi - x_lo, y_hi - y_lo); }
};

struct ProbBounds {
    double lower = 0.0;
    double upper = 1.0;
};

// Bounds on Pr{reject H_i | p} valid for every p in the rectangle: the upper one
// adds 2 s eta to recursions over the truncation windows [T_lb(p_lo), T_ub(p_hi)],
// the lower one uses [T_lb(p_hi), T_ub(p_lo)]. Transition masses are bounded by
// their max / min over the rectangle.
ProbBounds rejection_prob_bounds(const TwoPropPlan& plan, int hypothesis, const Rectangle& rect, double eta);

enum class Verdict { proved, disproved, inconclusive };

std::string_view verdict_name(Verdict v);

struct CertifyOptions {
    double eta = 0.01;
    double eta_min = 1e-9;
    double tol = 1e-3;               // smallest rectangle side before giving up on it
    std::int64_t budget = 20000;     // rectangles evaluated
    bool keep_trace = true;
};

struct RectangleBound {
    Rectangle rect;
    ProbBounds bounds;
    double eta = 0.0;
};

struct RiskCertificate {
    Verdict verdict = Verdict::inconclusive;
    int hypothesis = 0;
    double requirement = 0.0;
    std::int64_t explored = 0;
    double max_upper = 0.0;   // largest upper bound among leaves not split further
    double best_lower = 0.0;  // largest valid lower bound found inside the zone
    Rectangle witness;        // rectangle behind the verdict
    std::vector<RectangleBound> trace;
};

// Is Pr{reject H_i | p} <= delta for every p in [0,1]^2 with p_x - p_y in the zone of H_i?
RiskCertificate certify_risk(const TwoPropPlan& plan, int hypothesis, double delta,
                             const CertifyOptions& options = {});

// Zone of H_i as an interval of p_x - p_y.
std::pair<double, double> two_prop_zone(const TwoPropDesign& design, int hypothesis);

TuneResult<std::vector<RiskCertificate>> tune_two_prop(const TwoPropDesign& design,
                                                      const std::vector<double>& requirement = {},
                                                      double tol = 1e-3, const CertifyOptions& options = {});

struct TwoPropOutcome {
    int stage = 0;
    std::int64_t samples_x = 0;
    std::int64_t samples_y = 0;
    int accepted = -1;
    double estimate_x = 0.0;
    double estimate_y = 0.0;
};

TwoPropOutcome run_two_prop(const TwoPropPlan& plan, SampleSource& xs, SampleSource& ys);

} // namespace seqcl
