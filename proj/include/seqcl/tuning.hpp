#pragma once

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"
#include "seqcl/oc.hpp"
#include "seqcl/plans.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seqcl {

inline constexpr double kZetaFloor = 1e-8;

struct TuneStep {
    double zeta = 0.0;
    bool feasible = false;
    double score = 0.0;  // worst risk / requirement (NaN when unavailable)
};

template <class Report>
struct TuneResult {
    double zeta = 0.0;
    int iterations = 0;
    double lo = 0.0;  // feasible end
    double hi = 0.0;  // infeasible end, or the admissible supremum
    Report report{};
    std::vector<TuneStep> trace;
    std::vector<std::string> warnings;
};

// One feasibility probe: nullopt when no plan exists at this zeta, otherwise the
// verdict, a score for the monotonicity diagnostics, and the report.
template <class Report>
struct Probe {
    bool feasible = false;
    double score = 0.0;
    Report report{};
};

// Largest feasible zeta in (0, zeta_max), up to relative width tol.
//
// The first probe is zeta_max (1 - tol); on failure zeta is halved until a
// feasible value appears (down to kZetaFloor), then the bracket is bisected.
// Every returned value has been verified; suspected non-monotone behaviour is
// reported in warnings.
template <class Report>
TuneResult<Report> bisect_zeta(double zeta_max, double tol,
                               const std::function<std::optional<Probe<Report>>(double)>& probe)
{
    if (!(tol > 0.0 && tol < 1.0))
        throw DomainError("tuning tolerance must lie in (0, 1)");
    if (!(zeta_max > 0.0))
        throw DomainError("tuning needs a positive zeta_max");
    TuneResult<Report> res;
    auto eval = [&](double z) {
        ++res.iterations;
        auto p = probe(z);
        TuneStep step{z, p && p->feasible, p ? p->score : std::nan("")};
        res.trace.push_back(step);
        return p;
    };

    double hi = zeta_max;
    double lo = zeta_max * (1.0 - tol);
    std::optional<Probe<Report>> best;
    for (;;) {
        auto p = eval(lo);
        if (p && p->feasible) {
            best = std::move(p);
            break;
        }
        hi = lo;
        lo *= 0.5;
        if (lo < kZetaFloor)
            throw InfeasibleError("no feasible zeta down to " + format_double(kZetaFloor));
    }
    while ((hi - lo) > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        auto p = eval(mid);
        if (p && p->feasible) {
            lo = mid;
            best = std::move(p);
        } else {
            hi = mid;
        }
    }
    res.zeta = lo;
    res.lo = lo;
    res.hi = hi;
    res.report = std::move(best->report);

    // diagnostics: feasibility above an infeasible probe, and scores that fall as zeta grows
    auto sorted = res.trace;
    std::sort(sorted.begin(), sorted.end(), [](const TuneStep& a, const TuneStep& b) { return a.zeta < b.zeta; });
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        for (std::size_t j = i + 1; j < sorted.size(); ++j) {
            if (!sorted[i].feasible && sorted[j].feasible) {
                res.warnings.push_back("zeta " + format_double(sorted[i].zeta) + " infeasible but "
                                       + format_double(sorted[j].zeta) + " feasible");
                break;
            }
        }
        const double a = sorted[i].score;
        const double b = sorted[i + 1].score;
        if (!std::isnan(a) && !std::isnan(b) && b < a)
            res.warnings.push_back("risk score decreased from " + format_double(a) + " to " + format_double(b)
                                   + " as zeta grew to " + format_double(sorted[i + 1].zeta));
    }
    return res;
}

// Fixed design apart from zeta; the stage schedule is rebuilt for every candidate
// (or kept when the schedule is fixed).
TuneResult<RiskReport> tune_zeta(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule,
                                 const std::vector<double>& requirement = {}, double tol = 1e-3);

// Plan built at a given zeta, or nullopt when no closed plan exists.
std::optional<MultiHypPlan> plan_at_zeta(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule,
                                         double zeta);

} // namespace seqcl
