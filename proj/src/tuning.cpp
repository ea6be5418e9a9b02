#include "seqcl/tuning.hpp"

namespace seqcl {

std::optional<MultiHypPlan> plan_at_zeta(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule,
                                         double zeta)
{
    HypothesisDesign d = design;
    d.zeta = zeta;
    try {
        MultiHypPlan plan = schedule.kind == ScheduleKind::fixed ? build_thresholds(d, kind, schedule, schedule.sizes)
                                                                 : build_plan(d, kind, schedule);
        if (!plan_closed(plan))
            return std::nullopt;
        return plan;
    } catch (const InfeasibleError&) {
        return std::nullopt;
    }
}

TuneResult<RiskReport> tune_zeta(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule,
                                 const std::vector<double>& requirement, double tol)
{
    design.validate();
    const std::function<std::optional<Probe<RiskReport>>(double)> probe =
        [&](double zeta) -> std::optional<Probe<RiskReport>> {
        auto plan = plan_at_zeta(design, kind, schedule, zeta);
        if (!plan)
            return std::nullopt;
        Probe<RiskReport> p;
        p.report = verify_risk(*plan, requirement);
        p.feasible = p.report.satisfied;
        p.score = p.report.worst_ratio();
        return p;
    };
    return bisect_zeta<RiskReport>(design.zeta_max(), tol, probe);
}

} // namespace seqcl
