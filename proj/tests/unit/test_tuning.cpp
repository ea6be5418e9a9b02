#include "seqcl/errors.hpp"
#include "seqcl/tuning.hpp"

#include <doctest.h>

using namespace seqcl;

namespace {

const auto B = DistributionModel::bernoulli();

ScheduleSpec five_geometric()
{
    ScheduleSpec sc;
    sc.kind = ScheduleKind::geometric;
    sc.stages = 5;
    return sc;
}

bool feasible_at(const HypothesisDesign& d, PlanKind kind, const ScheduleSpec& sc, double zeta)
{
    const auto plan = plan_at_zeta(d, kind, sc, zeta);
    return plan && verify_risk(*plan).satisfied;
}

} // namespace

TEST_CASE("a loose requirement tunes to the top of the range")
{
    const auto d = one_sided_design(B, LimitFamily::exact(), 0.4, 0.6, 0.05, 0.05, 0.5);
    const auto res = tune_zeta(d, PlanKind::one_sided, five_geometric(), {0.99, 0.99}, 1e-3);
    CHECK(res.zeta == doctest::Approx(d.zeta_max() * (1 - 1e-3)));
    CHECK(res.iterations == 1);
    CHECK(res.report.satisfied);
}

TEST_CASE("tuned zeta against a dense grid")
{
    const auto d = one_sided_design(B, LimitFamily::exact(), 0.4, 0.6, 0.05, 0.05, 0.5);
    const double tol = 1e-3;
    const auto res = tune_zeta(d, PlanKind::one_sided, five_geometric(), {}, tol);
    const auto plan = plan_at_zeta(d, PlanKind::one_sided, five_geometric(), res.zeta);
    REQUIRE(plan);
    CHECK(verify_risk(*plan).satisfied);
    CHECK(res.report.satisfied);
    CHECK(res.hi > res.lo);
    CHECK((res.hi - res.lo) <= tol * res.hi);
    CHECK_FALSE(feasible_at(d, PlanKind::one_sided, five_geometric(), res.hi));

    // grid oracle: the frontier between the last feasible and first infeasible grid
    // point must bracket the tuned value within one grid step
    const double step = 0.005;
    double last_feasible = 0.0;
    double first_infeasible = 0.0;
    for (double z = step; z < d.zeta_max(); z += step) {
        if (feasible_at(d, PlanKind::one_sided, five_geometric(), z)) {
            last_feasible = z;
        } else if (first_infeasible == 0.0) {
            first_infeasible = z;
            // feasibility at z/2 below the frontier
            CHECK(feasible_at(d, PlanKind::one_sided, five_geometric(), last_feasible / 2));
        }
        if (first_infeasible > 0.0 && z > first_infeasible + 0.05)
            break;
    }
    CHECK(res.zeta >= first_infeasible - step - tol);
    CHECK(res.zeta <= first_infeasible);
}

TEST_CASE("infeasible skeletons")
{
    auto d = one_sided_design(B, LimitFamily::exact(), 0.4, 0.6, 0.05, 0.05, 0.5);
    ScheduleSpec sc;
    sc.kind = ScheduleKind::fixed;
    sc.sizes = {2, 4};
    CHECK_THROWS_AS(tune_zeta(d, PlanKind::one_sided, sc), InfeasibleError);
}

TEST_CASE("bisection bookkeeping")
{
    // feasible iff zeta <= 0.3
    const std::function<std::optional<Probe<int>>(double)> probe = [](double z) -> std::optional<Probe<int>> {
        return Probe<int>{z <= 0.3, z, 1};
    };
    const auto r = bisect_zeta<int>(1.0, 1e-4, probe);
    CHECK(r.zeta <= 0.3);
    CHECK(r.zeta >= 0.3 * (1 - 2e-4));
    CHECK(r.warnings.empty());
    CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations));

    // risk falling while zeta grows is reported
    const std::function<std::optional<Probe<int>>(double)> falling = [](double z) -> std::optional<Probe<int>> {
        return Probe<int>{z <= 0.3, 1.0 - z, 0};
    };
    const auto w = bisect_zeta<int>(1.0, 1e-3, falling);
    CHECK_FALSE(w.warnings.empty());
    CHECK(w.zeta <= 0.3);

    const std::function<std::optional<Probe<int>>(double)> never = [](double) -> std::optional<Probe<int>> {
        return std::nullopt;
    };
    CHECK_THROWS_AS(bisect_zeta<int>(1.0, 1e-3, never), InfeasibleError);
}
