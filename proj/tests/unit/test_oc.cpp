#include "oracles.hpp"

#include "seqcl/oc.hpp"
#include "seqcl/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace seqcl;

namespace {

const auto B = DistributionModel::bernoulli();
const auto P = DistributionModel::poisson();

MultiHypPlan fixed_plan(const HypothesisDesign& d, PlanKind kind, std::vector<std::int64_t> sizes)
{
    ScheduleSpec sc;
    sc.kind = ScheduleKind::fixed;
    sc.sizes = sizes;
    return build_thresholds(d, kind, sc, sizes);
}

} // namespace

TEST_CASE("single stage OC is a binomial tail")
{
    const auto d = one_sided_design(B, LimitFamily::exact(), 0.3, 0.6, 0.1, 0.1, 0.9);
    const auto plan = fixed_plan(d, PlanKind::one_sided, {19});
    REQUIRE(plan_closed(plan));
    const auto& st = plan.stages[0];
    for (double th : {0.2, 0.45, 0.7}) {
        double tail = 0.0;
        for (std::int64_t k = 0; k <= 19; ++k)
            if (st.decision(k) == 1)
                tail += oracle::binom_pmf(19, k, th);
        CHECK(oc_point(plan, th).accept[0] == doctest::Approx(tail).epsilon(1e-13));
    }
}

TEST_CASE("two-stage plan against path enumeration")
{
    const auto d = one_sided_design(B, LimitFamily::exact(), 0.35, 0.65, 0.1, 0.1, 0.8);
    const auto plan = fixed_plan(d, PlanKind::one_sided, {10, 30});
    for (double th : {0.3, 0.5, 0.62}) {
        const auto pt = oc_point(plan, th);
        const auto ref = oracle::enumerate_oc(plan, th);
        CHECK(pt.accept[0] + pt.undecided + pt.accept[1] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::fabs(pt.accept[0] - ref[0]) <= 1e-10);
        CHECK(std::fabs(pt.accept[1] - ref[1]) <= 1e-10);
        CHECK(pt.asn >= 10.0);
        CHECK(pt.asn <= 30.0);
    }
}

TEST_CASE("OC agrees with simulation")
{
    const auto d = one_sided_design(B, LimitFamily::exact(), 0.4, 0.6, 0.05, 0.05, 0.5);
    ScheduleSpec sc;
    sc.stages = 4;
    const auto plan = build_plan(d, PlanKind::one_sided, sc);
    const auto runner = plan_runner(plan);
    for (double th : {0.45, 0.55}) {
        const auto exact = oc_point(plan, th);
        const auto sim = simulate(runner, th, 200000, 99);
        const double se = std::sqrt(exact.accept[0] * (1 - exact.accept[0]) / 200000.0);
        CHECK(std::fabs(sim.accept_freq[0] - exact.accept[0]) <= 4.0 * se);
        CHECK(std::fabs(sim.asn - exact.asn) <= 4.0 * sim.asn_se);
    }
}

TEST_CASE("Poisson truncation is accounted for")
{
    const auto d = one_sided_design(P, LimitFamily::exact(), 1.0, 1.5, 0.05, 0.05, 0.5);
    ScheduleSpec sc;
    sc.stages = 3;
    const auto plan = build_plan(d, PlanKind::one_sided, sc);
    for (double th : {0.8, 1.2, 2.0}) {
        const auto pt = oc_point(plan, th);
        const double total = pt.accept[0] + pt.accept[1] + pt.undecided;
        CHECK(total <= 1.0 + 1e-12);
        CHECK(total >= 1.0 - pt.truncation - 1e-12);
        CHECK(pt.truncation <= 1e-10);
    }
}

TEST_CASE("risk verification and caps")
{
    const auto d = one_sided_design(B, LimitFamily::exact(), 0.4, 0.6, 0.05, 0.05, 0.4);
    ScheduleSpec sc;
    sc.stages = 3;
    const auto plan = build_plan(d, PlanKind::one_sided, sc);
    const auto rep = verify_risk(plan);
    REQUIRE(rep.checks.size() == 2);
    CHECK(rep.checks[0].risk <= 3 * 0.02 + 0.0);
    CHECK(rep.checks[1].risk <= 3 * 0.02 + 0.0);
    CHECK(rep.cap_zeta_alpha == doctest::Approx(0.06));
    CHECK(rep.checks[0].risk == doctest::Approx(oc_point(plan, 0.4).accept[1]).epsilon(1e-14));
    CHECK(oc_point(plan, 0.35).accept[0] >= oc_point(plan, 0.4).accept[0]);

    auto tiny = d;
    tiny.zeta = 0.02;
    const auto safe = verify_risk(build_plan(tiny, PlanKind::one_sided, sc));
    CHECK(safe.satisfied);
    CHECK(safe.worst_ratio() < 0.5);
}

TEST_CASE("three-hypothesis plan properties")
{
    HypothesisDesign d;
    d.model = B;
    d.family = LimitFamily::exact();
    d.zone_lower = {0.2, 0.5};
    d.zone_upper = {0.35, 0.65};
    d.risks = {0.1, 0.1, 0.1};
    d.zeta = 0.5;
    ScheduleSpec sc;
    sc.stages = 3;
    const auto plan = build_plan(d, PlanKind::multi, sc);
    const double s = plan.stage_count();
    const double amax = d.alpha(1);
    const double bmax = d.beta(2);
    const auto rep = verify_risk(plan);
    for (const auto& c : rep.checks)
        CHECK(c.risk <= s * (amax + bmax) + 1e-15);

    // rejecting H_0 on its zone and H_2 on its zone: monotone and capped
    double prev = -1.0;
    for (double th = 0.01; th <= 0.2 + 1e-9; th += 0.01) {
        const auto pt = oc_point(plan, th);
        const double rej = 1.0 - pt.accept[0];
        CHECK(rej >= prev - 1e-14);
        CHECK(rej <= s * amax + 1e-15);
        prev = rej;
    }
    prev = 2.0;
    for (double th = 0.65; th <= 0.99 + 1e-9; th += 0.01) {
        const double rej = 1.0 - oc_point(plan, th).accept[2];
        CHECK(rej <= prev + 1e-14);
        CHECK(rej <= s * bmax + 1e-15);
        prev = rej;
    }
    // middle zone sandwich holds at interior points
    const double a = 0.35;
    const double b = 0.5;
    const double bound = rep.checks[1].risk;
    for (double th = a; th <= b + 1e-9; th += 0.025)
        CHECK(1.0 - oc_point(plan, th).accept[1] <= bound + 1e-14);
}

TEST_CASE("parallel and serial OC match exactly")
{
    const auto d = one_sided_design(B, LimitFamily::chernoff(), 0.3, 0.5, 0.05, 0.05, 0.5);
    ScheduleSpec sc;
    const auto plan = build_plan(d, PlanKind::one_sided, sc);
    const auto grid = make_grid(0.2, 0.6, 0.01);
    const auto a = oc_curve(plan, grid);
    const auto b = oc_curve_serial(plan, grid);
    std::ostringstream x;
    std::ostringstream y;
    write_oc_csv(x, a);
    write_oc_csv(y, b);
    CHECK(x.str() == y.str());
    CHECK(x.str().rfind("theta,accept_prob_0,accept_prob_1,asn,stage_prob_1", 0) == 0);
}

TEST_CASE("grids")
{
    const auto g = parse_grid("0.3:0.7:0.1");
    REQUIRE(g.size() == 5);
    CHECK(g[4] == 0.7);
    CHECK(parse_grid("0.1,0.2").size() == 2);
}
