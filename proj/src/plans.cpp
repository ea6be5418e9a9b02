#include "seqcl/plans.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seqcl {

namespace {

// Smallest k in [lo, hi] with pred(k), assuming pred is monotone false -> true;
// hi + 1 when none.
template <class Pred>
std::int64_t first_true(std::int64_t lo, std::int64_t hi, Pred&& pred)
{
    std::int64_t end = hi + 1;
    while (lo < end) {
        const std::int64_t mid = lo + (end - lo) / 2;
        if (pred(mid))
            end = mid;
        else
            lo = mid + 1;
    }
    return end;
}

double zone_lo(const HypothesisDesign& d, int i)
{
    return d.zone_lower[static_cast<std::size_t>(i - 1)];
}

double zone_hi(const HypothesisDesign& d, int i)
{
    return d.zone_upper[static_cast<std::size_t>(i - 1)];
}

bool lower_ok(const HypothesisDesign& d, int i, std::int64_t n, std::int64_t k)
{
    return lower_crossed(d.family, d.model, {n, k}, zone_lo(d, i), d.alpha(i));
}

bool upper_ok(const HypothesisDesign& d, int i, std::int64_t n, std::int64_t k)
{
    return upper_crossed(d.family, d.model, {n, k}, zone_hi(d, i), d.beta(i));
}

// min A_i, kSumPosInf if empty.
std::int64_t min_accept_above(const HypothesisDesign& d, int i, std::int64_t n)
{
    auto pred = [&](std::int64_t k) { return lower_ok(d, i, n, k); };
    if (d.model.bounded_support()) {
        const std::int64_t k = first_true(0, n, pred);
        return k > n ? kSumPosInf : k;
    }
    std::int64_t hi = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(n) * zone_lo(d, i))));
    while (!pred(hi)) {
        if (hi > (std::int64_t{1} << 52))
            return kSumPosInf;
        hi *= 2;
    }
    return first_true(0, hi, pred);
}

// max B_i, kSumNegInf if empty.
std::int64_t max_accept_below(const HypothesisDesign& d, int i, std::int64_t n)
{
    auto fails = [&](std::int64_t k) { return !upper_ok(d, i, n, k); };
    if (d.model.bounded_support()) {
        const std::int64_t k = first_true(0, n, fails);
        return k == 0 ? kSumNegInf : k - 1;
    }
    std::int64_t hi = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(n) * zone_hi(d, i))));
    while (!fails(hi)) {
        if (hi > (std::int64_t{1} << 52))
            throw DomainError("upper acceptance set is unbounded");
        hi *= 2;
    }
    const std::int64_t k = first_true(0, hi, fails);
    return k == 0 ? kSumNegInf : k - 1;
}

bool lr_accepts_lower(const HypothesisDesign& d, int i, std::int64_t n, std::int64_t k)
{
    const double llr = log_likelihood_ratio(d.model, n, k, zone_lo(d, i), zone_hi(d, i));
    return llr >= std::log(d.alpha(i)) - std::log(d.beta(i));
}

bool zone_mid_accepts_lower(const HypothesisDesign& d, int i, std::int64_t n, std::int64_t k)
{
    const double mid = 0.5 * (zone_lo(d, i) + zone_hi(d, i));
    return static_cast<double>(k) / static_cast<double>(n) <= mid;
}

// Largest k in [a - 1, b] that the tie policy sends to H_{i-1}; requires a <= b.
std::int64_t tie_cut(const HypothesisDesign& d, int i, std::int64_t n, std::int64_t a, std::int64_t b)
{
    switch (d.tie) {
    case TiePolicy::accept_lower:
        return b;
    case TiePolicy::accept_upper:
        return a - 1;
    case TiePolicy::midpoint:
        return a + (b - a) / 2;
    case TiePolicy::likelihood_ratio:
        return first_true(a, b, [&](std::int64_t k) { return !lr_accepts_lower(d, i, n, k); }) - 1;
    case TiePolicy::zone_midpoint:
        return first_true(a, b, [&](std::int64_t k) { return !zone_mid_accepts_lower(d, i, n, k); }) - 1;
    }
    return b;
}

void check_positive_size(std::int64_t n)
{
    if (n < 1)
        throw DomainError("stage sizes must be positive, got " + std::to_string(n));
}

} // namespace

std::string_view tie_policy_name(TiePolicy policy)
{
    switch (policy) {
    case TiePolicy::likelihood_ratio:
        return "likelihood-ratio";
    case TiePolicy::midpoint:
        return "midpoint";
    case TiePolicy::zone_midpoint:
        return "zone-midpoint";
    case TiePolicy::accept_lower:
        return "accept-lower";
    case TiePolicy::accept_upper:
        return "accept-upper";
    }
    return "midpoint";
}

TiePolicy tie_policy_from_name(std::string_view name)
{
    if (name == "likelihood-ratio")
        return TiePolicy::likelihood_ratio;
    if (name == "midpoint")
        return TiePolicy::midpoint;
    if (name == "zone-midpoint")
        return TiePolicy::zone_midpoint;
    if (name == "accept-lower" || name == "always-accept")
        return TiePolicy::accept_lower;
    if (name == "accept-upper" || name == "always-reject")
        return TiePolicy::accept_upper;
    throw DomainError("unknown tie policy '" + std::string(name) + "'");
}

std::string_view plan_kind_name(PlanKind kind)
{
    return kind == PlanKind::one_sided ? "one-sided" : "multi";
}

std::string_view schedule_kind_name(ScheduleKind kind)
{
    switch (kind) {
    case ScheduleKind::fixed:
        return "fixed";
    case ScheduleKind::arithmetic:
        return "arithmetic";
    case ScheduleKind::geometric:
        return "geometric";
    case ScheduleKind::fully_sequential:
        return "fully-sequential";
    }
    return "fixed";
}

ScheduleKind schedule_kind_from_name(std::string_view name)
{
    if (name == "fixed")
        return ScheduleKind::fixed;
    if (name == "arithmetic")
        return ScheduleKind::arithmetic;
    if (name == "geometric")
        return ScheduleKind::geometric;
    if (name == "fully-sequential")
        return ScheduleKind::fully_sequential;
    throw DomainError("unknown schedule '" + std::string(name) + "'");
}

double HypothesisDesign::alpha(int i) const
{
    const int m = hypotheses();
    if (i < 0 || i > m)
        throw DomainError("risk coefficient index out of range");
    if (i == m)
        return 0.0;
    if (i == 0)
        i = 1;
    return zeta * risks[static_cast<std::size_t>(i - 1)];
}

double HypothesisDesign::beta(int i) const
{
    const int m = hypotheses();
    if (i < 0 || i > m)
        throw DomainError("risk coefficient index out of range");
    if (i == 0)
        return 0.0;
    if (i == m)
        i = m - 1;
    return zeta * risks[static_cast<std::size_t>(i)];
}

double HypothesisDesign::zeta_max() const
{
    double best = kInf;
    for (int i = 1; i < hypotheses(); ++i)
        best = std::min(best, 1.0 / (risks[static_cast<std::size_t>(i - 1)] + risks[static_cast<std::size_t>(i)]));
    return best;
}

void HypothesisDesign::validate() const
{
    const int m = hypotheses();
    if (m < 2)
        throw DomainError("a design needs at least two hypotheses");
    if (zone_lower.size() != static_cast<std::size_t>(m - 1) || zone_upper.size() != static_cast<std::size_t>(m - 1))
        throw DomainError("expected " + std::to_string(m - 1) + " indifference zones");
    for (double r : risks)
        if (!(r > 0.0 && r < 1.0))
            throw DomainError("risk " + format_double(r) + " outside (0, 1)");
    for (int i = 1; i < m; ++i) {
        const double lo = zone_lo(*this, i);
        const double hi = zone_hi(*this, i);
        if (!model.in_parameter_space(lo) || !model.in_parameter_space(hi))
            throw DomainError("zone endpoint outside the " + std::string(model.name()) + " parameter space");
        if (!(lo < hi))
            throw DomainError("zone " + std::to_string(i) + " needs theta' < theta''");
        if (i > 1 && !(zone_hi(*this, i - 1) <= lo))
            throw DomainError("zones " + std::to_string(i - 1) + " and " + std::to_string(i) + " overlap");
    }
    if (!(zeta > 0.0 && zeta < zeta_max()))
        throw DomainError("zeta = " + format_double(zeta) + " outside (0, " + format_double(zeta_max()) + ")");
}

HypothesisDesign one_sided_design(DistributionModel model, LimitFamily family, double theta0, double theta1,
                                  double alpha, double beta, double zeta, TiePolicy tie)
{
    HypothesisDesign d;
    d.model = model;
    d.family = family;
    d.zone_lower = {theta0};
    d.zone_upper = {theta1};
    d.risks = {alpha, beta};
    d.zeta = zeta;
    d.tie = tie;
    d.validate();
    return d;
}

int StageRule::decision(std::int64_t k) const
{
    const int m = hypotheses();
    for (int i = 1; i <= m; ++i)
        if (g_sum[static_cast<std::size_t>(i - 1)] < k && k <= f_sum[static_cast<std::size_t>(i)])
            return i;
    return 0;
}

namespace {

double sum_to_mean(std::int64_t k, std::int64_t n)
{
    if (k == kSumNegInf)
        return -kInf;
    if (k == kSumPosInf)
        return kInf;
    return static_cast<double>(k) / static_cast<double>(n);
}

} // namespace

double StageRule::f(int i) const
{
    return sum_to_mean(f_sum[static_cast<std::size_t>(i)], n);
}

double StageRule::g(int i) const
{
    return sum_to_mean(g_sum[static_cast<std::size_t>(i)], n);
}

bool StageRule::in_overlap(std::int64_t k) const
{
    for (int i = 1; i < hypotheses(); ++i)
        if (a_sum[static_cast<std::size_t>(i)] <= k && k <= b_sum[static_cast<std::size_t>(i)])
            return true;
    return false;
}

namespace {

struct Window {
    std::int64_t lo;
    std::int64_t hi;  // kSumPosInf = unbounded
};

std::vector<Window> decision_windows(const DistributionModel& model, const StageRule& rule)
{
    const std::int64_t top = model.bounded_support() ? rule.n : kSumPosInf;
    std::vector<Window> out;
    for (int i = 1; i <= rule.hypotheses(); ++i) {
        const std::int64_t g = rule.g_sum[static_cast<std::size_t>(i - 1)];
        const std::int64_t f = rule.f_sum[static_cast<std::size_t>(i)];
        if (g == kSumPosInf || f == kSumNegInf)
            continue;
        const std::int64_t lo = g == kSumNegInf ? 0 : std::max<std::int64_t>(0, g + 1);
        const std::int64_t hi = std::min(f, top);
        if (lo <= hi)
            out.push_back({lo, hi});
    }
    return out;
}

} // namespace

bool stage_closed(const DistributionModel& model, const StageRule& rule)
{
    auto windows = decision_windows(model, rule);
    std::sort(windows.begin(), windows.end(), [](const Window& x, const Window& y) { return x.lo < y.lo; });
    const std::int64_t top = model.bounded_support() ? rule.n : kSumPosInf;
    std::int64_t next = 0;
    for (const auto& w : windows) {
        if (w.lo > next)
            return false;
        if (w.hi == kSumPosInf)
            return true;
        next = std::max(next, w.hi + 1);
        if (top != kSumPosInf && next > top)
            return true;
    }
    return false;
}

bool stage_can_stop(const DistributionModel& model, const StageRule& rule)
{
    return !decision_windows(model, rule).empty();
}

StageRule build_stage(const HypothesisDesign& design, std::int64_t n)
{
    check_positive_size(n);
    const int m = design.hypotheses();
    StageRule rule;
    rule.n = n;
    const auto size = static_cast<std::size_t>(m + 1);
    rule.f_sum.assign(size, kSumPosInf);
    rule.g_sum.assign(size, kSumPosInf);
    rule.a_sum.assign(size, kSumPosInf);
    rule.b_sum.assign(size, kSumNegInf);
    rule.g_sum[0] = kSumNegInf;
    rule.f_sum[0] = kSumNegInf;
    for (int i = 1; i < m; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const std::int64_t a = min_accept_above(design, i, n);
        const std::int64_t b = max_accept_below(design, i, n);
        rule.a_sum[idx] = a;
        rule.b_sum[idx] = b;
        if (a <= b) {
            const std::int64_t cut = tie_cut(design, i, n, a, b);
            rule.f_sum[idx] = cut;
            rule.g_sum[idx] = cut;
        } else {
            rule.f_sum[idx] = b;
            rule.g_sum[idx] = a == kSumPosInf ? kSumPosInf : a - 1;
        }
    }
    return rule;
}

std::vector<std::int64_t> MultiHypPlan::sample_sizes() const
{
    std::vector<std::int64_t> out;
    out.reserve(stages.size());
    for (const auto& st : stages)
        out.push_back(st.n);
    return out;
}

std::int64_t first_stopping_size(const HypothesisDesign& design, std::int64_t n_limit)
{
    design.validate();
    for (std::int64_t n = 1; n <= n_limit; ++n)
        if (stage_can_stop(design.model, build_stage(design, n)))
            return n;
    throw InfeasibleError("no sample size up to " + std::to_string(n_limit) + " allows a decision");
}

std::int64_t closing_size(const HypothesisDesign& design, PlanKind kind, std::int64_t n_limit)
{
    design.validate();
    const int m = design.hypotheses();
    const bool need_overlap = kind == PlanKind::multi && m > 2;
    for (std::int64_t n = 1; n <= n_limit; ++n) {
        const StageRule rule = build_stage(design, n);
        bool ok = true;
        if (need_overlap)
            for (int i = 1; i < m && ok; ++i)
                ok = rule.overlap(i);
        if (need_overlap && ok) {
            // every C_i nonempty from here on; bump until the stage also covers the support
            for (std::int64_t nn = n; nn <= n_limit; ++nn)
                if (stage_closed(design.model, nn == n ? rule : build_stage(design, nn)))
                    return nn;
            break;
        }
        if (!need_overlap && stage_closed(design.model, rule))
            return n;
    }
    throw InfeasibleError("no closed last stage up to n = " + std::to_string(n_limit));
}

std::vector<std::int64_t> stage_schedule(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule)
{
    if (schedule.kind == ScheduleKind::fixed) {
        if (schedule.sizes.empty())
            throw DomainError("fixed schedule without stage sizes");
        for (std::size_t i = 0; i < schedule.sizes.size(); ++i) {
            check_positive_size(schedule.sizes[i]);
            if (i > 0 && schedule.sizes[i] <= schedule.sizes[i - 1])
                throw DomainError("stage sizes must be strictly increasing");
        }
        return schedule.sizes;
    }
    std::int64_t ns = closing_size(design, kind, schedule.n_limit);
    if (schedule.kind == ScheduleKind::fully_sequential) {
        std::vector<std::int64_t> out(static_cast<std::size_t>(ns));
        for (std::int64_t n = 1; n <= ns; ++n)
            out[static_cast<std::size_t>(n - 1)] = n;
        return out;
    }
    const int s = schedule.stages;
    if (s < 1)
        throw DomainError("a plan needs at least one stage");
    if (s == 1)
        return {ns};
    std::int64_t n1 = std::min(first_stopping_size(design, schedule.n_limit), ns);
    if (ns - n1 < s - 1)
        n1 = std::max<std::int64_t>(1, ns - (s - 1));
    if (ns - n1 < s - 1) {
        ns = n1 + (s - 1);
        while (!stage_closed(design.model, build_stage(design, ns))) {
            if (++ns > schedule.n_limit)
                throw InfeasibleError("no closed last stage up to n = " + std::to_string(schedule.n_limit));
        }
    }
    std::vector<std::int64_t> out(static_cast<std::size_t>(s));
    const double a = static_cast<double>(n1);
    const double b = static_cast<double>(ns);
    for (int l = 0; l < s; ++l) {
        const double t = static_cast<double>(l) / static_cast<double>(s - 1);
        const double v = schedule.kind == ScheduleKind::arithmetic ? a + t * (b - a) : a * std::pow(b / a, t);
        out[static_cast<std::size_t>(l)] = static_cast<std::int64_t>(std::llround(v));
    }
    out.front() = n1;
    out.back() = ns;
    // enforce strict increase without moving the last stage
    for (int l = 1; l < s; ++l)
        out[static_cast<std::size_t>(l)] = std::max(out[static_cast<std::size_t>(l)], out[static_cast<std::size_t>(l - 1)] + 1);
    for (int l = s - 2; l >= 0; --l)
        out[static_cast<std::size_t>(l)] = std::min(out[static_cast<std::size_t>(l)], out[static_cast<std::size_t>(l + 1)] - 1);
    return out;
}

MultiHypPlan build_thresholds(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule,
                              const std::vector<std::int64_t>& sizes)
{
    design.validate();
    if (kind == PlanKind::one_sided && design.hypotheses() != 2)
        throw DomainError("a one-sided plan has exactly two hypotheses");
    MultiHypPlan plan;
    plan.kind = kind;
    plan.design = design;
    plan.schedule = schedule;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        check_positive_size(sizes[i]);
        if (i > 0 && sizes[i] <= sizes[i - 1])
            throw DomainError("stage sizes must be strictly increasing");
    }
    plan.stages.reserve(sizes.size());
    for (std::int64_t n : sizes)
        plan.stages.push_back(build_stage(design, n));
    return plan;
}

MultiHypPlan build_plan(const HypothesisDesign& design, PlanKind kind, const ScheduleSpec& schedule)
{
    design.validate();
    MultiHypPlan plan = build_thresholds(design, kind, schedule, stage_schedule(design, kind, schedule));
    if (!plan_closed(plan))
        throw InfeasibleError("the last stage (n = " + std::to_string(plan.n_max()) + ") leaves support points undecided");
    return plan;
}

bool plan_closed(const MultiHypPlan& plan)
{
    return !plan.stages.empty() && stage_closed(plan.design.model, plan.stages.back());
}

int decision_variable(const MultiHypPlan& plan, int stage, std::int64_t k)
{
    if (stage < 0 || stage >= plan.stage_count())
        throw DomainError("stage index out of range");
    const auto& rule = plan.stages[static_cast<std::size_t>(stage)];
    if (k < 0 || (plan.design.model.bounded_support() && k > rule.n))
        throw DomainError("sum " + std::to_string(k) + " outside the support at n = " + std::to_string(rule.n));
    return rule.decision(k);
}

int decision_variable(const MultiHypPlan& plan, int stage, double mean)
{
    if (stage < 0 || stage >= plan.stage_count())
        throw DomainError("stage index out of range");
    const auto stat = statistic_from_mean(plan.design.model, plan.stages[static_cast<std::size_t>(stage)].n, mean);
    return decision_variable(plan, stage, stat.k);
}

double sample_bound_value(const DistributionModel& model, double theta0, double theta1, double zeta_alpha,
                          double zeta_beta)
{
    if (!model.in_parameter_space(theta0) || !model.in_parameter_space(theta1) || !(theta0 < theta1))
        throw DomainError("sample bound needs theta0 < theta1 inside the parameter space");
    if (!(zeta_alpha > 0.0 && zeta_alpha < 1.0) || !(zeta_beta > 0.0 && zeta_beta < 1.0))
        throw DomainError("sample bound needs zeta*alpha and zeta*beta in (0, 1)");
    const double mid = 0.5 * (theta0 + theta1);
    const double c0 = log_chernoff(model, mid, theta0);
    const double c1 = log_chernoff(model, mid, theta1);
    if (!(c0 < 0.0) || !(c1 < 0.0))
        throw DomainError("Chernoff function equals 1 at the midpoint");
    return std::max(std::log(zeta_alpha) / c0, std::log(zeta_beta) / c1);
}

std::int64_t sample_bound(const DistributionModel& model, double theta0, double theta1, double zeta_alpha,
                          double zeta_beta)
{
    const double b = sample_bound_value(model, theta0, theta1, zeta_alpha, zeta_beta);
    if (!(b < 9e15))
        throw DomainError("sample bound overflows");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(b)));
}

void check_observation(const DistributionModel& model, std::int64_t x)
{
    if (x < 0 || (model.bounded_support() && x > 1))
        throw InputError("observation " + std::to_string(x) + " outside the " + std::string(model.name()) + " support");
}

namespace {

std::int64_t draw(SampleSource& source, const DistributionModel& model, std::int64_t taken)
{
    const auto x = source.next();
    if (!x)
        throw InputError("sample stream exhausted after " + std::to_string(taken) + " observations");
    check_observation(model, *x);
    return *x;
}

} // namespace

TestOutcome run_plan(const MultiHypPlan& plan, SampleSource& source)
{
    TestOutcome out;
    std::int64_t taken = 0;
    std::int64_t sum = 0;
    for (int l = 0; l < plan.stage_count(); ++l) {
        const auto& rule = plan.stages[static_cast<std::size_t>(l)];
        for (; taken < rule.n; ++taken)
            sum += draw(source, plan.design.model, taken);
        out.stage = l + 1;
        out.samples = rule.n;
        out.estimate = static_cast<double>(sum) / static_cast<double>(rule.n);
        const int d = rule.decision(sum);
        if (d != 0) {
            out.accepted = d - 1;
            out.tie = rule.in_overlap(sum);
            return out;
        }
    }
    return out;
}

int one_sided_decision(const HypothesisDesign& design, std::int64_t n, std::int64_t k)
{
    if (design.hypotheses() != 2)
        throw DomainError("one-sided decision needs exactly two hypotheses");
    const bool reject = lower_ok(design, 1, n, k);
    const bool accept = upper_ok(design, 1, n, k);
    if (!reject && !accept)
        return 0;
    if (!reject)
        return 1;
    if (!accept)
        return 2;
    bool lower = true;
    switch (design.tie) {
    case TiePolicy::accept_lower:
        lower = true;
        break;
    case TiePolicy::accept_upper:
        lower = false;
        break;
    case TiePolicy::likelihood_ratio:
        lower = lr_accepts_lower(design, 1, n, k);
        break;
    case TiePolicy::zone_midpoint:
        lower = zone_mid_accepts_lower(design, 1, n, k);
        break;
    case TiePolicy::midpoint: {
        // scan the tie set directly
        std::int64_t lo = -1;
        std::int64_t hi = -1;
        for (std::int64_t j = 0; design.model.bounded_support() ? j <= n : upper_ok(design, 1, n, j); ++j) {
            if (lower_ok(design, 1, n, j) && upper_ok(design, 1, n, j)) {
                if (lo < 0)
                    lo = j;
                hi = j;
            }
        }
        lower = 2 * k <= lo + hi;
        break;
    }
    }
    return lower ? 1 : 2;
}

TestOutcome run_one_sided(const MultiHypPlan& plan, SampleSource& source)
{
    TestOutcome out;
    std::int64_t taken = 0;
    std::int64_t sum = 0;
    for (int l = 0; l < plan.stage_count(); ++l) {
        const std::int64_t n = plan.stages[static_cast<std::size_t>(l)].n;
        for (; taken < n; ++taken)
            sum += draw(source, plan.design.model, taken);
        out.stage = l + 1;
        out.samples = n;
        out.estimate = static_cast<double>(sum) / static_cast<double>(n);
        const int d = one_sided_decision(plan.design, n, sum);
        if (d != 0) {
            out.accepted = d - 1;
            out.tie = lower_ok(plan.design, 1, n, sum) && upper_ok(plan.design, 1, n, sum);
            return out;
        }
    }
    return out;
}

} // namespace seqcl
