#include "seqcl/oc.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace seqcl {

namespace {

// pmf of the sum of n observations; for unbounded support truncated where the
// remaining tail is <= eps. lost receives the dropped mass.
std::vector<double> increment_pmf(const DistributionModel& model, std::int64_t n, double theta, double eps,
                                  double& lost)
{
    const std::int64_t top = model.bounded_support() ? n : support_cutoff(model, n, theta, eps);
    std::vector<double> pmf(static_cast<std::size_t>(top + 1));
    CompensatedSum total;
    for (std::int64_t j = 0; j <= top; ++j) {
        pmf[static_cast<std::size_t>(j)] = pmf_sum(model, n, j, theta);
        total.add(pmf[static_cast<std::size_t>(j)]);
    }
    lost = model.bounded_support() ? 0.0 : std::max(0.0, 1.0 - total.value());
    return pmf;
}

void trim(std::vector<double>& v)
{
    while (!v.empty() && v.back() == 0.0)
        v.pop_back();
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty())
        return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        if (x == 0.0)
            continue;
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += x * b[j];
    }
    return out;
}

} // namespace

double propagate(const MultiHypPlan& plan, double theta, const StopVisitor& visit, double eps)
{
    const auto& model = plan.design.model;
    check_theta(model, theta);
    if (plan.stages.empty())
        throw DomainError("plan has no stages");
    double truncated = 0.0;
    std::vector<double> cur;
    std::int64_t prev_n = 0;
    for (int l = 0; l < plan.stage_count(); ++l) {
        const auto& rule = plan.stages[static_cast<std::size_t>(l)];
        double lost = 0.0;
        const auto inc = increment_pmf(model, rule.n - prev_n, theta, eps, lost);
        if (l == 0) {
            cur = inc;
            truncated += lost;
        } else {
            CompensatedSum carried;
            for (double x : cur)
                carried.add(x);
            truncated += lost * carried.value();
            cur = convolve(cur, inc);
        }
        prev_n = rule.n;
        const bool last = l + 1 == plan.stage_count();
        for (std::size_t k = 0; k < cur.size(); ++k) {
            if (cur[k] == 0.0)
                continue;
            const int d = rule.decision(static_cast<std::int64_t>(k));
            if (d != 0 || last) {
                visit(l, static_cast<std::int64_t>(k), d, cur[k]);
                cur[k] = 0.0;
            }
        }
        trim(cur);
    }
    return truncated;
}

OCPoint oc_point(const MultiHypPlan& plan, double theta, double eps)
{
    const int m = plan.hypotheses();
    const int s = plan.stage_count();
    OCPoint pt;
    pt.theta = theta;
    std::vector<CompensatedSum> acc(static_cast<std::size_t>(m));
    std::vector<CompensatedSum> stage(static_cast<std::size_t>(s));
    CompensatedSum undecided;
    pt.truncation = propagate(
        plan, theta,
        [&](int l, std::int64_t, int d, double mass) {
            if (d == 0) {
                undecided.add(mass);
                return;
            }
            acc[static_cast<std::size_t>(d - 1)].add(mass);
            stage[static_cast<std::size_t>(l)].add(mass);
        },
        eps);
    pt.accept.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        pt.accept[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].value();
    pt.stage_prob.resize(static_cast<std::size_t>(s));
    CompensatedSum asn;
    for (int l = 0; l < s; ++l) {
        pt.stage_prob[static_cast<std::size_t>(l)] = stage[static_cast<std::size_t>(l)].value();
        asn.add(pt.stage_prob[static_cast<std::size_t>(l)] * static_cast<double>(plan.stages[static_cast<std::size_t>(l)].n));
    }
    pt.undecided = undecided.value();
    asn.add(pt.undecided * static_cast<double>(plan.n_max()));
    pt.asn = asn.value();
    return pt;
}

namespace {

OCReport report_skeleton(const MultiHypPlan& plan, std::size_t count)
{
    OCReport r;
    r.hypotheses = plan.hypotheses();
    r.sizes = plan.sample_sizes();
    r.points.resize(count);
    return r;
}

} // namespace

OCReport oc_curve(const MultiHypPlan& plan, const std::vector<double>& grid, double eps)
{
    for (double t : grid)
        check_theta(plan.design.model, t);
    OCReport r = report_skeleton(plan, grid.size());
    const auto count = static_cast<std::int64_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i)
        r.points[static_cast<std::size_t>(i)] = oc_point(plan, grid[static_cast<std::size_t>(i)], eps);
    return r;
}

OCReport oc_curve_serial(const MultiHypPlan& plan, const std::vector<double>& grid, double eps)
{
    for (double t : grid)
        check_theta(plan.design.model, t);
    OCReport r = report_skeleton(plan, grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        r.points[i] = oc_point(plan, grid[i], eps);
    return r;
}

void write_oc_csv(std::ostream& os, const OCReport& report)
{
    os << "theta";
    for (int i = 0; i < report.hypotheses; ++i)
        os << ",accept_prob_" << i;
    os << ",asn";
    for (std::size_t l = 0; l < report.sizes.size(); ++l)
        os << ",stage_prob_" << (l + 1);
    os << ",truncation_mass\n";
    for (const auto& pt : report.points) {
        os << format_double(pt.theta);
        for (double a : pt.accept)
            os << ',' << format_double(a);
        os << ',' << format_double(pt.asn);
        for (double p : pt.stage_prob)
            os << ',' << format_double(p);
        os << ',' << format_double(pt.truncation) << '\n';
    }
}

std::vector<double> make_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw DomainError("grid needs lo <= hi and a positive step");
    const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
    if (count > 10'000'000)
        throw DomainError("grid too large");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count + 1));
    for (std::int64_t i = 0; i <= count; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
}

std::vector<double> parse_grid(const std::string& text)
{
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ':'))
            parts.push_back(parse_double(item));
        if (parts.size() != 3)
            throw InputError("grid '" + text + "' is not lo:hi:step");
        return make_grid(parts[0], parts[1], parts[2]);
    }
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_double(item));
    if (out.empty())
        throw InputError("empty grid");
    return out;
}

double RiskReport::worst_ratio() const
{
    if (checks.empty())
        return 0.0;
    const auto& c = checks[static_cast<std::size_t>(worst)];
    return c.risk / c.requirement;
}

RiskReport verify_risk(const MultiHypPlan& plan, const std::vector<double>& requirement, double eps)
{
    const auto& d = plan.design;
    const int m = d.hypotheses();
    const std::vector<double> req = requirement.empty() ? d.risks : requirement;
    if (static_cast<int>(req.size()) != m)
        throw DomainError("requirement needs one risk per hypothesis");
    const double s = static_cast<double>(plan.stage_count());
    RiskReport rep;
    rep.cap_zeta_alpha = s * d.alpha(1);
    rep.cap_zeta_beta = s * d.beta(m - 1);
    rep.accept_caps.assign(static_cast<std::size_t>(m), 0.0);
    rep.reject_caps.assign(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        if (i >= 1)
            rep.accept_caps[static_cast<std::size_t>(i)] = s * d.alpha(i);
        if (i <= m - 2)
            rep.reject_caps[static_cast<std::size_t>(i)] = s * d.beta(i + 1);
    }

    // Pr{reject H_i and est satisfies keep | theta}, plus truncation.
    auto reject_mass = [&](int i, double theta, auto keep) {
        CompensatedSum acc;
        const double lost = propagate(
            plan, theta,
            [&](int l, std::int64_t k, int dec, double mass) {
                if (dec == i + 1)
                    return;
                const double est = static_cast<double>(k) / static_cast<double>(plan.stages[static_cast<std::size_t>(l)].n);
                if (dec == 0 || keep(est))
                    acc.add(mass);
            },
            eps);
        return acc.value() + lost;
    };
    auto any = [](double) { return true; };

    for (int i = 0; i < m; ++i) {
        RiskCheck c;
        c.hypothesis = i;
        c.requirement = req[static_cast<std::size_t>(i)];
        double amax = 0.0;
        for (int j = i + 1; j <= m; ++j)
            amax = std::max(amax, d.alpha(j));
        double bmax = 0.0;
        for (int j = 0; j <= i; ++j)
            bmax = std::max(bmax, d.beta(j));
        c.cap = s * (amax + bmax);
        if (i == 0) {
            c.theta_low = c.theta_high = d.zone_lower[0];
            c.risk = reject_mass(0, c.theta_high, any);
        } else if (i == m - 1) {
            c.theta_low = c.theta_high = d.zone_upper[static_cast<std::size_t>(m - 2)];
            c.risk = reject_mass(i, c.theta_low, any);
        } else {
            const double a = d.zone_upper[static_cast<std::size_t>(i - 1)];
            const double b = d.zone_lower[static_cast<std::size_t>(i)];
            c.theta_low = a;
            c.theta_high = b;
            c.risk = reject_mass(i, a, [a](double est) { return est <= a; })
                     + reject_mass(i, b, [b](double est) { return est >= b; });
        }
        c.ok = c.risk <= c.requirement;
        rep.checks.push_back(c);
    }
    rep.satisfied = std::all_of(rep.checks.begin(), rep.checks.end(), [](const RiskCheck& c) { return c.ok; });
    double worst = -1.0;
    for (std::size_t i = 0; i < rep.checks.size(); ++i) {
        const double r = rep.checks[i].risk / rep.checks[i].requirement;
        if (r > worst) {
            worst = r;
            rep.worst = static_cast<int>(i);
        }
    }
    return rep;
}

} // namespace seqcl
