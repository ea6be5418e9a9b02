#include "seqcl/two_prop.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace seqcl {

namespace {

const DistributionModel kBern = DistributionModel::bernoulli();

double crit_value(double delta)
{
    check_delta(delta);
    return normal_quantile(1.0 - delta / 2.0);
}

std::int64_t sum_of(double p, std::int64_t n)
{
    return statistic_from_mean(kBern, n, p).k;
}

// l_x, u_x (or l_y, u_y) for every k at one sample size and critical value.
struct RootTable {
    std::vector<double> lo;
    std::vector<double> hi;

    RootTable(std::int64_t n, double crit)
    {
        lo.resize(static_cast<std::size_t>(n + 1));
        hi.resize(static_cast<std::size_t>(n + 1));
        for (std::int64_t k = 0; k <= n; ++k) {
            const auto r = score_roots(k, n, crit);
            lo[static_cast<std::size_t>(k)] = r.first;
            hi[static_cast<std::size_t>(k)] = r.second;
        }
    }
};

double var_term(double p, std::int64_t n)
{
    return p * (1.0 - p) / static_cast<double>(n);
}

// Newcombe limits at one coefficient for a whole (nx, ny) grid.
struct NewcombeGrid {
    std::int64_t nx;
    std::int64_t ny;
    double crit;
    RootTable tx;
    RootTable ty;

    NewcombeGrid(std::int64_t nx_, std::int64_t ny_, double delta)
        : nx(nx_), ny(ny_), crit(crit_value(delta)), tx(nx_, crit), ty(ny_, crit)
    {
    }

    double diff(std::int64_t kx, std::int64_t ky) const
    {
        return static_cast<double>(kx) / static_cast<double>(nx) - static_cast<double>(ky) / static_cast<double>(ny);
    }

    double lower(std::int64_t kx, std::int64_t ky) const
    {
        const auto ix = static_cast<std::size_t>(kx);
        const auto iy = static_cast<std::size_t>(ky);
        return diff(kx, ky) - crit * std::sqrt(var_term(tx.lo[ix], nx) + var_term(ty.hi[iy], ny));
    }

    double upper(std::int64_t kx, std::int64_t ky) const
    {
        const auto ix = static_cast<std::size_t>(kx);
        const auto iy = static_cast<std::size_t>(ky);
        return diff(kx, ky) + crit * std::sqrt(var_term(tx.hi[ix], nx) + var_term(ty.lo[iy], ny));
    }
};

void check_sizes(std::int64_t nx, std::int64_t ny)
{
    if (nx < 1 || ny < 1)
        throw DomainError("sample sizes must be positive");
}

} // namespace

std::pair<double, double> score_roots(std::int64_t k, std::int64_t n, double crit)
{
    if (n < 1 || k < 0 || k > n)
        throw DomainError("score roots need 0 <= k <= n");
    const double c = crit * crit;
    const auto nn = static_cast<double>(n);
    const auto kk = static_cast<double>(k);
    const double disc = std::sqrt(c * c + 4.0 * c * kk * (nn - kk) / nn);
    const double den = 2.0 * (c + nn);
    return {std::max(0.0, (c + 2.0 * kk - disc) / den), std::min(1.0, (c + 2.0 * kk + disc) / den)};
}

double newcombe_lower(double px, double py, std::int64_t nx, std::int64_t ny, double delta)
{
    return newcombe_limits(px, py, nx, ny, delta).first;
}

double newcombe_upper(double px, double py, std::int64_t nx, std::int64_t ny, double delta)
{
    return newcombe_limits(px, py, nx, ny, delta).second;
}

std::pair<double, double> newcombe_limits(double px, double py, std::int64_t nx, std::int64_t ny, double delta)
{
    check_sizes(nx, ny);
    const double crit = crit_value(delta);
    const std::int64_t kx = sum_of(px, nx);
    const std::int64_t ky = sum_of(py, ny);
    const auto rx = score_roots(kx, nx, crit);
    const auto ry = score_roots(ky, ny, crit);
    const double d = static_cast<double>(kx) / static_cast<double>(nx) - static_cast<double>(ky) / static_cast<double>(ny);
    const double lo = d - crit * std::sqrt(var_term(rx.first, nx) + var_term(ry.second, ny));
    const double hi = d + crit * std::sqrt(var_term(rx.second, nx) + var_term(ry.first, ny));
    return {lo, hi};
}

std::pair<std::int64_t, std::int64_t> truncation_sums(double theta, std::int64_t n, double eta)
{
    if (!(theta >= 0.0 && theta <= 1.0))
        throw DomainError("truncation needs theta in [0, 1]");
    if (n < 1)
        throw DomainError("truncation needs n >= 1");
    if (!(eta >= 0.0 && eta < 1.0))
        throw DomainError("truncation needs eta in (0, 1)");
    if (eta == 0.0)
        return {0, n};
    const auto nn = static_cast<double>(n);
    const double log_term = std::log(2.0 / eta);
    const double root = std::sqrt(1.0 + 18.0 * nn * theta * (1.0 - theta) / log_term);
    const double den = 2.0 / (3.0 * nn) + 3.0 / log_term;
    const double lo = std::ceil(nn * theta + (1.0 - 2.0 * theta - root) / den);
    const double hi = std::floor(nn * theta + (1.0 - 2.0 * theta + root) / den);
    const auto clamp = [&](double v) { return static_cast<std::int64_t>(std::min(nn, std::max(0.0, v))); };
    return {clamp(lo), clamp(hi)};
}

std::pair<double, double> truncation_bounds(double theta, std::int64_t n, double eta)
{
    const auto s = truncation_sums(theta, n, eta);
    const auto nn = static_cast<double>(n);
    return {static_cast<double>(s.first) / nn, static_cast<double>(s.second) / nn};
}

std::int64_t LinkMap::operator()(std::int64_t nx) const
{
    const auto v = static_cast<std::int64_t>(std::ceil(scale * static_cast<double>(nx) - 1e-12)) + offset;
    if (v < 1)
        throw DomainError("link map gives a non-positive y sample size for n_x = " + std::to_string(nx));
    return v;
}

double TwoPropDesign::alpha(int i) const
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

double TwoPropDesign::beta(int i) const
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

double TwoPropDesign::zeta_max() const
{
    double worst = 0.0;
    for (double r : risks)
        worst = std::max(worst, r);
    return 1.0 / worst;
}

void TwoPropDesign::validate() const
{
    const int m = hypotheses();
    if (m < 2)
        throw DomainError("a design needs at least two hypotheses");
    if (m > 36)
        throw DomainError("at most 36 hypotheses are supported");
    if (zone_lower.size() != static_cast<std::size_t>(m - 1) || zone_upper.size() != static_cast<std::size_t>(m - 1))
        throw DomainError("expected " + std::to_string(m - 1) + " indifference zones");
    for (double r : risks)
        if (!(r > 0.0 && r < 1.0))
            throw DomainError("risk " + format_double(r) + " outside (0, 1)");
    for (std::size_t i = 0; i < zone_lower.size(); ++i) {
        if (!(zone_lower[i] > -1.0 && zone_upper[i] < 1.0 && zone_lower[i] < zone_upper[i]))
            throw DomainError("zone endpoints must satisfy -1 < theta' < theta'' < 1");
        if (i > 0 && !(zone_upper[i - 1] <= zone_lower[i]))
            throw DomainError("indifference zones overlap");
    }
    if (!(zeta > 0.0 && zeta < zeta_max()))
        throw DomainError("zeta = " + format_double(zeta) + " outside (0, " + format_double(zeta_max()) + ")");
    if (!(link.scale > 0.0))
        throw DomainError("link scale must be positive");
    if (stages < 1)
        throw DomainError("a plan needs at least one stage");
}

bool StageRegion::closed() const
{
    return std::none_of(labels.begin(), labels.end(), [](std::int8_t v) { return v == kContinue; });
}

bool StageRegion::can_stop() const
{
    return std::any_of(labels.begin(), labels.end(), [](std::int8_t v) { return v != kContinue; });
}

namespace {

struct BracketTables {
    std::vector<NewcombeGrid> lower;  // index i: coefficient alpha_i, i = 1 .. m-1 (slot 0 unused)
    std::vector<NewcombeGrid> upper;  // index i: coefficient beta_i
};

BracketTables bracket_tables(const TwoPropDesign& d, std::int64_t nx, std::int64_t ny)
{
    BracketTables t;
    const int m = d.hypotheses();
    t.lower.reserve(static_cast<std::size_t>(m));
    t.upper.reserve(static_cast<std::size_t>(m));
    t.lower.emplace_back(nx, ny, 0.5);
    t.upper.emplace_back(nx, ny, 0.5);
    for (int i = 1; i < m; ++i) {
        t.lower.emplace_back(nx, ny, d.alpha(i));
        t.upper.emplace_back(nx, ny, d.beta(i));
    }
    return t;
}

// Inclusion rule for D = i (accept H_{i-1}), i = 1 .. m.
bool included(const TwoPropDesign& d, const BracketTables& t, int i, std::int64_t kx, std::int64_t ky)
{
    const int m = d.hypotheses();
    const bool low = i == 1 || t.lower[static_cast<std::size_t>(i - 1)].lower(kx, ky) >= d.zone_lower[static_cast<std::size_t>(i - 2)];
    if (!low)
        return false;
    return i == m || t.upper[static_cast<std::size_t>(i)].upper(kx, ky) <= d.zone_upper[static_cast<std::size_t>(i - 1)];
}

} // namespace

StageRegion build_region(const TwoPropDesign& design, std::int64_t nx)
{
    const std::int64_t ny = design.link(nx);
    check_sizes(nx, ny);
    const int m = design.hypotheses();
    const auto t = bracket_tables(design, nx, ny);
    StageRegion r;
    r.nx = nx;
    r.ny = ny;
    r.labels.assign(static_cast<std::size_t>((nx + 1) * (ny + 1)), kContinue);
    std::vector<int> hits;
    for (std::int64_t kx = 0; kx <= nx; ++kx) {
        for (std::int64_t ky = 0; ky <= ny; ++ky) {
            hits.clear();
            for (int i = 1; i <= m; ++i)
                if (included(design, t, i, kx, ky))
                    hits.push_back(i);
            if (hits.empty())
                continue;
            int accept = hits.front() - 1;
            if (hits.size() >= 2 && hits[1] == hits[0] + 1) {
                const int i = hits[0];
                const double mid = 0.5 * (design.zone_lower[static_cast<std::size_t>(i - 1)]
                                          + design.zone_upper[static_cast<std::size_t>(i - 1)]);
                accept = t.lower[0].diff(kx, ky) <= mid ? i - 1 : i;
            }
            r.labels[static_cast<std::size_t>(kx * (ny + 1) + ky)] = static_cast<std::int8_t>(accept);
        }
    }
    return r;
}

bool brackets_nonempty(const TwoPropDesign& design, std::int64_t nx)
{
    const std::int64_t ny = design.link(nx);
    check_sizes(nx, ny);
    const int m = design.hypotheses();
    const auto t = bracket_tables(design, nx, ny);
    for (int i = 1; i < m; ++i) {
        const auto& lo = t.lower[static_cast<std::size_t>(i)];
        const auto& hi = t.upper[static_cast<std::size_t>(i)];
        const double zl = design.zone_lower[static_cast<std::size_t>(i - 1)];
        const double zu = design.zone_upper[static_cast<std::size_t>(i - 1)];
        bool found = false;
        for (std::int64_t kx = 0; kx <= nx && !found; ++kx)
            for (std::int64_t ky = 0; ky <= ny && !found; ++ky)
                found = lo.lower(kx, ky) >= zl && hi.upper(kx, ky) <= zu;
        if (!found)
            return false;
    }
    return true;
}

std::int64_t two_prop_first_size(const TwoPropDesign& design)
{
    design.validate();
    for (std::int64_t nx = 1; nx <= design.n_limit; ++nx)
        if (build_region(design, nx).can_stop())
            return nx;
    throw InfeasibleError("no n_x up to " + std::to_string(design.n_limit) + " allows a decision");
}

std::int64_t two_prop_last_size(const TwoPropDesign& design)
{
    design.validate();
    for (std::int64_t nx = 1; nx <= design.n_limit; ++nx) {
        if (!brackets_nonempty(design, nx))
            continue;
        for (std::int64_t n = nx; n <= design.n_limit; ++n)
            if (build_region(design, n).closed())
                return n;
        break;
    }
    throw InfeasibleError("no closed last stage with n_x up to " + std::to_string(design.n_limit));
}

std::vector<std::int64_t> two_prop_schedule(const TwoPropDesign& design)
{
    design.validate();
    if (design.schedule == ScheduleKind::fixed)
        return design.sizes_x;
    std::int64_t ns = two_prop_last_size(design);
    if (design.schedule == ScheduleKind::fully_sequential) {
        std::vector<std::int64_t> out;
        for (std::int64_t n = 1; n <= ns; ++n)
            out.push_back(n);
        return out;
    }
    const int s = design.stages;
    if (s == 1)
        return {ns};
    std::int64_t n1 = std::min(two_prop_first_size(design), ns);
    if (ns - n1 < s - 1)
        n1 = std::max<std::int64_t>(1, ns - (s - 1));
    if (ns - n1 < s - 1) {
        ns = n1 + (s - 1);
        while (!build_region(design, ns).closed())
            if (++ns > design.n_limit)
                throw InfeasibleError("no closed last stage with n_x up to " + std::to_string(design.n_limit));
    }
    std::vector<std::int64_t> out(static_cast<std::size_t>(s));
    const double a = static_cast<double>(n1);
    const double b = static_cast<double>(ns);
    for (int l = 0; l < s; ++l) {
        const double t = static_cast<double>(l) / static_cast<double>(s - 1);
        const double v = design.schedule == ScheduleKind::arithmetic ? a + t * (b - a) : a * std::pow(b / a, t);
        out[static_cast<std::size_t>(l)] = std::llround(v);
    }
    out.front() = n1;
    out.back() = ns;
    for (int l = 1; l < s; ++l)
        out[static_cast<std::size_t>(l)] = std::max(out[static_cast<std::size_t>(l)], out[static_cast<std::size_t>(l - 1)] + 1);
    for (int l = s - 2; l >= 0; --l)
        out[static_cast<std::size_t>(l)] = std::min(out[static_cast<std::size_t>(l)], out[static_cast<std::size_t>(l + 1)] - 1);
    return out;
}

TwoPropPlan two_prop_plan_from_sizes(const TwoPropDesign& design, const std::vector<std::int64_t>& sizes_x)
{
    design.validate();
    if (sizes_x.empty())
        throw DomainError("a plan needs at least one stage");
    TwoPropPlan plan;
    plan.design = design;
    for (std::size_t l = 0; l < sizes_x.size(); ++l) {
        if (sizes_x[l] < 1)
            throw DomainError("stage sizes must be positive");
        if (l > 0 && (sizes_x[l] <= sizes_x[l - 1] || design.link(sizes_x[l]) <= design.link(sizes_x[l - 1])))
            throw DomainError("stage sizes must be strictly increasing in x and y");
        plan.stages.push_back(build_region(design, sizes_x[l]));
    }
    return plan;
}

TwoPropPlan build_two_prop_plan(const TwoPropDesign& design)
{
    TwoPropPlan plan = two_prop_plan_from_sizes(design, two_prop_schedule(design));
    if (!plan.stages.back().closed())
        throw InfeasibleError("the last stage leaves support points undecided");
    return plan;
}

namespace {

struct Window {
    std::int64_t lo;
    std::int64_t hi;
    bool empty() const { return lo > hi; }
    std::size_t size() const { return empty() ? 0 : static_cast<std::size_t>(hi - lo + 1); }
};

// Per-stage inputs of the forward recursion: sum windows and increment masses
// (pointwise values or their max / min over an interval of p).
struct RecursionInput {
    std::vector<Window> wx;
    std::vector<Window> wy;
    std::vector<std::vector<double>> incx;
    std::vector<std::vector<double>> incy;
};

enum class MassMode { lower, upper };

std::vector<double> increment_masses(std::int64_t n, double p_lo, double p_hi, MassMode mode)
{
    std::vector<double> out(static_cast<std::size_t>(n + 1));
    for (std::int64_t j = 0; j <= n; ++j) {
        const double a = pmf_sum(kBern, n, j, p_lo);
        const double b = p_lo == p_hi ? a : pmf_sum(kBern, n, j, p_hi);
        double v = 0.0;
        if (mode == MassMode::lower) {
            v = std::min(a, b);
        } else {
            const double mode_p = static_cast<double>(j) / static_cast<double>(n);
            v = std::max(a, b);
            if (mode_p > p_lo && mode_p < p_hi)
                v = std::max(v, pmf_sum(kBern, n, j, mode_p));
        }
        out[static_cast<std::size_t>(j)] = v;
    }
    return out;
}

// Stop masses per stage and label (label m = undecided after the last stage).
std::vector<std::vector<double>> stop_masses(const TwoPropPlan& plan, const RecursionInput& in)
{
    const int m = plan.hypotheses();
    const int s = plan.stage_count();
    std::vector<std::vector<double>> out(static_cast<std::size_t>(s), std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    std::vector<double> cur;
    Window px{0, -1};
    Window py{0, -1};
    for (int l = 0; l < s; ++l) {
        const auto L = static_cast<std::size_t>(l);
        const Window wx = in.wx[L];
        const Window wy = in.wy[L];
        const auto& ix = in.incx[L];
        const auto& iy = in.incy[L];
        std::vector<double> next(wx.size() * wy.size(), 0.0);
        if (!wx.empty() && !wy.empty()) {
            if (l == 0) {
                for (std::int64_t kx = wx.lo; kx <= wx.hi; ++kx)
                    for (std::int64_t ky = wy.lo; ky <= wy.hi; ++ky)
                        next[static_cast<std::size_t>((kx - wx.lo) * static_cast<std::int64_t>(wy.size()) + (ky - wy.lo))] =
                            ix[static_cast<std::size_t>(kx)] * iy[static_cast<std::size_t>(ky)];
            } else if (!cur.empty()) {
                // along x: tmp[kx'][ky] over the new x window and the old y window
                const auto oy = static_cast<std::int64_t>(py.size());
                std::vector<double> tmp(wx.size() * py.size(), 0.0);
                const auto dx = static_cast<std::int64_t>(ix.size()) - 1;
                for (std::int64_t kx = px.lo; kx <= px.hi; ++kx) {
                    for (std::int64_t nkx = std::max(wx.lo, kx); nkx <= std::min(wx.hi, kx + dx); ++nkx) {
                        const double w = ix[static_cast<std::size_t>(nkx - kx)];
                        if (w == 0.0)
                            continue;
                        const double* src = &cur[static_cast<std::size_t>((kx - px.lo) * oy)];
                        double* dst = &tmp[static_cast<std::size_t>((nkx - wx.lo) * oy)];
                        for (std::int64_t j = 0; j < oy; ++j)
                            dst[j] += w * src[j];
                    }
                }
                const auto dy = static_cast<std::int64_t>(iy.size()) - 1;
                const auto ny = static_cast<std::int64_t>(wy.size());
                for (std::int64_t kx = wx.lo; kx <= wx.hi; ++kx) {
                    const double* src = &tmp[static_cast<std::size_t>((kx - wx.lo) * oy)];
                    double* dst = &next[static_cast<std::size_t>((kx - wx.lo) * ny)];
                    for (std::int64_t ky = py.lo; ky <= py.hi; ++ky) {
                        const double v = src[ky - py.lo];
                        if (v == 0.0)
                            continue;
                        for (std::int64_t nky = std::max(wy.lo, ky); nky <= std::min(wy.hi, ky + dy); ++nky)
                            dst[nky - wy.lo] += v * iy[static_cast<std::size_t>(nky - ky)];
                    }
                }
            }
        }
        const auto& region = plan.stages[L];
        const bool last = l + 1 == s;
        const auto ny = static_cast<std::int64_t>(wy.size());
        for (std::int64_t kx = wx.lo; kx <= wx.hi && !wy.empty(); ++kx) {
            for (std::int64_t ky = wy.lo; ky <= wy.hi; ++ky) {
                double& v = next[static_cast<std::size_t>((kx - wx.lo) * ny + (ky - wy.lo))];
                if (v == 0.0)
                    continue;
                const int lab = region.label(kx, ky);
                if (lab != kContinue) {
                    out[L][static_cast<std::size_t>(lab)] += v;
                    v = 0.0;
                } else if (last) {
                    out[L][static_cast<std::size_t>(m)] += v;
                    v = 0.0;
                }
            }
        }
        cur = std::move(next);
        px = wx;
        py = wy;
    }
    return out;
}

std::int64_t increment(const std::vector<StageRegion>& st, int l, bool x)
{
    const auto L = static_cast<std::size_t>(l);
    if (x)
        return st[L].nx - (l == 0 ? 0 : st[L - 1].nx);
    return st[L].ny - (l == 0 ? 0 : st[L - 1].ny);
}

RecursionInput exact_input(const TwoPropPlan& plan, double px, double py)
{
    RecursionInput in;
    for (int l = 0; l < plan.stage_count(); ++l) {
        const auto& st = plan.stages[static_cast<std::size_t>(l)];
        in.wx.push_back({0, st.nx});
        in.wy.push_back({0, st.ny});
        in.incx.push_back(increment_masses(increment(plan.stages, l, true), px, px, MassMode::upper));
        in.incy.push_back(increment_masses(increment(plan.stages, l, false), py, py, MassMode::upper));
    }
    return in;
}

void check_prob(double p)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("proportion " + format_double(p) + " outside [0, 1]");
}

double reject_sum(const std::vector<std::vector<double>>& masses, int hypothesis, bool count_undecided)
{
    CompensatedSum acc;
    for (const auto& row : masses)
        for (std::size_t j = 0; j < row.size(); ++j) {
            const bool undecided = j + 1 == row.size();
            if (static_cast<int>(j) == hypothesis || (undecided && !count_undecided))
                continue;
            acc.add(row[j]);
        }
    return acc.value();
}

} // namespace

std::vector<double> exact_accept_probs(const TwoPropPlan& plan, double px, double py)
{
    check_prob(px);
    check_prob(py);
    const auto masses = stop_masses(plan, exact_input(plan, px, py));
    std::vector<double> out(static_cast<std::size_t>(plan.hypotheses()), 0.0);
    for (const auto& row : masses)
        for (int j = 0; j < plan.hypotheses(); ++j)
            out[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    return out;
}

double exact_reject_prob(const TwoPropPlan& plan, int hypothesis, double px, double py)
{
    check_prob(px);
    check_prob(py);
    if (hypothesis < 0 || hypothesis >= plan.hypotheses())
        throw DomainError("hypothesis index out of range");
    return reject_sum(stop_masses(plan, exact_input(plan, px, py)), hypothesis, true);
}

ProbBounds rejection_prob_bounds(const TwoPropPlan& plan, int hypothesis, const Rectangle& rect, double eta)
{
    if (hypothesis < 0 || hypothesis >= plan.hypotheses())
        throw DomainError("hypothesis index out of range");
    for (double v : {rect.x_lo, rect.x_hi, rect.y_lo, rect.y_hi})
        check_prob(v);
    if (!(rect.x_lo <= rect.x_hi && rect.y_lo <= rect.y_hi))
        throw DomainError("rectangle endpoints out of order");
    if (!(eta >= 0.0 && eta < 1.0))
        throw DomainError("eta outside [0, 1)");
    RecursionInput up;
    RecursionInput lo;
    for (int l = 0; l < plan.stage_count(); ++l) {
        const auto& st = plan.stages[static_cast<std::size_t>(l)];
        const auto ax = truncation_sums(rect.x_lo, st.nx, eta);
        const auto bx = truncation_sums(rect.x_hi, st.nx, eta);
        const auto ay = truncation_sums(rect.y_lo, st.ny, eta);
        const auto by = truncation_sums(rect.y_hi, st.ny, eta);
        up.wx.push_back({ax.first, bx.second});
        up.wy.push_back({ay.first, by.second});
        lo.wx.push_back({bx.first, ax.second});
        lo.wy.push_back({by.first, ay.second});
        const std::int64_t dx = increment(plan.stages, l, true);
        const std::int64_t dy = increment(plan.stages, l, false);
        up.incx.push_back(increment_masses(dx, rect.x_lo, rect.x_hi, MassMode::upper));
        up.incy.push_back(increment_masses(dy, rect.y_lo, rect.y_hi, MassMode::upper));
        lo.incx.push_back(increment_masses(dx, rect.x_lo, rect.x_hi, MassMode::lower));
        lo.incy.push_back(increment_masses(dy, rect.y_lo, rect.y_hi, MassMode::lower));
    }
    ProbBounds b;
    const double slack = 2.0 * static_cast<double>(plan.stage_count()) * eta;
    b.upper = std::min(1.0, slack + reject_sum(stop_masses(plan, up), hypothesis, true));
    b.lower = std::min(1.0, reject_sum(stop_masses(plan, lo), hypothesis, false));
    return b;
}

std::string_view verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::proved:
        return "proved";
    case Verdict::disproved:
        return "disproved";
    case Verdict::inconclusive:
        return "inconclusive";
    }
    return "inconclusive";
}

std::pair<double, double> two_prop_zone(const TwoPropDesign& design, int hypothesis)
{
    const int m = design.hypotheses();
    if (hypothesis < 0 || hypothesis >= m)
        throw DomainError("hypothesis index out of range");
    const double lo = hypothesis == 0 ? -1.0 : design.zone_upper[static_cast<std::size_t>(hypothesis - 1)];
    const double hi = hypothesis == m - 1 ? 1.0 : design.zone_lower[static_cast<std::size_t>(hypothesis)];
    return {lo, hi};
}

namespace {

bool meets_zone(const Rectangle& r, std::pair<double, double> zone)
{
    return r.x_lo - r.y_hi <= zone.second && r.x_hi - r.y_lo >= zone.first;
}

struct Node {
    Rectangle rect;
    ProbBounds bounds;
    bool operator<(const Node& o) const { return bounds.upper < o.bounds.upper; }
};

} // namespace

RiskCertificate certify_risk(const TwoPropPlan& plan, int hypothesis, double delta, const CertifyOptions& options)
{
    const auto zone = two_prop_zone(plan.design, hypothesis);
    if (!(options.eta > 0.0 && options.eta < 1.0) || !(options.tol > 0.0) || options.budget < 1)
        throw DomainError("invalid certification options");
    RiskCertificate cert;
    cert.hypothesis = hypothesis;
    cert.requirement = delta;
    const double s2 = 2.0 * static_cast<double>(plan.stage_count());

    bool disproved = false;
    auto evaluate = [&](const Rectangle& r) {
        double eta = options.eta;
        ProbBounds b = rejection_prob_bounds(plan, hypothesis, r, eta);
        // halve eta while the 2 s eta slack is what keeps the bound above delta
        while (b.upper > delta && b.upper - s2 * eta <= delta && eta > options.eta_min) {
            eta = std::max(options.eta_min, eta / 2.0);
            b = rejection_prob_bounds(plan, hypothesis, r, eta);
        }
        ++cert.explored;
        if (options.keep_trace)
            cert.trace.push_back({r, b, eta});
        if (b.lower > cert.best_lower)
            cert.best_lower = b.lower;
        const double cx = 0.5 * (r.x_lo + r.x_hi);
        const double cy = 0.5 * (r.y_lo + r.y_hi);
        if (cx - cy >= zone.first && cx - cy <= zone.second) {
            const double exact = exact_reject_prob(plan, hypothesis, cx, cy);
            if (exact > cert.best_lower)
                cert.best_lower = exact;
            if (exact > delta && !disproved) {
                disproved = true;
                cert.witness = {cx, cx, cy, cy};
            }
        }
        if (b.lower > delta && !disproved) {
            disproved = true;
            cert.witness = r;
        }
        return b;
    };

    std::priority_queue<Node> frontier;
    const Rectangle root{0.0, 1.0, 0.0, 1.0};
    frontier.push({root, evaluate(root)});
    std::vector<Node> unresolved;
    bool out_of_budget = false;
    while (!frontier.empty() && !disproved) {
        Node top = frontier.top();
        if (top.bounds.upper <= delta)
            break;
        frontier.pop();
        if (top.rect.width() < options.tol) {
            unresolved.push_back(top);
            continue;
        }
        if (cert.explored + 2 > options.budget) {
            out_of_budget = true;
            frontier.push(top);
            break;
        }
        Rectangle a = top.rect;
        Rectangle b = top.rect;
        if (top.rect.x_hi - top.rect.x_lo >= top.rect.y_hi - top.rect.y_lo) {
            const double mid = 0.5 * (top.rect.x_lo + top.rect.x_hi);
            a.x_hi = mid;
            b.x_lo = mid;
        } else {
            const double mid = 0.5 * (top.rect.y_lo + top.rect.y_hi);
            a.y_hi = mid;
            b.y_lo = mid;
        }
        for (const Rectangle& child : {a, b})
            if (meets_zone(child, zone))
                frontier.push({child, evaluate(child)});
    }

    double max_upper = frontier.empty() ? 0.0 : frontier.top().bounds.upper;
    Rectangle worst = frontier.empty() ? root : frontier.top().rect;
    for (const auto& n : unresolved)
        if (n.bounds.upper > max_upper) {
            max_upper = n.bounds.upper;
            worst = n.rect;
        }
    cert.max_upper = max_upper;
    if (disproved) {
        cert.verdict = Verdict::disproved;
    } else if (out_of_budget || !unresolved.empty()) {
        cert.verdict = Verdict::inconclusive;
        cert.witness = worst;
    } else {
        cert.verdict = Verdict::proved;
        cert.witness = worst;
    }
    return cert;
}

TuneResult<std::vector<RiskCertificate>> tune_two_prop(const TwoPropDesign& design,
                                                      const std::vector<double>& requirement, double tol,
                                                      const CertifyOptions& options)
{
    design.validate();
    const std::vector<double> req = requirement.empty() ? design.risks : requirement;
    if (static_cast<int>(req.size()) != design.hypotheses())
        throw DomainError("requirement needs one risk per hypothesis");
    using Report = std::vector<RiskCertificate>;
    const std::function<std::optional<Probe<Report>>(double)> probe = [&](double zeta) -> std::optional<Probe<Report>> {
        TwoPropDesign d = design;
        d.zeta = zeta;
        TwoPropPlan plan;
        try {
            plan = design.schedule == ScheduleKind::fixed ? two_prop_plan_from_sizes(d, d.sizes_x)
                                                          : build_two_prop_plan(d);
        } catch (const InfeasibleError&) {
            return std::nullopt;
        }
        if (!plan.stages.back().closed())
            return std::nullopt;
        // B&B upper bounds are not exact risks, so no score trend is reported
        Probe<Report> p;
        p.feasible = true;
        p.score = std::nan("");
        for (int i = 0; i < d.hypotheses(); ++i) {
            auto cert = certify_risk(plan, i, req[static_cast<std::size_t>(i)], options);
            p.feasible = p.feasible && cert.verdict == Verdict::proved;
            p.report.push_back(std::move(cert));
            if (!p.feasible)
                break;
        }
        return p;
    };
    return bisect_zeta<Report>(design.zeta_max(), tol, probe);
}

TwoPropOutcome run_two_prop(const TwoPropPlan& plan, SampleSource& xs, SampleSource& ys)
{
    TwoPropOutcome out;
    std::int64_t kx = 0;
    std::int64_t ky = 0;
    std::int64_t tx = 0;
    std::int64_t ty = 0;
    auto pull = [&](SampleSource& src, std::int64_t& taken, const char* name) {
        const auto v = src.next();
        if (!v)
            throw InputError(std::string("stream ") + name + " exhausted after " + std::to_string(taken) + " observations");
        check_observation(kBern, *v);
        ++taken;
        return *v;
    };
    for (int l = 0; l < plan.stage_count(); ++l) {
        const auto& st = plan.stages[static_cast<std::size_t>(l)];
        while (tx < st.nx)
            kx += pull(xs, tx, "x");
        while (ty < st.ny)
            ky += pull(ys, ty, "y");
        out.stage = l + 1;
        out.samples_x = st.nx;
        out.samples_y = st.ny;
        out.estimate_x = static_cast<double>(kx) / static_cast<double>(st.nx);
        out.estimate_y = static_cast<double>(ky) / static_cast<double>(st.ny);
        const int lab = st.label(kx, ky);
        if (lab != kContinue) {
            out.accepted = lab;
            return out;
        }
    }
    return out;
}

} // namespace seqcl
