#include "oracles.hpp"

#include "seqcl/limits.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace oracle {

double binom_pmf(std::int64_t n, std::int64_t k, double p)
{
    if (k < 0 || k > n)
        return 0.0;
    if (p == 0.0)
        return k == 0 ? 1.0 : 0.0;
    if (p == 1.0)
        return k == n ? 1.0 : 0.0;
    // C(n, k) p^k q^(n-k) built as a running product to stay in range
    long double v = 1.0L;
    const std::int64_t r = std::min(k, n - k);
    for (std::int64_t i = 1; i <= r; ++i)
        v = v * static_cast<long double>(n - r + i) / static_cast<long double>(i);
    v *= std::pow(static_cast<long double>(p), static_cast<long double>(k));
    v *= std::pow(1.0L - static_cast<long double>(p), static_cast<long double>(n - k));
    return static_cast<double>(v);
}

double poisson_pmf(double lambda, std::int64_t k)
{
    if (k < 0)
        return 0.0;
    if (lambda == 0.0)
        return k == 0 ? 1.0 : 0.0;
    long double v = std::exp(-static_cast<long double>(lambda));
    for (std::int64_t i = 1; i <= k; ++i)
        v = v * static_cast<long double>(lambda) / static_cast<long double>(i);
    return static_cast<double>(v);
}

double model_pmf(const seqcl::DistributionModel& m, std::int64_t n, std::int64_t k, double theta)
{
    if (m.kind == seqcl::ModelKind::bernoulli)
        return binom_pmf(n, k, theta);
    return poisson_pmf(static_cast<double>(n) * theta, k);
}

double cdf(const seqcl::DistributionModel& m, std::int64_t n, std::int64_t k, double theta)
{
    long double s = 0.0L;
    for (std::int64_t j = 0; j <= k; ++j)
        s += model_pmf(m, n, j, theta);
    return static_cast<double>(std::min(1.0L, s));
}

double sf(const seqcl::DistributionModel& m, std::int64_t n, std::int64_t k, double theta)
{
    if (m.kind == seqcl::ModelKind::bernoulli) {
        long double s = 0.0L;
        for (std::int64_t j = std::max<std::int64_t>(k, 0); j <= n; ++j)
            s += binom_pmf(n, j, theta);
        return static_cast<double>(std::min(1.0L, s));
    }
    return k <= 0 ? 1.0 : std::max(0.0, 1.0 - cdf(m, n, k - 1, theta));
}

namespace {

double log_objective(const seqcl::DistributionModel& m, double z, double theta, double rho)
{
    if (m.kind == seqcl::ModelKind::bernoulli)
        return -rho * z + std::log(1.0 - theta + theta * std::exp(rho));
    return -rho * z + theta * (std::exp(rho) - 1.0);
}

} // namespace

double chernoff_min(const seqcl::DistributionModel& m, double z, double theta)
{
    double best_rho = 0.0;
    double best = log_objective(m, z, theta, 0.0);
    for (double rho = -60.0; rho <= 60.0; rho += 0.01) {
        const double v = log_objective(m, z, theta, rho);
        if (v < best) {
            best = v;
            best_rho = rho;
        }
    }
    double a = best_rho - 0.01;
    double b = best_rho + 0.01;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a);
        const double d = a + g * (b - a);
        if (log_objective(m, z, theta, c) < log_objective(m, z, theta, d))
            b = d;
        else
            a = c;
    }
    best = std::min(best, log_objective(m, z, theta, 0.5 * (a + b)));
    return std::exp(best);
}

std::vector<int> inclusion_set(const seqcl::HypothesisDesign& d, std::int64_t n, std::int64_t k)
{
    const int m = d.hypotheses();
    const seqcl::SumStatistic st{n, k};
    std::vector<int> out;
    for (int i = 1; i <= m; ++i) {
        bool ok = true;
        if (i > 1)
            ok = seqcl::lower_limit(d.family, d.model, st, d.alpha(i - 1)) >= d.zone_lower[static_cast<std::size_t>(i - 2)];
        if (ok && i < m)
            ok = seqcl::upper_limit(d.family, d.model, st, d.beta(i)) <= d.zone_upper[static_cast<std::size_t>(i - 1)];
        if (ok)
            out.push_back(i);
    }
    return out;
}

std::vector<double> enumerate_oc(const seqcl::MultiHypPlan& plan, double theta)
{
    if (plan.design.model.kind != seqcl::ModelKind::bernoulli)
        throw std::invalid_argument("enumerate_oc handles Bernoulli plans");
    const int s = plan.stage_count();
    std::map<std::pair<int, std::int64_t>, int> memo;
    auto decide = [&](int l, std::int64_t k) {
        const auto key = std::make_pair(l, k);
        const auto it = memo.find(key);
        if (it != memo.end())
            return it->second;
        const std::int64_t n = plan.stages[static_cast<std::size_t>(l)].n;
        const auto cand = inclusion_set(plan.design, n, k);
        int d = 0;
        if (cand.size() == 1) {
            d = cand.front();
        } else if (cand.size() > 1) {
            d = plan.stages[static_cast<std::size_t>(l)].decision(k);
            if (std::find(cand.begin(), cand.end(), d) == cand.end())
                throw std::logic_error("plan tie decision outside the inclusion set");
        }
        memo[key] = d;
        return d;
    };
    std::vector<long double> acc(static_cast<std::size_t>(plan.hypotheses()), 0.0L);
    std::function<void(int, std::int64_t, long double)> walk = [&](int l, std::int64_t k, long double w) {
        const std::int64_t prev = l == 0 ? 0 : plan.stages[static_cast<std::size_t>(l - 1)].n;
        const std::int64_t delta = plan.stages[static_cast<std::size_t>(l)].n - prev;
        for (std::int64_t j = 0; j <= delta; ++j) {
            const long double wj = w * binom_pmf(delta, j, theta);
            if (wj == 0.0L)
                continue;
            const int d = decide(l, k + j);
            if (d != 0)
                acc[static_cast<std::size_t>(d - 1)] += wj;
            else if (l + 1 < s)
                walk(l + 1, k + j, wj);
        }
    };
    walk(0, 0, 1.0L);
    return {acc.begin(), acc.end()};
}

double enumerate_two_prop_reject(const seqcl::TwoPropPlan& plan, int hypothesis, double px, double py)
{
    const int s = plan.stage_count();
    long double rej = 0.0L;
    std::function<void(int, std::int64_t, std::int64_t, long double)> walk = [&](int l, std::int64_t kx,
                                                                                std::int64_t ky, long double w) {
        const auto& st = plan.stages[static_cast<std::size_t>(l)];
        const std::int64_t dx = st.nx - (l == 0 ? 0 : plan.stages[static_cast<std::size_t>(l - 1)].nx);
        const std::int64_t dy = st.ny - (l == 0 ? 0 : plan.stages[static_cast<std::size_t>(l - 1)].ny);
        for (std::int64_t jx = 0; jx <= dx; ++jx) {
            const long double wx = w * binom_pmf(dx, jx, px);
            if (wx == 0.0L)
                continue;
            for (std::int64_t jy = 0; jy <= dy; ++jy) {
                const long double wxy = wx * binom_pmf(dy, jy, py);
                if (wxy == 0.0L)
                    continue;
                const int lab = st.label(kx + jx, ky + jy);
                if (lab != seqcl::kContinue) {
                    if (lab != hypothesis)
                        rej += wxy;
                } else if (l + 1 < s) {
                    walk(l + 1, kx + jx, ky + jy, wxy);
                } else {
                    rej += wxy;  // undecided at the end counts against every hypothesis
                }
            }
        }
    };
    walk(0, 0, 0, 1.0L);
    return static_cast<double>(rej);
}

std::pair<double, double> newcombe(std::int64_t kx, std::int64_t nx, std::int64_t ky, std::int64_t ny, double delta)
{
    const double zc = boost::math::quantile(boost::math::normal(), 1.0 - delta / 2.0);
    const double c = zc * zc;
    // long double so that the roots at phat = 0 or 1 round to 0 or 1 exactly
    auto roots = [c](std::int64_t k, std::int64_t n) {
        const long double nn = static_cast<long double>(n);
        const long double p = static_cast<long double>(k) / nn;
        const long double cc = c;
        // (N + c) p^2 - (2 N phat + c) p + N phat^2 = 0
        const long double A = nn + cc;
        const long double B = -(2.0L * nn * p + cc);
        const long double C = nn * p * p;
        const long double disc = std::sqrt(std::max(0.0L, B * B - 4.0L * A * C));
        // larger root directly, smaller one from the product of roots
        const long double big = (-B + disc) / (2.0L * A);
        const long double small = big > 0.0L ? C / (A * big) : 0.0L;
        return std::make_pair(std::clamp(static_cast<double>(small), 0.0, 1.0),
                              std::clamp(static_cast<double>(big), 0.0, 1.0));
    };
    const auto [lx, ux] = roots(kx, nx);
    const auto [ly, uy] = roots(ky, ny);
    const double d = static_cast<double>(kx) / static_cast<double>(nx) - static_cast<double>(ky) / static_cast<double>(ny);
    const double lo = d - zc * std::sqrt(lx * (1 - lx) / static_cast<double>(nx) + uy * (1 - uy) / static_cast<double>(ny));
    const double hi = d + zc * std::sqrt(ux * (1 - ux) / static_cast<double>(nx) + ly * (1 - ly) / static_cast<double>(ny));
    return {lo, hi};
}

int two_prop_label(const seqcl::TwoPropDesign& d, std::int64_t nx, std::int64_t ny, std::int64_t kx, std::int64_t ky)
{
    const int m = d.hypotheses();
    std::vector<int> hits;
    for (int i = 1; i <= m; ++i) {
        bool ok = true;
        if (i > 1)
            ok = newcombe(kx, nx, ky, ny, d.alpha(i - 1)).first >= d.zone_lower[static_cast<std::size_t>(i - 2)];
        if (ok && i < m)
            ok = newcombe(kx, nx, ky, ny, d.beta(i)).second <= d.zone_upper[static_cast<std::size_t>(i - 1)];
        if (ok)
            hits.push_back(i);
    }
    if (hits.empty())
        return seqcl::kContinue;
    if (hits.size() >= 2 && hits[1] == hits[0] + 1) {
        const int i = hits[0];
        const double diff = static_cast<double>(kx) / static_cast<double>(nx) - static_cast<double>(ky) / static_cast<double>(ny);
        const double mid = 0.5 * (d.zone_lower[static_cast<std::size_t>(i - 1)] + d.zone_upper[static_cast<std::size_t>(i - 1)]);
        return diff <= mid ? i - 1 : i;
    }
    return hits.front() - 1;
}

} // namespace oracle
