#include "oracles.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/two_prop.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace seqcl;

namespace {

TwoPropDesign symmetric(double w, double risk, double zeta)
{
    TwoPropDesign d;
    d.zone_lower = {-w};
    d.zone_upper = {w};
    d.risks = {risk, risk};
    d.zeta = zeta;
    d.stages = 2;
    return d;
}

double binom_tail_outside(std::int64_t n, double p, std::int64_t lo, std::int64_t hi)
{
    double s = 0.0;
    for (std::int64_t k = 0; k <= n; ++k)
        if (k < lo || k > hi)
            s += oracle::binom_pmf(n, k, p);
    return s;
}

} // namespace

TEST_CASE("Newcombe limits")
{
    for (int n : {5, 12}) {
        for (int k = 0; k <= n; ++k) {
            const double p = static_cast<double>(k) / n;
            const auto [lo, hi] = newcombe_limits(p, p, n, n, 0.1);
            CHECK(lo == doctest::Approx(-hi).epsilon(1e-14));
        }
    }
    const auto ref = oracle::newcombe(10, 10, 0, 10, 0.05);
    const auto got = newcombe_limits(1.0, 0.0, 10, 10, 0.05);
    CHECK(got.first == doctest::Approx(ref.first).epsilon(1e-12));
    CHECK(got.second == doctest::Approx(ref.second).epsilon(1e-12));
    CHECK(got.second <= 1.0);
    const auto collapsed = newcombe_limits(0.7, 0.2, 10, 10, 1.0 - 1e-15);
    CHECK(collapsed.first == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(collapsed.second == doctest::Approx(0.5).epsilon(1e-6));

    for (int nx : {4, 9})
        for (int ny : {3, 11})
            for (int kx = 0; kx <= nx; ++kx)
                for (int ky = 0; ky <= ny; ++ky) {
                    const double px = static_cast<double>(kx) / nx;
                    const double py = static_cast<double>(ky) / ny;
                    const auto [lo, hi] = newcombe_limits(px, py, nx, ny, 0.05);
                    const auto o = oracle::newcombe(kx, nx, ky, ny, 0.05);
                    CHECK(lo == doctest::Approx(o.first).epsilon(1e-12));
                    CHECK(hi == doctest::Approx(o.second).epsilon(1e-12));
                    CHECK(lo <= px - py + 1e-15);
                    CHECK(hi >= px - py - 1e-15);
                }
}

TEST_CASE("truncation bounds")
{
    CHECK(truncation_bounds(0.0, 50, 0.01).first == 0.0);
    CHECK(truncation_bounds(1.0, 50, 0.01).second == 1.0);
    const auto t = truncation_bounds(0.5, 100, 0.01);
    CHECK(t.first == doctest::Approx(0.34));
    CHECK(t.second == doctest::Approx(0.66));
    // independent arithmetic
    const double L = std::log(2.0 / 0.01);
    const double r = std::sqrt(1.0 + 18.0 * 100 * 0.25 / L);
    const double den = 2.0 / 300.0 + 3.0 / L;
    CHECK(t.first == std::ceil(50.0 + (0.0 - r) / den) / 100.0);
    const auto s = truncation_sums(0.5, 100, 0.01);
    CHECK(binom_tail_outside(100, 0.5, s.first, s.second) <= 0.01);

    for (int n : {10, 37, 120})
        for (double th = 0.0; th <= 1.0 + 1e-12; th += 0.05)
            for (double eta : {0.1, 0.01}) {
                const auto w = truncation_sums(std::min(th, 1.0), n, eta);
                CHECK(binom_tail_outside(n, std::min(th, 1.0), w.first, w.second) <= eta);
            }
    const auto full = truncation_sums(0.3, 20, 0.0);
    CHECK(full.first == 0);
    CHECK(full.second == 20);
}

TEST_CASE("plan construction")
{
    const auto wide = symmetric(0.6, 0.1, 0.5);
    const auto sw = two_prop_schedule(wide);
    CHECK(sw.back() < 10);

    const auto d = symmetric(0.1, 0.05, 0.5);
    // oracle: scan grid nonemptiness and full labelling
    std::int64_t ns = 0;
    for (std::int64_t n = 1; n < 400 && ns == 0; ++n) {
        bool found = false;
        for (std::int64_t kx = 0; kx <= n && !found; ++kx)
            for (std::int64_t ky = 0; ky <= n && !found; ++ky) {
                const double l = oracle::newcombe(kx, n, ky, n, d.alpha(1)).first;
                const double u = oracle::newcombe(kx, n, ky, n, d.beta(1)).second;
                found = l >= -0.1 && u <= 0.1;
            }
        if (!found)
            continue;
        for (std::int64_t m = n;; ++m) {
            bool closed = true;
            for (std::int64_t kx = 0; kx <= m && closed; ++kx)
                for (std::int64_t ky = 0; ky <= m && closed; ++ky)
                    closed = oracle::two_prop_label(d, m, m, kx, ky) != kContinue;
            if (closed) {
                ns = m;
                break;
            }
        }
    }
    CHECK(two_prop_last_size(d) == ns);

    const auto plan = build_two_prop_plan(symmetric(0.4, 0.1, 0.5));
    CHECK(plan.stages.back().closed());
    for (const auto& st : plan.stages)
        for (std::int64_t kx = 0; kx <= st.nx; ++kx)
            for (std::int64_t ky = 0; ky <= st.ny; ++ky)
                CHECK(st.label(kx, ky) == oracle::two_prop_label(plan.design, st.nx, st.ny, kx, ky));

    TwoPropDesign three;
    three.zone_lower = {-0.6, 0.2};
    three.zone_upper = {-0.2, 0.6};
    three.risks = {0.2, 0.2, 0.2};
    three.zeta = 0.5;
    const auto p3 = build_two_prop_plan(three);
    for (const auto& st : p3.stages)
        for (std::int64_t kx = 0; kx <= st.nx; ++kx)
            for (std::int64_t ky = 0; ky <= st.ny; ++ky)
                CHECK(st.label(kx, ky) == oracle::two_prop_label(three, st.nx, st.ny, kx, ky));

    auto linked = symmetric(0.4, 0.1, 0.5);
    linked.link = {1.5, 1};
    const auto pl = build_two_prop_plan(linked);
    for (const auto& st : pl.stages)
        CHECK(st.ny == static_cast<std::int64_t>(std::ceil(1.5 * st.nx)) + 1);

    auto bad = symmetric(0.1, 0.05, 0.5);
    bad.n_limit = 20;
    CHECK_THROWS_AS(build_two_prop_plan(bad), InfeasibleError);
}

TEST_CASE("rejection probability bounds")
{
    const auto plan = build_two_prop_plan(symmetric(0.4, 0.1, 0.5));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double px = u(rng);
        const double py = u(rng);
        for (int i = 0; i < 2; ++i) {
            const double exact = exact_reject_prob(plan, i, px, py);
            CHECK(exact == doctest::Approx(oracle::enumerate_two_prop_reject(plan, i, px, py)).epsilon(1e-12));
            const auto pt = rejection_prob_bounds(plan, i, {px, px, py, py}, 0.0);
            CHECK(pt.lower == doctest::Approx(exact).epsilon(1e-12));
            CHECK(pt.upper == doctest::Approx(exact).epsilon(1e-12));
            const auto trunc = rejection_prob_bounds(plan, i, {px, px, py, py}, 0.01);
            CHECK(trunc.lower <= exact + 1e-14);
            CHECK(trunc.upper >= exact - 1e-14);
            CHECK(trunc.upper - exact <= 2 * 2 * 0.01 + 1e-12);
        }
        const auto acc = exact_accept_probs(plan, px, py);
        CHECK(acc[0] + acc[1] == doctest::Approx(1.0).epsilon(1e-12));
    }

    // full square and sub-rectangles: sandwich at random points, and nesting
    const Rectangle outer{0.1, 0.6, 0.2, 0.5};
    const Rectangle inner{0.2, 0.4, 0.25, 0.35};
    for (int i = 0; i < 2; ++i) {
        const auto bo = rejection_prob_bounds(plan, i, outer, 0.01);
        const auto bi = rejection_prob_bounds(plan, i, inner, 0.01);
        CHECK(bi.upper <= bo.upper + 1e-14);
        CHECK(bi.lower >= bo.lower - 1e-14);
        const auto full = rejection_prob_bounds(plan, i, {0, 1, 0, 1}, 0.01);
        for (int rep = 0; rep < 30; ++rep) {
            const double px = u(rng);
            const double py = u(rng);
            const double e = exact_reject_prob(plan, i, px, py);
            CHECK(e <= full.upper + 1e-14);
            CHECK(e >= full.lower - 1e-14);
        }
    }
}

TEST_CASE("certification")
{
    const auto plan = build_two_prop_plan(symmetric(0.4, 0.1, 0.5));
    const auto easy = certify_risk(plan, 0, 1.0);
    CHECK(easy.verdict == Verdict::proved);
    CHECK(easy.explored == 1);
    const auto zero = certify_risk(plan, 0, 0.0);
    CHECK(zero.verdict == Verdict::disproved);

    // agreement with a grid scan of the zone, with margins either side
    for (int i = 0; i < 2; ++i) {
        const auto zone = two_prop_zone(plan.design, i);
        double worst = 0.0;
        for (int a = 0; a < 120; ++a)
            for (int b = 0; b < 120; ++b) {
                const double px = a / 119.0;
                const double py = b / 119.0;
                if (px - py < zone.first || px - py > zone.second)
                    continue;
                worst = std::max(worst, exact_reject_prob(plan, i, px, py));
            }
        CHECK(certify_risk(plan, i, worst * 1.25).verdict == Verdict::proved);
        const auto low = certify_risk(plan, i, worst * 0.8);
        CHECK(low.verdict == Verdict::disproved);
        CHECK(low.best_lower > worst * 0.8);
    }

    CertifyOptions tight;
    tight.budget = 3;
    CHECK(certify_risk(plan, 0, 0.5 * plan.design.risks[0] * 0 + 1e-6, tight).verdict != Verdict::proved);
}

TEST_CASE("tuning")
{
    auto d = symmetric(0.5, 0.1, 0.5);
    CertifyOptions o;
    o.keep_trace = false;
    const auto loose = tune_two_prop(d, {0.99, 0.99}, 1e-2, o);
    CHECK(loose.zeta == doctest::Approx(d.zeta_max() * (1 - 1e-2)));
    const auto res = tune_two_prop(d, {}, 2e-2, o);
    for (const auto& c : res.report)
        CHECK(c.verdict == Verdict::proved);
    CHECK(res.zeta < res.hi);
}

TEST_CASE("running two-prop plans")
{
    const auto plan = build_two_prop_plan(symmetric(0.4, 0.1, 0.5));
    const auto n = plan.stages.back().nx;
    RecordedSource ones(std::vector<std::int64_t>(n, 1));
    RecordedSource zeros(std::vector<std::int64_t>(plan.stages.back().ny, 0));
    CHECK(run_two_prop(plan, ones, zeros).accepted == 1);
    RecordedSource ones2(std::vector<std::int64_t>(plan.stages.back().ny, 1));
    RecordedSource zeros2(std::vector<std::int64_t>(n, 0));
    CHECK(run_two_prop(plan, zeros2, ones2).accepted == 0);

    std::mt19937_64 rng(8);
    std::bernoulli_distribution cx(0.6);
    std::bernoulli_distribution cy(0.4);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::int64_t> xs;
        std::vector<std::int64_t> ys;
        for (std::int64_t i = 0; i < plan.stages.back().nx; ++i)
            xs.push_back(cx(rng));
        for (std::int64_t i = 0; i < plan.stages.back().ny; ++i)
            ys.push_back(cy(rng));
        RecordedSource a(xs);
        RecordedSource b(ys);
        const auto out = run_two_prop(plan, a, b);
        // replay through the labels from the oracle
        int expect = -1;
        for (const auto& st : plan.stages) {
            std::int64_t kx = 0;
            std::int64_t ky = 0;
            for (std::int64_t i = 0; i < st.nx; ++i)
                kx += xs[static_cast<std::size_t>(i)];
            for (std::int64_t i = 0; i < st.ny; ++i)
                ky += ys[static_cast<std::size_t>(i)];
            expect = oracle::two_prop_label(plan.design, st.nx, st.ny, kx, ky);
            if (expect != kContinue)
                break;
        }
        CHECK(out.accepted == expect);
    }
    RecordedSource few(std::vector<std::int64_t>(0));
    RecordedSource few2(std::vector<std::int64_t>(0));
    CHECK_THROWS_AS(run_two_prop(plan, few, few2), InputError);
}
