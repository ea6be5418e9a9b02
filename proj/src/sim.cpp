#include "seqcl/sim.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace seqcl {

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial)
{
    // splitmix64 of the seed, mixed again with the trial index
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ (trial * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

RandomSource::RandomSource(const DistributionModel& model, double theta, std::uint64_t seed, std::uint64_t trial)
    : model_(model), theta_(theta), rng_(substream_seed(seed, trial)),
      poisson_(model.kind == ModelKind::poisson && theta > 0.0 ? theta : 1.0)
{
    check_theta(model, theta);
}

std::optional<std::int64_t> RandomSource::next()
{
    ++draws_;
    if (model_.kind == ModelKind::bernoulli) {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return u < theta_ ? 1 : 0;
    }
    if (theta_ == 0.0)
        return 0;
    return poisson_(rng_);
}

SimRunner plan_runner(const MultiHypPlan& plan, std::string name)
{
    SimRunner r;
    r.name = std::move(name);
    r.model = plan.design.model;
    r.hypotheses = plan.hypotheses();
    r.n_max = plan.n_max();
    r.run = [plan](SampleSource& src) { return run_plan(plan, src); };
    return r;
}

SimRunner sprt_runner(const SprtSpec& spec, std::string name)
{
    spec.validate();
    SimRunner r;
    r.name = std::move(name);
    r.model = spec.model;
    r.hypotheses = 2;
    r.n_max = spec.cap > 0 ? spec.cap : -1;
    r.run = [spec](SampleSource& src) { return run_sprt(spec, src); };
    return r;
}

std::int64_t nearest_rank(const std::vector<std::int64_t>& sorted, double q)
{
    if (sorted.empty())
        throw DomainError("percentile of an empty sample");
    if (!(q > 0.0 && q <= 1.0))
        throw DomainError("percentile level outside (0, 1]");
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

namespace {

void check_trials(std::int64_t trials)
{
    if (trials < 1)
        throw DomainError("trials must be at least 1");
}

SimReport reduce(const SimRunner& runner, double theta, std::uint64_t seed, const std::vector<TestOutcome>& outs)
{
    SimReport rep;
    rep.runner = runner.name;
    rep.theta = theta;
    rep.trials = static_cast<std::int64_t>(outs.size());
    rep.seed = seed;
    const auto t = static_cast<double>(outs.size());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(runner.hypotheses), 0);
    std::int64_t undecided = 0;
    std::int64_t forced = 0;
    CompensatedSum sum;
    CompensatedSum sq;
    std::vector<std::int64_t> sizes;
    sizes.reserve(outs.size());
    for (const auto& o : outs) {
        if (o.accepted >= 0 && o.accepted < runner.hypotheses)
            ++counts[static_cast<std::size_t>(o.accepted)];
        else
            ++undecided;
        forced += o.forced ? 1 : 0;
        const auto n = static_cast<double>(o.samples);
        sum.add(n);
        sq.add(n * n);
        sizes.push_back(o.samples);
    }
    for (auto c : counts) {
        const double f = static_cast<double>(c) / t;
        rep.accept_freq.push_back(f);
        rep.accept_se.push_back(std::sqrt(f * (1.0 - f) / t));
    }
    rep.undecided_freq = static_cast<double>(undecided) / t;
    rep.forced_freq = static_cast<double>(forced) / t;
    rep.asn = sum.value() / t;
    const double var = std::max(0.0, sq.value() / t - rep.asn * rep.asn);
    rep.asn_se = std::sqrt(var / t);
    std::sort(sizes.begin(), sizes.end());
    rep.p50 = nearest_rank(sizes, 0.50);
    rep.p90 = nearest_rank(sizes, 0.90);
    rep.p99 = nearest_rank(sizes, 0.99);
    rep.max_samples = sizes.back();
    return rep;
}

TestOutcome one_trial(const SimRunner& runner, double theta, std::uint64_t seed, std::int64_t i)
{
    RandomSource src(runner.model, theta, seed, static_cast<std::uint64_t>(i));
    return runner.run(src);
}

} // namespace

SimReport simulate(const SimRunner& runner, double theta, std::int64_t trials, std::uint64_t seed)
{
    check_trials(trials);
    check_theta(runner.model, theta);
    std::vector<TestOutcome> outs(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < trials; ++i)
        outs[static_cast<std::size_t>(i)] = one_trial(runner, theta, seed, i);
    return reduce(runner, theta, seed, outs);
}

SimReport simulate_serial(const SimRunner& runner, double theta, std::int64_t trials, std::uint64_t seed)
{
    check_trials(trials);
    check_theta(runner.model, theta);
    std::vector<TestOutcome> outs(static_cast<std::size_t>(trials));
    for (std::int64_t i = 0; i < trials; ++i)
        outs[static_cast<std::size_t>(i)] = one_trial(runner, theta, seed, i);
    return reduce(runner, theta, seed, outs);
}

std::vector<SimReport> compare(const std::vector<SimRunner>& runners, const std::vector<double>& grid,
                               std::int64_t trials, std::uint64_t seed)
{
    std::vector<SimReport> out;
    for (double theta : grid)
        for (const auto& r : runners)
            out.push_back(simulate(r, theta, trials, seed));
    return out;
}

void write_sim_csv(std::ostream& os, const std::vector<SimReport>& reports)
{
    std::size_t m = 0;
    for (const auto& r : reports)
        m = std::max(m, r.accept_freq.size());
    const std::uint64_t seed = reports.empty() ? 0 : reports.front().seed;
    const std::int64_t trials = reports.empty() ? 0 : reports.front().trials;
    os << "# seed=" << seed << ",trials=" << trials << '\n';
    os << "runner,theta,trials,asn,asn_se,p50,p90,p99,max_samples,forced_freq,undecided_freq";
    for (std::size_t i = 0; i < m; ++i)
        os << ",accept_freq_" << i;
    for (std::size_t i = 0; i < m; ++i)
        os << ",accept_se_" << i;
    os << '\n';
    for (const auto& r : reports) {
        os << r.runner << ',' << format_double(r.theta) << ',' << r.trials << ',' << format_double(r.asn) << ','
           << format_double(r.asn_se) << ',' << r.p50 << ',' << r.p90 << ',' << r.p99 << ',' << r.max_samples << ','
           << format_double(r.forced_freq) << ',' << format_double(r.undecided_freq);
        for (std::size_t i = 0; i < m; ++i)
            os << ',' << (i < r.accept_freq.size() ? format_double(r.accept_freq[i]) : "");
        for (std::size_t i = 0; i < m; ++i)
            os << ',' << (i < r.accept_se.size() ? format_double(r.accept_se[i]) : "");
        os << '\n';
    }
}

} // namespace seqcl
