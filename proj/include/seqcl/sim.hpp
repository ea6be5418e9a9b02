#pragma once

#include "seqcl/models.hpp"
#include "seqcl/plans.hpp"
#include "seqcl/sprt.hpp"
#include "seqcl/stream.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace seqcl {

// Substream for one trial: the generator is seeded from (seed, trial) alone, so a
// trial sees the same observations whatever thread runs it.
class RandomSource final : public SampleSource {
public:
    RandomSource(const DistributionModel& model, double theta, std::uint64_t seed, std::uint64_t trial);

    std::optional<std::int64_t> next() override;
    std::int64_t draws() const { return draws_; }

private:
    DistributionModel model_;
    double theta_;
    std::mt19937_64 rng_;
    std::poisson_distribution<std::int64_t> poisson_;
    std::int64_t draws_ = 0;
};

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial);

struct SimRunner {
    std::string name;
    DistributionModel model;
    int hypotheses = 2;
    std::int64_t n_max = -1;  // -1 when unbounded
    std::function<TestOutcome(SampleSource&)> run;
};

SimRunner plan_runner(const MultiHypPlan& plan, std::string name = "plan");
SimRunner sprt_runner(const SprtSpec& spec, std::string name = "sprt");

struct SimReport {
    std::string runner;
    double theta = 0.0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<double> accept_freq;  // per hypothesis
    std::vector<double> accept_se;    // sqrt(f (1 - f) / trials)
    double undecided_freq = 0.0;
    double forced_freq = 0.0;
    double asn = 0.0;
    double asn_se = 0.0;
    std::int64_t p50 = 0;  // nearest-rank percentiles of the stopping time
    std::int64_t p90 = 0;
    std::int64_t p99 = 0;
    std::int64_t max_samples = 0;
};

// Trials run in parallel; per-trial results are reduced in index order.
SimReport simulate(const SimRunner& runner, double theta, std::int64_t trials, std::uint64_t seed);
SimReport simulate_serial(const SimRunner& runner, double theta, std::int64_t trials, std::uint64_t seed);

// Nearest-rank percentile of sorted values, q in (0, 1].
std::int64_t nearest_rank(const std::vector<std::int64_t>& sorted, double q);

// Every runner sees the same substreams (common random numbers) at each theta.
std::vector<SimReport> compare(const std::vector<SimRunner>& runners, const std::vector<double>& grid,
                               std::int64_t trials, std::uint64_t seed);

// "# seed=...,trials=..." line, then
// runner,theta,trials,asn,asn_se,p50,p90,p99,max_samples,forced_freq,undecided_freq,accept_freq_i,accept_se_i
void write_sim_csv(std::ostream& os, const std::vector<SimReport>& reports);

} // namespace seqcl
