#pragma once

#include "seqcl/plans.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace seqcl {

// Called once per (stage, sum) cell where the plan stops, with the probability of
// reaching that cell and stopping there. stage is 0-based, decision is D in 1..m.
using StopVisitor = std::function<void(int stage, std::int64_t k, int decision, double mass)>;

// Default per-stage truncation of unbounded (Poisson) increments.
inline constexpr double kDefaultTruncation = 1e-12;

// Forward pass over the running sum. Returns the probability mass dropped by
// support truncation (0 for Bernoulli). Mass that is still undecided after the
// last stage is reported to the visitor with decision 0.
double propagate(const MultiHypPlan& plan, double theta, const StopVisitor& visit, double eps = kDefaultTruncation);

struct OCPoint {
    double theta = 0.0;
    std::vector<double> accept;      // Pr{accept H_i | theta}, i = 0 .. m-1
    std::vector<double> stage_prob;  // Pr{stop at stage l | theta}
    double asn = 0.0;
    double undecided = 0.0;          // mass left after the last stage (0 for closed plans)
    double truncation = 0.0;         // mass dropped by truncation; true values lie within it
};

struct OCReport {
    int hypotheses = 0;
    std::vector<std::int64_t> sizes;
    std::vector<OCPoint> points;
};

OCPoint oc_point(const MultiHypPlan& plan, double theta, double eps = kDefaultTruncation);

// Parallel over the grid; oc_curve_serial is the single-threaded reference.
OCReport oc_curve(const MultiHypPlan& plan, const std::vector<double>& grid, double eps = kDefaultTruncation);
OCReport oc_curve_serial(const MultiHypPlan& plan, const std::vector<double>& grid,
                         double eps = kDefaultTruncation);

// theta, accept_prob_0..m-1, asn, stage_prob_1..s, truncation_mass
void write_oc_csv(std::ostream& os, const OCReport& report);

// lo:hi:step grid, inclusive of hi up to rounding.
std::vector<double> parse_grid(const std::string& text);
std::vector<double> make_grid(double lo, double hi, double step);

struct RiskCheck {
    int hypothesis = 0;
    double theta_low = 0.0;   // zone endpoints where the risk is evaluated
    double theta_high = 0.0;
    double risk = 0.0;        // exact bound on Pr{reject H_i | theta in the zone}
    double requirement = 0.0;
    bool ok = false;
    double cap = 0.0;         // s (max_{j>i} alpha_j + max_{j<=i} beta_j)
};

struct RiskReport {
    bool satisfied = false;
    std::vector<RiskCheck> checks;
    int worst = 0;                    // index into checks with the largest risk / requirement
    double cap_zeta_alpha = 0.0;      // s * zeta * delta_0
    double cap_zeta_beta = 0.0;       // s * zeta * delta_{m-1}
    std::vector<double> accept_caps;  // s * alpha_i for H_i below theta'_i (i >= 1); 0 for i = 0
    std::vector<double> reject_caps;  // s * beta_{i+1} for H_i above theta''_{i+1} (i <= m-2)
    double worst_ratio() const;
};

// Exact risks at the zone endpoints. H_0 and H_{m-1}: Pr{reject | theta'_1} and
// Pr{reject | theta''_{m-1}} (monotone on their zones). Middle zone [a, b]:
//   Pr{reject H_i, est <= a | a} + Pr{reject H_i, est >= b | b}.
// Truncated mass is added to every risk. requirement empty = the design's risks.
RiskReport verify_risk(const MultiHypPlan& plan, const std::vector<double>& requirement = {},
                       double eps = kDefaultTruncation);

} // namespace seqcl
