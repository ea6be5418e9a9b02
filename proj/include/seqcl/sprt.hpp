#pragma once

#include "seqcl/models.hpp"
#include "seqcl/plans.hpp"
#include "seqcl/stream.hpp"

#include <cstdint>

namespace seqcl {

// Wald's SPRT of H_0: theta = theta0 against H_1: theta = theta1 (theta0 < theta1)
// with boundaries A = (1 - beta) / alpha and B = beta / (1 - alpha).
struct SprtSpec {
    DistributionModel model;
    double theta0 = 0.0;
    double theta1 = 0.0;
    double alpha = 0.05;
    double beta = 0.05;
    std::int64_t cap = 0;  // 0 = no cap

    double log_a() const;
    double log_b() const;
    void validate() const;
    // Log-likelihood ratio of theta1 against theta0 after n samples with sum k.
    double llr(std::int64_t n, std::int64_t k) const;
};

// accepted = 0 (H_0) or 1 (H_1); stage = samples. At the cap the sign of the
// statistic decides (H_0 on ties) and forced is set.
TestOutcome run_sprt(const SprtSpec& spec, SampleSource& source);

struct SprtApprox {
    double oc = 0.0;   // approximate Pr{accept H_0 | theta}
    double asn = 0.0;  // approximate expected sample number
    double h = 0.0;    // nonzero root of E exp(h Z) = 1 (0 at the singular point)
};

// Wald's approximations, ignoring overshoot and any cap.
SprtApprox sprt_oc_asn(const SprtSpec& spec, double theta);

} // namespace seqcl
