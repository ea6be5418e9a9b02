#include "seqcl/sprt.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seqcl {

namespace {

// Per-sample increment Z = z_slope * x + z_const.
struct Increment {
    double slope;
    double constant;  // Bernoulli: value at x = 0; Poisson: -(theta1 - theta0)
};

Increment increment_of(const SprtSpec& s)
{
    if (s.model.kind == ModelKind::bernoulli) {
        const double at1 = std::log(s.theta1 / s.theta0);
        const double at0 = std::log((1.0 - s.theta1) / (1.0 - s.theta0));
        return {at1 - at0, at0};
    }
    return {std::log(s.theta1 / s.theta0), -(s.theta1 - s.theta0)};
}

// ln E_theta exp(h Z)
double log_mgf(const SprtSpec& s, double theta, double h)
{
    const Increment inc = increment_of(s);
    if (s.model.kind == ModelKind::bernoulli) {
        const double a = std::log(theta) + h * (inc.slope + inc.constant);
        const double b = std::log1p(-theta) + h * inc.constant;
        const double top = std::max(a, b);
        return top + std::log(std::exp(a - top) + std::exp(b - top));
    }
    return theta * std::expm1(h * inc.slope) + h * inc.constant;
}

} // namespace

double SprtSpec::log_a() const
{
    return std::log((1.0 - beta) / alpha);
}

double SprtSpec::log_b() const
{
    return std::log(beta / (1.0 - alpha));
}

void SprtSpec::validate() const
{
    if (!(model.in_parameter_space(theta0) && model.in_parameter_space(theta1) && theta0 < theta1))
        throw DomainError("SPRT needs theta0 < theta1 inside the parameter space");
    if (!(alpha > 0.0 && beta > 0.0 && alpha + beta < 1.0))
        throw DomainError("SPRT needs alpha, beta > 0 with alpha + beta < 1");
    if (cap < 0)
        throw DomainError("SPRT cap must be non-negative");
}

double SprtSpec::llr(std::int64_t n, std::int64_t k) const
{
    const Increment inc = increment_of(*this);
    return static_cast<double>(k) * inc.slope + static_cast<double>(n) * inc.constant;
}

TestOutcome run_sprt(const SprtSpec& spec, SampleSource& source)
{
    spec.validate();
    const double la = spec.log_a();
    const double lb = spec.log_b();
    TestOutcome out;
    std::int64_t n = 0;
    std::int64_t k = 0;
    for (;;) {
        const auto x = source.next();
        if (!x)
            throw InputError("stream exhausted after " + std::to_string(n) + " observations");
        check_observation(spec.model, *x);
        ++n;
        k += *x;
        const double z = spec.llr(n, k);
        int decision = -1;
        if (z >= la)
            decision = 1;
        else if (z <= lb)
            decision = 0;
        else if (spec.cap > 0 && n >= spec.cap) {
            decision = z > 0.0 ? 1 : 0;
            out.forced = true;
        }
        if (decision >= 0) {
            out.stage = n > std::int64_t{2147483647} ? 2147483647 : static_cast<int>(n);
            out.samples = n;
            out.accepted = decision;
            out.estimate = static_cast<double>(k) / static_cast<double>(n);
            return out;
        }
    }
}

SprtApprox sprt_oc_asn(const SprtSpec& spec, double theta)
{
    spec.validate();
    check_theta(spec.model, theta);
    const Increment inc = increment_of(spec);
    const double la = spec.log_a();
    const double lb = spec.log_b();
    const bool bern = spec.model.kind == ModelKind::bernoulli;
    const double mean = theta * inc.slope + inc.constant;
    SprtApprox r;

    // Degenerate increments: Z is a constant.
    const bool constant = bern ? (theta == 0.0 || theta == 1.0) : theta == 0.0;
    if (constant) {
        r.oc = mean < 0.0 ? 1.0 : 0.0;
        r.asn = (mean < 0.0 ? lb : la) / mean;
        r.h = mean < 0.0 ? kInf : -kInf;
        return r;
    }
    const double second = bern ? theta * (inc.slope + inc.constant) * (inc.slope + inc.constant)
                                     + (1.0 - theta) * inc.constant * inc.constant
                               : theta * inc.slope * inc.slope + mean * mean;
    const double scale = std::sqrt(second);
    if (std::fabs(mean) <= 1e-12 * scale) {
        r.oc = la / (la - lb);
        r.asn = -la * lb / second;
        return r;
    }

    // psi(h) = ln E exp(hZ) is convex with psi(0) = 0 and psi'(0) = mean; the
    // other root lies on the side opposite to the sign of the mean.
    const double dir = mean < 0.0 ? 1.0 : -1.0;
    double far = dir / scale;
    for (int it = 0; log_mgf(spec, theta, far) <= 0.0; ++it) {
        far *= 2.0;
        if (it > 200)
            throw DomainError("no nonzero root for the Wald approximation");
    }
    double near = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (near + far);
        if (mid == near || mid == far)
            break;
        if (log_mgf(spec, theta, mid) <= 0.0)
            near = mid;
        else
            far = mid;
    }
    const double h = 0.5 * (near + far);
    r.h = h;
    if (std::fabs(h) < 1e-9) {
        r.oc = la / (la - lb);
    } else if (h > 0.0) {
        // (1 - e^{-h lnA}) / (1 - e^{h (lnB - lnA)})
        r.oc = -std::expm1(-h * la) / -std::expm1(h * (lb - la));
    } else {
        // (e^{h (lnA - lnB)} - e^{-h lnB}) / (e^{h (lnA - lnB)} - 1)
        r.oc = (std::exp(h * (la - lb)) - std::exp(-h * lb)) / std::expm1(h * (la - lb));
    }
    r.asn = (r.oc * lb + (1.0 - r.oc) * la) / mean;
    return r;
}

} // namespace seqcl
