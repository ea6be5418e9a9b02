#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

namespace seqcl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ln(n!) without touching the global signgam.
double log_factorial(std::int64_t n);

// ln C(n, k); -inf outside 0 <= k <= n.
double log_choose(std::int64_t n, std::int64_t k);

// x * ln(y) with the convention 0 * ln(0) = 0.
inline double xlogy(double x, double y)
{
    if (x == 0.0)
        return 0.0;
    return x * std::log(y);
}

// Standard normal quantile and cdf.
double normal_quantile(double p);
double normal_cdf(double x);

// Narrow [lo, hi] where pred(lo) holds and pred(hi) does not until the two
// ends are adjacent in floating point (or within abs_tol). Returns {lo, hi}.
template <class Pred>
std::pair<double, double> bisect_boundary(double lo, double hi, Pred&& pred, double abs_tol = 0.0)
{
    for (int it = 0; it < 2200; ++it) {
        if (hi - lo <= abs_tol)
            break;
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi)
            break;
        if (pred(mid))
            lo = mid;
        else
            hi = mid;
    }
    return {lo, hi};
}

// Shortest decimal string that round-trips to the same double; "inf"/"-inf"/"nan"
// for non-finite values.
std::string format_double(double x);

// Parses format_double output (including "inf"/"-inf").
double parse_double(const std::string& text);

} // namespace seqcl
