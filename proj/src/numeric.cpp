#include "seqcl/numeric.hpp"

#include <boost/math/distributions/normal.hpp>

#include <charconv>
#include <math.h>
#include <stdexcept>
#include <system_error>

namespace seqcl {

double log_factorial(std::int64_t n)
{
    if (n < 0)
        throw std::domain_error("log_factorial: negative argument");
    if (n < 2)
        return 0.0;
    int sign = 0;
    return ::lgamma_r(static_cast<double>(n) + 1.0, &sign);
}

double log_choose(std::int64_t n, std::int64_t k)
{
    if (k < 0 || k > n)
        return -kInf;
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double normal_quantile(double p)
{
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, p);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text)
{
    if (text == "inf" || text == "+inf")
        return kInf;
    if (text == "-inf")
        return -kInf;
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::invalid_argument("not a number: '" + text + "'");
    return value;
}

} // namespace seqcl
