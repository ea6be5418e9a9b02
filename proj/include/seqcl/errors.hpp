#pragma once

#include <stdexcept>
#include <string>

namespace seqcl {

// Argument outside the parameter space, support, or risk range of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// No plan/sample size/tuning coefficient satisfies the requested constraints.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or exhausted input (sample streams, documents).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace seqcl
