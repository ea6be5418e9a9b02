#pragma once

#include <iosfwd>

namespace seqcl {

// Exit status: 0 success, 1 infeasible / disproved / inconclusive, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Applies SEQCL_NUM_THREADS to the OpenMP runtime when set.
void apply_thread_env();

} // namespace seqcl
