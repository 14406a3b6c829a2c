#pragma once

#include <string>

#include "gmssl/affinity.hpp"

namespace gmssl {

// Standalone matching instance text format:
//   line 1: N |Es| |Et|
//   N lines of N c_v values (row-major)
//   one "si sj ti tj value" line per (s-edge, t-edge) pair, canonical si<sj,
//   ti<tj. Pairs omitted from the file default to 0. The value applies to the
//   orientation si->ti, sj->tj; a crossed match contributes the negated value.
AffinitySystem read_instance(const std::string& path);
void write_instance(const AffinitySystem& sys, const std::string& path);

}  // namespace gmssl
