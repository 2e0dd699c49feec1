#pragma once

#include "drift/walk.hpp"

#include <cstdint>

namespace drift {

// Chronological loop erasure.  Equivalent to repeatedly excising the cycle
// between a vertex's first revisit and its last occurrence, but runs in one
// last-exit pass.  Throws std::domain_error on an empty path.
Path loop_erase(const Path& path);

// True when LE(path) equals LE(prefix up to the unique visit of `level`)
// joined with LE(suffix from that visit), the junction vertex counted once.
// Levels the path does not visit exactly once are vacuously true.
bool juxtapose_check(const Path& path, std::int64_t level);

} // namespace drift
