#include "drift/loop_erase.hpp"

#include <stdexcept>
#include <unordered_map>

namespace drift {

Path loop_erase(const Path& path) {
    if (path.empty()) throw std::domain_error("loop_erase: empty path");
    std::unordered_map<Vertex, std::size_t, VertexHash> last_seen;
    last_seen.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) last_seen[path[i]] = i;

    Path out;
    std::size_t i = 0;
    while (i < path.size()) {
        out.push_back(path[i]);
        i = last_seen[path[i]] + 1;  // skip straight past the final revisit
    }
    return out;
}

bool juxtapose_check(const Path& path, std::int64_t level) {
    if (path.empty()) throw std::domain_error("juxtapose_check: empty path");
    std::size_t hits = 0, at = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i].n == level) {
            ++hits;
            at = i;
        }
    }
    if (hits != 1) return true;  // not a splitting level, nothing to check

    Path prefix(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    Path suffix(path.begin() + static_cast<std::ptrdiff_t>(at), path.end());
    Path joined = loop_erase(prefix);
    Path tail = loop_erase(suffix);
    joined.insert(joined.end(), tail.begin() + 1, tail.end());
    return joined == loop_erase(path);
}

} // namespace drift
