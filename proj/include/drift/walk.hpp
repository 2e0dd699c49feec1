#pragma once

#include "drift/lattice.hpp"
#include "drift/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace drift {

// A walk trajectory; consecutive entries are nearest neighbors (or equal,
// when the kernel is lazy).
using Path = std::vector<Vertex>;

using VertexPredicate = std::function<bool(const Vertex&)>;

struct WalkerState {
    Vertex position;
    std::uint64_t steps_taken = 0;
    RngStream rng_stream;
};

struct PathSample {
    Path path;
    bool stopped = false;  // true if the stop predicate fired before max_steps
};

// Continuous-time trajectory: positions[k] is occupied on
// [jump_times[k], jump_times[k+1]); jump_times[0] == 0 at the start vertex.
struct CtWalkSample {
    std::vector<double> jump_times;
    Path positions;
    bool stopped = false;
};

struct CoupledPairSample {
    Path path_a;
    Path path_b;
    std::optional<std::uint64_t> coupling_time;  // first step from which paths agree
};

// Precomputed one-step sampler; constructing it once hoists the exp() and
// parameter checks out of hot loops.
class StepKernel {
public:
    explicit StepKernel(const LatticeParams& params);
    Vertex operator()(const Vertex& from, RngStream& stream) const;
    // In-place step for hot loops; same draws as operator().
    void advance(Vertex& v, RngStream& stream) const;

private:
    double stay_, up_, down_, transverse_;
    int num_transverse_;
};

// Draw one step from the current position.  Exposed so samplers share a
// single code path for the kernel.
Vertex step(const LatticeParams& params, const Vertex& from, RngStream& stream);

// Walk from `start` until `stop` fires or max_steps steps were taken.  The
// predicate is also checked at the start vertex.
PathSample sample_path(const LatticeParams& params, const Vertex& start,
                       const VertexPredicate& stop, std::uint64_t max_steps,
                       RngStream& stream);

// First time the walk sits in the target set (0 if the start is inside);
// nullopt when the set was not reached within max_steps.
std::optional<std::uint64_t> hitting_time_set(const LatticeParams& params, const Vertex& start,
                                              const VertexPredicate& target,
                                              std::uint64_t max_steps, RngStream& stream);

// Probability that the n coordinate never returns to its starting level
// after an up-step; equals prob_up - prob_down of the step kernel.
double return_never_probability(const LatticeParams& params);

// Levels h in [lo, hi] whose slab {n == h} the path visits exactly once.
std::vector<std::int64_t> splitting_levels(const Path& path, std::int64_t lo, std::int64_t hi);

// Continuous-time walk with unit-rate exponential holding times.
CtWalkSample sample_ct_walk(const LatticeParams& params, const Vertex& start,
                            const VertexPredicate& stop, std::uint64_t max_jumps,
                            RngStream& stream);

// Markovian coupling of two lazy walks: a shared coordinate selector, shared
// in-coordinate moves everywhere except the lowest differing coordinate,
// which draws independently until it agrees.  Requires params.lazy.
CoupledPairSample sample_coupled_pair(const LatticeParams& params, const Vertex& start_a,
                                      const Vertex& start_b, std::uint64_t max_steps,
                                      RngStream& stream);

} // namespace drift
