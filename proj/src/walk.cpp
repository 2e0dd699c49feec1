#include "drift/walk.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace drift {

namespace {

void check_start(const LatticeParams& params, const Vertex& start) {
    params.validate();
    if (start.x.size() != static_cast<std::size_t>(params.d))
        throw std::domain_error("start vertex has wrong transverse dimension");
}

} // namespace

StepKernel::StepKernel(const LatticeParams& params) {
    StepDistribution s = step_distribution(params);
    stay_ = s.prob_stay;
    up_ = s.prob_up;
    down_ = s.prob_down;
    transverse_ = s.prob_transverse;
    num_transverse_ = 2 * params.d;
}

Vertex StepKernel::operator()(const Vertex& from, RngStream& stream) const {
    Vertex v = from;
    advance(v, stream);
    return v;
}

void StepKernel::advance(Vertex& v, RngStream& stream) const {
    double u = stream.u01();
    if (u < stay_) return;
    u -= stay_;
    if (u < up_) {
        ++v.n;
        return;
    }
    u -= up_;
    if (u < down_) {
        --v.n;
        return;
    }
    u -= down_;
    int k = static_cast<int>(u / transverse_);
    if (k >= num_transverse_) k = num_transverse_ - 1;  // guard roundoff at u ~ 1
    v.x[k >> 1] += (k & 1) ? -1 : 1;
}

Vertex step(const LatticeParams& params, const Vertex& from, RngStream& stream) {
    check_start(params, from);
    return StepKernel(params)(from, stream);
}

PathSample sample_path(const LatticeParams& params, const Vertex& start,
                       const VertexPredicate& stop, std::uint64_t max_steps,
                       RngStream& stream) {
    check_start(params, start);
    StepKernel sampler(params);
    PathSample out;
    out.path.push_back(start);
    if (stop(start)) {
        out.stopped = true;
        return out;
    }
    Vertex pos = start;
    for (std::uint64_t t = 0; t < max_steps; ++t) {
        pos = sampler(pos, stream);
        out.path.push_back(pos);
        if (stop(pos)) {
            out.stopped = true;
            break;
        }
    }
    return out;
}

std::optional<std::uint64_t> hitting_time_set(const LatticeParams& params, const Vertex& start,
                                              const VertexPredicate& target,
                                              std::uint64_t max_steps, RngStream& stream) {
    check_start(params, start);
    if (target(start)) return 0;
    StepKernel sampler(params);
    Vertex pos = start;
    for (std::uint64_t t = 1; t <= max_steps; ++t) {
        pos = sampler(pos, stream);
        if (target(pos)) return t;
    }
    return std::nullopt;
}

double return_never_probability(const LatticeParams& params) {
    StepDistribution s = step_distribution(params);
    return s.prob_up - s.prob_down;
}

std::vector<std::int64_t> splitting_levels(const Path& path, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::domain_error("splitting_levels: lo must be <= hi");
    std::unordered_map<std::int64_t, std::uint64_t> visits;
    for (const auto& v : path)
        if (v.n >= lo && v.n <= hi) ++visits[v.n];
    std::vector<std::int64_t> levels;
    for (std::int64_t h = lo; h <= hi; ++h) {
        auto it = visits.find(h);
        if (it != visits.end() && it->second == 1) levels.push_back(h);
    }
    return levels;
}

CtWalkSample sample_ct_walk(const LatticeParams& params, const Vertex& start,
                            const VertexPredicate& stop, std::uint64_t max_jumps,
                            RngStream& stream) {
    check_start(params, start);
    StepKernel sampler(params);
    CtWalkSample out;
    out.jump_times.push_back(0.0);
    out.positions.push_back(start);
    if (stop(start)) {
        out.stopped = true;
        return out;
    }
    double t = 0.0;
    Vertex pos = start;
    for (std::uint64_t k = 0; k < max_jumps; ++k) {
        t += stream.exponential(1.0);
        pos = sampler(pos, stream);
        out.jump_times.push_back(t);
        out.positions.push_back(pos);
        if (stop(pos)) {
            out.stopped = true;
            break;
        }
    }
    return out;
}

namespace {

// Lazy kernel factored as: pick coordinate i with probability phi[i], then
// move u in {-1,0,+1} within that coordinate with probability nu[i][u+1].
// phi[i] * nu_i reproduces the lazy step law exactly (checked in tests).
struct LazyDecomposition {
    std::vector<double> phi;
    std::vector<std::array<double, 3>> nu;  // index 0/1/2 = move -1/0/+1

    explicit LazyDecomposition(const LatticeParams& params) {
        double el = std::exp(params.lambda);
        double big_d = 2.0 * params.d + 1.0 + el;
        double share = 1.0 / (2.0 * (params.d + 1.0));  // spread the holding mass evenly
        phi.resize(static_cast<std::size_t>(params.d) + 1);
        nu.resize(phi.size());
        phi[0] = (1.0 + el) / (2.0 * big_d) + share;
        nu[0] = {1.0 / (2.0 * big_d * phi[0]),
                 1.0 - (1.0 + el) / (2.0 * big_d * phi[0]),
                 el / (2.0 * big_d * phi[0])};
        for (int i = 1; i <= params.d; ++i) {
            auto k = static_cast<std::size_t>(i);
            phi[k] = 1.0 / big_d + share;
            double move = 1.0 / (2.0 * big_d * phi[k]);
            nu[k] = {move, 1.0 - 2.0 * move, move};
        }
    }

    int draw_coordinate(RngStream& stream) const {
        double u = stream.u01();
        for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
            if (u < phi[i]) return static_cast<int>(i);
            u -= phi[i];
        }
        return static_cast<int>(phi.size()) - 1;
    }

    int draw_move(int i, RngStream& stream) const {  // returns -1, 0, or +1
        const auto& v = nu[static_cast<std::size_t>(i)];
        double u = stream.u01();
        if (u < v[0]) return -1;
        u -= v[0];
        if (u < v[1]) return 0;
        return 1;
    }
};

void apply_move(Vertex& v, int coordinate, int u) {
    if (coordinate == 0)
        v.n += u;
    else
        v.x[static_cast<std::size_t>(coordinate - 1)] += u;
}

// Lowest coordinate (n first, then x_0, x_1, ...) where a and b differ; -1 if equal.
int lowest_differing(const Vertex& a, const Vertex& b) {
    if (a.n != b.n) return 0;
    for (std::size_t j = 0; j < a.x.size(); ++j)
        if (a.x[j] != b.x[j]) return static_cast<int>(j) + 1;
    return -1;
}

} // namespace

CoupledPairSample sample_coupled_pair(const LatticeParams& params, const Vertex& start_a,
                                      const Vertex& start_b, std::uint64_t max_steps,
                                      RngStream& stream) {
    check_start(params, start_a);
    check_start(params, start_b);
    if (!params.lazy) throw std::domain_error("sample_coupled_pair: requires a lazy kernel");

    LazyDecomposition decomp(params);
    CoupledPairSample out;
    Vertex a = start_a, b = start_b;
    out.path_a.push_back(a);
    out.path_b.push_back(b);
    if (a == b) out.coupling_time = 0;

    for (std::uint64_t t = 1; t <= max_steps; ++t) {
        int i = decomp.draw_coordinate(stream);
        int active = lowest_differing(a, b);
        if (i == active) {
            // couple this coordinate with independent moves; all others ride along
            apply_move(a, i, decomp.draw_move(i, stream));
            apply_move(b, i, decomp.draw_move(i, stream));
        } else {
            int u = decomp.draw_move(i, stream);
            apply_move(a, i, u);
            apply_move(b, i, u);
        }
        out.path_a.push_back(a);
        out.path_b.push_back(b);
        if (!out.coupling_time && a == b) out.coupling_time = t;
    }
    return out;
}

} // namespace drift
