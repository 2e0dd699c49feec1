#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace drift {

// Parameters of the drifted lattice Z x Z^d: edge (u,v) carries conductance
// e^{lambda * max(u.n, v.n)}.  `lazy` selects the half-lazy step kernel.
struct LatticeParams {
    int d = 1;            // transverse dimension, >= 1
    double lambda = 0.0;  // drift strength, > 0
    bool lazy = false;

    void validate() const;  // throws std::domain_error on bad fields
};

// Lattice point (n, x): n is the drifted coordinate, x the d transverse ones.
struct Vertex {
    std::int64_t n = 0;
    std::vector<std::int32_t> x;

    bool operator==(const Vertex& o) const { return n == o.n && x == o.x; }
    bool operator!=(const Vertex& o) const { return !(*this == o); }
    bool operator<(const Vertex& o) const {  // lexicographic
        if (n != o.n) return n < o.n;
        return x < o.x;
    }
};

Vertex origin(int d);
Vertex make_vertex(std::int64_t n, std::vector<std::int32_t> x);
std::string to_string(const Vertex& v);

// Difference u - v (componentwise); requires equal transverse dimension.
Vertex sub(const Vertex& u, const Vertex& v);
Vertex add(const Vertex& u, const Vertex& v);
Vertex negate(const Vertex& v);

// Stable 64-bit hash of the coordinates (splitmix64 over each coordinate).
std::uint64_t vertex_key(const Vertex& v);

struct VertexHash {
    std::size_t operator()(const Vertex& v) const { return static_cast<std::size_t>(vertex_key(v)); }
};

// There are 2(d+1) neighbor directions: 0 = +n, 1 = -n, then (+x_j, -x_j)
// pairs for j = 0..d-1.
int degree(const LatticeParams& params);
Vertex neighbor(const Vertex& v, int direction);

// One-step kernel of the walk.  prob_transverse is the probability of each
// single transverse move (there are 2d of them).
struct StepDistribution {
    double prob_up = 0.0;
    double prob_down = 0.0;
    double prob_transverse = 0.0;
    double prob_stay = 0.0;
};

// Mean and variances of a single (non-lazy) step.
struct Moments {
    double a = 0.0;          // mean drift of the n coordinate
    double sigma0_sq = 0.0;  // variance of the n coordinate step
    double sigma_sq = 0.0;   // variance of each transverse step
};

// Axis-aligned finite window: interior = { n_min <= n <= n_max,
// ||x||_inf <= x_radius }.  `wired` glues everything outside into one
// absorbing boundary vertex.
struct FiniteBox {
    std::int64_t n_min = 0;
    std::int64_t n_max = 0;
    std::int32_t x_radius = 0;
    bool wired = false;

    void validate() const;  // throws std::domain_error if empty
    bool contains(const Vertex& v) const;
    std::uint64_t interior_count(int d) const;
    std::vector<Vertex> interior_vertices(int d) const;  // lexicographic order
};

// Minimum-product spanning tree of a vertex set under edge weight
// max(1, eta(z - z')).
struct SpreadTree {
    std::vector<Vertex> vertices;
    std::vector<std::pair<Vertex, Vertex>> edges;
    double product = 1.0;
};

// e^{lambda * max(u.n, v.n)}; throws std::domain_error unless u ~ v.
double conductance(const LatticeParams& params, const Vertex& u, const Vertex& v);

// Sum of incident edge conductances = e^{lambda n} (2d + 1 + e^lambda).
double vertex_conductance(const LatticeParams& params, const Vertex& v);

StepDistribution step_distribution(const LatticeParams& params);

Moments moments(const LatticeParams& params);

// Characteristic function of the step law at h in [-pi,pi]^{d+1}.
std::complex<double> fourier_transform(const LatticeParams& params, const std::vector<double>& h);

// eta(n, x) = max(|n|^{1/2}, ||x||_2)
double eta(const Vertex& z);

// Exact integer eta^2 = max(|n|, sum x_j^2); used for exact weight compares.
std::int64_t eta_sq(const Vertex& z);

// Single-point spread <z> = max(1, eta(z)).
double spread_point(const Vertex& z);

// Exact minimum-product spanning tree over the complete graph of the set,
// |vertices| >= 2.  Ties are broken by lexicographic edge order.
SpreadTree spread(const std::vector<Vertex>& vertices);

} // namespace drift
