#pragma once

#include "drift/lattice.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace drift {

using NodeId = std::int64_t;

struct NetworkEdge {
    NodeId u = 0;
    NodeId v = 0;
    double conductance = 0.0;
};

// Finite weighted network.  Parallel edges are allowed (they act like one
// edge with the summed conductance); self-loops are not.
struct FiniteNetwork {
    std::vector<NodeId> vertices;
    std::vector<NetworkEdge> edges;
    std::optional<NodeId> wired;  // designated boundary super-vertex, if any

    void validate() const;  // ids known & unique, c > 0, no loops, connected
};

using VertexFunction = std::unordered_map<NodeId, double>;

// Flow values along edges, indexed like FiniteNetwork::edges and oriented
// u -> v; the reverse orientation carries the negated value.
using EdgeFlow = std::vector<double>;

// Wired (or free) finite window of the drifted lattice as a network.
// NodeId k is lattice_vertex[k]; the wired super-vertex, when present, gets
// the id one past the interior and absorbs all boundary-crossing edges.
struct BoxNetwork {
    FiniteNetwork net;
    std::vector<Vertex> lattice_vertex;
};

BoxNetwork box_network(const LatticeParams& params, const FiniteBox& box);

// (grad f)(e) = c(e) (f(head) - f(tail)); f must cover every vertex.
EdgeFlow gradient(const FiniteNetwork& net, const VertexFunction& f);

// (div theta)(x) = -c(x)^{-1} sum of theta over edges leaving x.
VertexFunction divergence(const FiniteNetwork& net, const EdgeFlow& theta);

// (P f)(x), the one-step network average.
VertexFunction transition_apply(const FiniteNetwork& net, const VertexFunction& f);

// sum over edges of r(e) (grad f)(e)^2 = sum c(e) (f(u) - f(v))^2.
double dirichlet_energy(const FiniteNetwork& net, const VertexFunction& f);

// sum over edges of r(e) theta(e)^2.
double flow_energy(const FiniteNetwork& net, const EdgeFlow& theta);

// |f(at) - (Pf)(at)| <= tol; throws std::domain_error when `at` or one of
// its neighbors is missing from f.
bool is_harmonic(const FiniteNetwork& net, const VertexFunction& f, NodeId at, double tol);

// Same check directly on the drifted lattice kernel.
bool is_harmonic(const LatticeParams& params, const std::function<double(const Vertex&)>& f,
                 const Vertex& at, double tol);

// Harmonic extension of the fixed boundary values to the whole network.
VertexFunction solve_dirichlet(const FiniteNetwork& net, const VertexFunction& boundary);

// Energy of the harmonic potential with 1 at source, 0 at sink.
double effective_conductance(const FiniteNetwork& net, NodeId source, NodeId sink);

// |<grad f, grad phi>_r - <f - Pf, phi>_c|
double gauss_green_gap(const FiniteNetwork& net, const VertexFunction& f,
                       const VertexFunction& phi);
bool gauss_green_check(const FiniteNetwork& net, const VertexFunction& f,
                       const VertexFunction& phi, double tol);

// One "u,v,conductance" line per edge (plus a header line).
std::string to_csv(const FiniteNetwork& net);
FiniteNetwork network_from_csv(const std::string& csv);

} // namespace drift
