#pragma once

#include "drift/lattice.hpp"
#include "drift/rng.hpp"
#include "drift/walk.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace drift {

// Spanning forest of (part of) the lattice.  parent[v] is v's neighbor on
// the way to the root, or nullopt for an edge into the root itself: the
// wired boundary vertex, the chosen root, or (in the truncated infinite
// case) the far end of a cut-off branch.
struct Forest {
    int d = 1;
    FiniteBox box;  // window the forest was grown over
    std::unordered_map<Vertex, std::optional<Vertex>, VertexHash> parent;
    std::vector<Vertex> order;       // vertex order actually processed
    std::vector<Path> branches;      // loop-erased branches in creation order
    std::vector<bool> truncated;     // per branch: cut off at the horizon?
};

// Per-vertex streams of uniform draws.  Entry k of vertex v depends only on
// (seed, v, k), so any replay pops identical values regardless of what other
// vertices consumed; that makes the sampled tree a function of the stack
// contents alone, not of the vertex order.
class StackDiagram {
public:
    explicit StackDiagram(std::uint64_t seed) : seed_(seed) {}

    double pop(const Vertex& v);
    std::uint64_t pop_count(const Vertex& v) const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::unordered_map<Vertex, RngStream, VertexHash> live_;
    std::unordered_map<Vertex, std::uint64_t, VertexHash> pops_;
};

// Uniform (conductance-weighted) spanning tree of the finite window.
// box.wired = true: the sample lives on the quotient graph whose extra
// absorbing vertex collects every boundary-crossing edge; pass root =
// nullopt.  box.wired = false: the induced sub-network, rooted at *root.
// Laziness never changes the tree law, so stacks hold non-lazy steps.
// `ordering` is a priority prefix of box vertices; remaining vertices follow
// in lexicographic order.
Forest ust_finite(const LatticeParams& params, const FiniteBox& box,
                  const std::optional<Vertex>& root, const std::vector<Vertex>& ordering,
                  std::uint64_t seed);

// Wilson's method rooted at infinity over the region: for each start vertex
// in order, walk the full (unrestricted) lattice until the existing forest
// is hit, loop-erase, attach.  A walk still loose after `horizon` steps is
// loop-erased, attached to the root sentinel, and flagged truncated; the
// chance a truncated branch is wrong near its start decays like
// (prob_down / prob_up)^k in the level gap k the walk has climbed.
// Each start vertex draws a fresh stream derived from (seed, vertex), so
// orderings that agree on their first M vertices grow identical first M
// branches.
Forest wsf_rooted_at_infinity(const LatticeParams& params, const FiniteBox& region,
                              const std::vector<Vertex>& ordering, std::uint64_t horizon,
                              std::uint64_t seed);

// Canonical id (lexicographically smallest member) of v's tree in the
// forest, with root-sentinel edges cut.  Unknown vertex: std::domain_error.
Vertex component_of(const Forest& forest, const Vertex& v);

// Number of edge-disjoint forest paths from z that leave the closed cylinder
// {|n - z.n| <= p, ||x - z.x||_2 <= p}: one per tree direction at z whose
// subtree reaches strictly outside the cylinder or a root-sentinel edge.
// Counts the candidate ends of z's component at scale p, so it is
// nonincreasing in p on a fixed forest.  The window must cover the closed
// cylinder, else std::domain_error.
std::uint64_t cutset_crossings(const Forest& forest, const Vertex& z, std::int64_t p);

// One line per vertex, lexicographic: "n x1 .. xd -> n' x1' .. xd'" with the
// literal sentinel "ROOT" on root edges.  Round-trips byte-exactly; only the
// parent relation is serialized (the rebuilt window is the bounding box).
std::string to_text(const Forest& forest);
Forest forest_from_text(const std::string& text);

} // namespace drift
