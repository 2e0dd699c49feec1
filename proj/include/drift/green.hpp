#pragma once

#include "drift/lattice.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drift {

// Raised when the iterative Green solver fails to reach its residual target.
struct SolverError : std::runtime_error {
    double residual;
    SolverError(const std::string& what, double res) : std::runtime_error(what), residual(res) {}
};

// Expected visit counts G_V(source, y) of the walk killed on exiting the box.
struct GreenTable {
    LatticeParams params;
    FiniteBox box;
    Vertex source;
    std::vector<double> values;  // aligned with box.interior_vertices(params.d)
    double solver_residual = 0.0;

    double at(const Vertex& v) const;  // 0 outside the box
};

struct GreenEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
    // Bound on the visits lost to the finite horizon: the average over
    // samples of (q/p)^{max(0, n_end - n_target)} / (p - q), where p and q
    // are the up and down step probabilities and n_end the final level.
    double truncation_bound = 0.0;
};

// G is bounded between c3 * shape(c4, z) and c1 * shape(c2, z), where
// shape(c, z) = |z|^{-d/2} exp(-c |x|^2 / n)   if |x| <= n  (Gaussian regime)
//             = exp(-c |z|)                    otherwise    (exponential regime)
// with |.| the Euclidean norm; ties |x| == n take the Gaussian branch.
struct EnvelopeConstants {
    double c1 = 1.0, c2 = 1.0;  // upper envelope scale / decay
    double c3 = 1.0, c4 = 1.0;  // lower envelope scale / decay
};

struct EnvelopeFit {
    EnvelopeConstants constants;
    double coverage = 0.0;           // fraction of data points inside the envelope
    std::vector<Vertex> violations;  // points the fitted envelope missed
};

// Solves (I - P^T) g = e_source on the box interior with a Jacobi
// (diagonally preconditioned) iteration to relative residual 1e-10.
// Throws std::domain_error if the source is not interior, SolverError if the
// iteration stalls.
GreenTable green_exact(const LatticeParams& params, const FiniteBox& box, const Vertex& source);

// Monte Carlo estimate of the full-lattice G(source, target): mean number of
// visits to the target within `horizon` steps over `samples` walks.
GreenEstimate green_mc(const LatticeParams& params, const Vertex& source, const Vertex& target,
                       std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed);

// Estimates G(source, target) = G(source, source) * P(walk from source hits
// target), each factor from its own Monte Carlo pass.
GreenEstimate green_via_hitting(const LatticeParams& params, const Vertex& source,
                                const Vertex& target, std::uint64_t horizon,
                                std::uint64_t samples, std::uint64_t seed);

double envelope_upper(const LatticeParams& params, const EnvelopeConstants& consts, const Vertex& z);
double envelope_lower(const LatticeParams& params, const EnvelopeConstants& consts, const Vertex& z);

// Least-squares fit of the envelope shape to (z, G(z)) data on the log
// scale, then scales c1 up and c3 down until every positive data point is
// enclosed.  Points with G <= 0 cannot sit above a positive lower envelope;
// they are reported as violations and excluded from the fit.
EnvelopeFit fit_envelope_constants(const LatticeParams& params,
                                   const std::vector<std::pair<Vertex, double>>& data);

// Midpoint-rule value of (2 pi)^{-(d+1)} times the integral of
// |1 - phi(h)|^{-2} over [-pi, pi]^{d+1}, skipping cells whose center lies
// within epsilon_cutoff of the origin.  mesh must be >= 8.
double bubble_integral(const LatticeParams& params, int mesh, double epsilon_cutoff);

// "n,x1,...,xd,value" rows in lexicographic vertex order (with header).
std::string to_csv(const GreenTable& table);

} // namespace drift
