#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drift/lattice.hpp"

namespace drift {

enum class OutputFormat { csv, json };

// Shared knobs for every estimator.  `horizon` truncates each sampled walk;
// `box` is only used by the experiments that grow a windowed forest.
struct ExperimentConfig {
    LatticeParams params;
    std::uint64_t seed = 1;
    std::int64_t samples = 10000;
    std::int64_t horizon = 100000;
    FiniteBox box{-64, 128, 64, true};
    int k0 = 1;  // scale exponent for the crossing cylinders
    std::string output_path;  // empty: don't write a file
    OutputFormat format = OutputFormat::csv;

    void validate() const;  // throws std::domain_error on bad fields
};

// One estimate plus auxiliary numbers.  meta keeps insertion order so CSV
// columns are stable; every experiment records "samples" and
// "truncation_bound" (an upper bound on how much the finite horizon can
// shift the value; conservative for the connection-type events, where any
// negative sample could in principle flip given unbounded time).
struct EstimateRow {
    std::string label;
    double value = 0.0;
    double std_error = 0.0;
    std::vector<std::pair<std::string, double>> meta;

    void put(const std::string& key, double v);
    std::optional<double> get(const std::string& key) const;
};

// P(the two walks share a vertex within the horizon), plus the mean number
// of colliding time pairs in meta ("mean_pairs", "mean_pairs_se").  The
// estimand is itself horizon-indexed, so truncation_bound is 0.
EstimateRow intersections_experiment(const ExperimentConfig& cfg, const Vertex& start_a,
                                     const Vertex& start_b);

// P(the forest branch from 0 is hit by the walk from z within the horizon);
// requires d >= 3.  meta: "eta" of z, mean and second moment of the hit
// count K, and "second_moment_bound" = E[K]^2 / (4 E[K^2]).
EstimateRow connectivity_experiment(const ExperimentConfig& cfg, const Vertex& z);

// For each p in [p_lo, p_hi]: P(the two walks' sections between the
// separating cylinders U_{p-1} and U_p collide inside the slab D_{p k0}).
// Requires d == 2.  truncation_bound is the fraction of samples whose
// section was cut off by the horizon.
std::vector<EstimateRow> crossings_experiment(const ExperimentConfig& cfg, int p_lo, int p_hi);

// P(all vertices of w land in one component of the truncated forest grown
// from w in that order); requires d >= 3 and 1 <= |w| <= 5.  meta carries
// the exact spread of w.
EstimateRow spread_bound_experiment(const ExperimentConfig& cfg, const std::vector<Vertex>& w);

// Composed reachability through m+1 independent truncated forests: z' is
// reachable from z using forest edges plus at most m off-forest lattice
// edges, one between consecutive forests.  Requires d >= 3, m >= 0; m = 0
// degenerates to the connectivity event.  Intermediate hops grow branches
// from the capped frontier nearest z' (meta "frontier_cap"), so the
// estimate is a lower bound of the untruncated quantity.
EstimateRow separation_experiment(const ExperimentConfig& cfg, const Vertex& z,
                                  const Vertex& z_prime, int m);

// For each p in [p_lo, p_hi]: fraction of wired-window spanning trees whose
// component of 0 crosses the cylinder cutset K_p two or more times.  A p
// the window cannot cover is reported with meta "skipped" = 1 and no
// samples.
std::vector<EstimateRow> one_end_diagnostic(const ExperimentConfig& cfg, int p_lo, int p_hi);

// "label,value,std_error" plus one column per meta key (union over rows, in
// first-appearance order); missing entries stay blank.
std::string rows_to_csv(const std::vector<EstimateRow>& rows);
std::string rows_to_json(const std::vector<EstimateRow>& rows);

// Write rows to cfg.output_path in cfg.format; no-op when the path is empty.
void write_rows(const ExperimentConfig& cfg, const std::vector<EstimateRow>& rows);

} // namespace drift
