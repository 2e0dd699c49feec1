#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

#include "drift/experiments.hpp"
#include "drift/lattice.hpp"
#include "drift/stats.hpp"

using doctest::Approx;
using drift::EstimateRow;
using drift::ExperimentConfig;
using drift::Vertex;
using oracles::V;

namespace {
const double kLn2 = std::log(2.0);

ExperimentConfig base_cfg(int d, std::int64_t samples, std::int64_t horizon,
                          std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.params = {d, kLn2, false};
    cfg.samples = samples;
    cfg.horizon = horizon;
    cfg.seed = seed;
    return cfg;
}

double meta(const EstimateRow& row, const std::string& key) {
    auto v = row.get(key);
    REQUIRE(v.has_value());
    return *v;
}

bool rows_equal(const EstimateRow& a, const EstimateRow& b) {
    return a.label == b.label && a.value == b.value && a.std_error == b.std_error &&
           a.meta == b.meta;
}
} // namespace

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg = base_cfg(3, 100, 100, 1);
    CHECK_NOTHROW(cfg.validate());

    ExperimentConfig bad = cfg;
    bad.samples = 0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad = cfg;
    bad.horizon = 0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad = cfg;
    bad.k0 = 0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad = cfg;
    bad.params.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad = cfg;
    bad.box.n_min = 5;
    bad.box.n_max = -5;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("estimate rows serialize to csv and json") {
    EstimateRow first;
    first.label = "alpha";
    first.value = 0.5;
    first.std_error = 0.125;
    first.put("samples", 100);
    first.put("horizon", 2000);

    EstimateRow second;
    second.label = "beta";
    second.value = 1.0;
    second.std_error = 0.0;
    second.put("samples", 50);
    second.put("extra", -2.5);

    // column order: fixed triple, then meta keys by first appearance
    std::string csv = drift::rows_to_csv({first, second});
    std::istringstream lines(csv);
    std::string header, row1, row2;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row1));
    REQUIRE(std::getline(lines, row2));
    CHECK(header == "label,value,std_error,samples,horizon,extra");
    CHECK(row1.substr(0, 6) == "alpha,");
    // "horizon" is missing from the second row, "extra" from the first
    CHECK(row1.back() == ',');
    CHECK(row2.find(",,") != std::string::npos);
    CHECK(row2.find("-2.5") != std::string::npos);

    nlohmann::json doc = nlohmann::json::parse(drift::rows_to_json({first, second}));
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 2);
    CHECK(doc[0]["label"] == "alpha");
    CHECK(doc[0]["value"].get<double>() == Approx(0.5));
    CHECK(doc[1]["meta"]["extra"].get<double>() == Approx(-2.5));

    // write_rows honors path and format; empty path is a no-op
    ExperimentConfig cfg = base_cfg(3, 1, 1, 1);
    cfg.output_path = "test_rows_tmp.csv";
    drift::write_rows(cfg, {first, second});
    std::ifstream in(cfg.output_path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == csv);
    std::remove(cfg.output_path.c_str());

    cfg.output_path.clear();
    CHECK_NOTHROW(drift::write_rows(cfg, {first}));
}

TEST_CASE("intersections: shared start collides immediately") {
    ExperimentConfig cfg = base_cfg(3, 50, 100, 7);
    EstimateRow row = drift::intersections_experiment(cfg, V(0, {2, 1, 0}), V(0, {2, 1, 0}));
    CHECK(row.value == 1.0);
    CHECK(row.std_error == 0.0);
    CHECK(meta(row, "truncation_bound") == 0.0);
    CHECK(meta(row, "mean_pairs") >= 1.0);
}

TEST_CASE("intersections are reproducible and monotone in the horizon") {
    // same seed: the horizon-500 walks are prefixes of the horizon-8000
    // ones, so the collision events are nested sample by sample
    std::vector<EstimateRow> rows;
    for (std::int64_t h : {500, 2000, 8000}) {
        ExperimentConfig cfg = base_cfg(1, 800, h, 9);
        rows.push_back(drift::intersections_experiment(cfg, V(0, {0}), V(0, {1})));
    }
    CHECK(rows[0].value <= rows[1].value);
    CHECK(rows[1].value <= rows[2].value);
    CHECK(rows[2].value >= 0.97);
    CHECK(meta(rows[0], "mean_pairs") <= meta(rows[1], "mean_pairs"));
    CHECK(meta(rows[1], "mean_pairs") <= meta(rows[2], "mean_pairs"));
    for (const EstimateRow& r : rows) {
        CHECK(r.label == "intersections");
        CHECK(meta(r, "truncation_bound") == 0.0);
        CHECK(r.std_error > 0.0);
    }

    ExperimentConfig cfg = base_cfg(1, 800, 500, 9);
    EstimateRow again = drift::intersections_experiment(cfg, V(0, {0}), V(0, {1}));
    CHECK(rows_equal(rows[0], again));
}

TEST_CASE("intersections stabilize under horizon doubling in d=3") {
    ExperimentConfig lo = base_cfg(3, 400, 20000, 9);
    ExperimentConfig hi = base_cfg(3, 400, 40000, 9);
    Vertex a = V(0, {0, 0, 0}), b = V(0, {1, 0, 0});
    EstimateRow first = drift::intersections_experiment(lo, a, b);
    EstimateRow second = drift::intersections_experiment(hi, a, b);
    CHECK(first.value > 0.40);
    CHECK(first.value < 0.63);
    CHECK(std::fabs(second.value - first.value) <= 0.05 * first.value);
}

TEST_CASE("connectivity rejects low dimensions and pins z = 0") {
    ExperimentConfig low = base_cfg(1, 10, 100, 3);
    CHECK_THROWS_AS((void)drift::connectivity_experiment(low, V(0, {1})), std::domain_error);
    low = base_cfg(2, 10, 100, 3);
    CHECK_THROWS_AS((void)drift::connectivity_experiment(low, V(0, {1, 1})), std::domain_error);

    ExperimentConfig cfg = base_cfg(3, 60, 500, 3);
    EstimateRow row = drift::connectivity_experiment(cfg, V(0, {0, 0, 0}));
    CHECK(row.value == 1.0);
    CHECK(row.std_error == 0.0);
    CHECK(meta(row, "eta") == 0.0);
    CHECK(meta(row, "truncation_bound") == 0.0);
    CHECK(meta(row, "mean_k") >= 1.0);
}

TEST_CASE("connectivity decays with the expected exponent") {
    std::vector<double> logeta, logp;
    for (std::int32_t e : {2, 4, 8}) {
        ExperimentConfig cfg = base_cfg(3, 1000, 4000, 7);
        EstimateRow row = drift::connectivity_experiment(cfg, V(0, {e, 0, 0}));
        REQUIRE(row.value > 0.0);
        CHECK(meta(row, "eta") == Approx(static_cast<double>(e)));
        // second-moment lower bound can never exceed the estimate itself
        CHECK(row.value >= meta(row, "second_moment_bound") - 1e-12);
        CHECK(meta(row, "mean_k") >= row.value - 1e-12);
        CHECK(meta(row, "truncation_bound") == Approx(1.0 - row.value));
        logeta.push_back(std::log(static_cast<double>(e)));
        logp.push_back(std::log(row.value));
    }
    drift::LinearFit fit = drift::linear_fit(logeta, logp);
    CHECK(fit.slope > -1.35);
    CHECK(fit.slope < -0.55);
}

TEST_CASE("crossings guard their domain") {
    ExperimentConfig cfg = base_cfg(3, 10, 1000, 5);
    CHECK_THROWS_AS((void)drift::crossings_experiment(cfg, 2, 3), std::domain_error);
    cfg = base_cfg(2, 10, 1000, 5);
    CHECK_THROWS_AS((void)drift::crossings_experiment(cfg, 0, 3), std::domain_error);
    CHECK_THROWS_AS((void)drift::crossings_experiment(cfg, 3, 2), std::domain_error);
    CHECK_THROWS_AS((void)drift::crossings_experiment(cfg, 2, 18), std::domain_error);
    cfg.k0 = 4;
    CHECK_THROWS_AS((void)drift::crossings_experiment(cfg, 2, 5), std::domain_error);
}

TEST_CASE("crossing estimates decrease and fit a 1/p law") {
    ExperimentConfig cfg = base_cfg(2, 6000, 400000, 5);
    std::vector<EstimateRow> rows = drift::crossings_experiment(cfg, 2, 4);
    REQUIRE(rows.size() == 3);
    std::vector<double> invp, val;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const EstimateRow& r = rows[i];
        int p = 2 + static_cast<int>(i);
        CHECK(r.label == "crossings_p=" + std::to_string(p));
        CHECK(meta(r, "p") == Approx(static_cast<double>(p)));
        CHECK(r.value > 0.0);
        CHECK(r.value < 1.0);
        invp.push_back(1.0 / p);
        val.push_back(r.value);
    }
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        CHECK(rows[i + 1].value <=
              rows[i].value + 3.0 * (rows[i].std_error + rows[i + 1].std_error));
    }
    drift::LinearFit fit = drift::linear_fit(invp, val);
    CHECK(fit.slope > 0.0);
    CHECK(fit.r_sq >= 0.8);
}

TEST_CASE("crossing std_error scales with sample count") {
    ExperimentConfig small = base_cfg(2, 400, 30000, 11);
    ExperimentConfig big = base_cfg(2, 1600, 30000, 11);
    EstimateRow a = drift::crossings_experiment(small, 2, 2).front();
    EstimateRow b = drift::crossings_experiment(big, 2, 2).front();
    REQUIRE(a.std_error > 0.0);
    REQUIRE(b.std_error > 0.0);
    // quadrupling the sample count halves the standard error, within 20%
    double ratio = a.std_error / b.std_error;
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
}

TEST_CASE("spread bound guards and trivial singleton") {
    ExperimentConfig cfg = base_cfg(2, 10, 1000, 13);
    CHECK_THROWS_AS((void)drift::spread_bound_experiment(cfg, {V(0, {0, 0})}),
                    std::domain_error);
    cfg = base_cfg(3, 10, 1000, 13);
    CHECK_THROWS_AS((void)drift::spread_bound_experiment(cfg, {}), std::domain_error);
    std::vector<Vertex> six(6, V(0, {0, 0, 0}));
    CHECK_THROWS_AS((void)drift::spread_bound_experiment(cfg, six), std::domain_error);

    EstimateRow row = drift::spread_bound_experiment(cfg, {V(0, {3, -1, 2})});
    CHECK(row.value == 1.0);
    CHECK(row.std_error == 0.0);
    CHECK(meta(row, "spread") == 1.0);
}

TEST_CASE("spread bound matches connectivity on pairs") {
    Vertex z = V(0, {2, 0, 0});
    ExperimentConfig cfg = base_cfg(3, 1500, 2000, 101);
    EstimateRow pair = drift::spread_bound_experiment(cfg, {V(0, {0, 0, 0}), z});
    cfg.seed = 102;
    EstimateRow conn = drift::connectivity_experiment(cfg, z);
    CHECK(std::fabs(pair.value - conn.value) <= 3.0 * (pair.std_error + conn.std_error));
}

TEST_CASE("spread of collinear triples decays like the pairwise bound") {
    // fit the bound constant from pairwise runs, then check each triple
    // against C / spread plus noise, and the overall log-log trend
    double bound_c = 0.0;
    std::vector<double> logspread, logval;
    std::vector<EstimateRow> triples;
    for (std::int32_t k : {2, 4, 8}) {
        ExperimentConfig cfg = base_cfg(3, 1000, 2000, 13);
        Vertex a = V(0, {0, 0, 0}), b = V(0, {k, 0, 0}), c = V(0, {2 * k, 0, 0});
        for (const auto& pair : {std::vector<Vertex>{a, b}, {b, c}, {a, c}}) {
            EstimateRow row = drift::spread_bound_experiment(cfg, pair);
            bound_c = std::max(bound_c,
                               (row.value + 3.0 * row.std_error) * meta(row, "spread"));
        }
        EstimateRow triple = drift::spread_bound_experiment(cfg, {a, b, c});
        REQUIRE(triple.value > 0.0);
        CHECK(meta(triple, "spread") == Approx(static_cast<double>(k) * k));
        triples.push_back(triple);
        logspread.push_back(std::log(meta(triple, "spread")));
        logval.push_back(std::log(triple.value));
    }
    for (const EstimateRow& t : triples) {
        CHECK(t.value <= bound_c / meta(t, "spread") + 3.0 * t.std_error);
    }
    drift::LinearFit fit = drift::linear_fit(logspread, logval);
    CHECK(fit.slope <= -0.6);
}

TEST_CASE("separation guards, trivial target, and composition gains") {
    ExperimentConfig cfg = base_cfg(2, 10, 1000, 31);
    CHECK_THROWS_AS((void)drift::separation_experiment(cfg, V(0, {0, 0}), V(0, {1, 0}), 1),
                    std::domain_error);
    cfg = base_cfg(3, 10, 1000, 31);
    CHECK_THROWS_AS(
        (void)drift::separation_experiment(cfg, V(0, {0, 0, 0}), V(0, {1, 0, 0}), -1),
        std::domain_error);

    // z' = z sits on the first branch, so m = 0 already reaches it
    EstimateRow self = drift::separation_experiment(cfg, V(0, {2, 0, 0}), V(0, {2, 0, 0}), 0);
    CHECK(self.value == 1.0);
    CHECK(self.std_error == 0.0);

    Vertex z = V(0, {3, 0, 0}), zp = V(0, {-3, 0, 0});
    ExperimentConfig pair_cfg = base_cfg(3, 300, 20000, 35);
    EstimateRow m0 = drift::separation_experiment(pair_cfg, z, zp, 0);
    EstimateRow m1 = drift::separation_experiment(pair_cfg, z, zp, 1);
    CHECK(meta(m0, "m") == 0.0);
    CHECK(meta(m1, "m") == 1.0);
    CHECK(meta(m1, "frontier_cap") > 0.0);
    CHECK(meta(m1, "truncation_bound") == Approx(1.0 - m1.value));
    // one lattice hop between forests can only add reachable pairs
    CHECK(m1.value >= m0.value + 0.3);
}

TEST_CASE("separation at m = 0 reduces to connectivity") {
    Vertex z = V(0, {2, 0, 0});
    ExperimentConfig cfg = base_cfg(3, 1500, 2000, 33);
    EstimateRow sep = drift::separation_experiment(cfg, V(0, {0, 0, 0}), z, 0);
    cfg.seed = 34;
    EstimateRow conn = drift::connectivity_experiment(cfg, z);
    CHECK(std::fabs(sep.value - conn.value) <= 3.0 * (sep.std_error + conn.std_error));
}

TEST_CASE("separation reaches nearby targets at m = 1") {
    ExperimentConfig cfg = base_cfg(3, 300, 20000, 31);
    EstimateRow row = drift::separation_experiment(cfg, V(0, {0, 0, 0}), V(0, {1, 0, 0}), 1);
    CHECK(row.value >= 0.9);
}

TEST_CASE("one-end diagnostic guards, skips, and trend") {
    ExperimentConfig cfg = base_cfg(1, 10, 1000, 21);
    CHECK_THROWS_AS((void)drift::one_end_diagnostic(cfg, 0, 3), std::domain_error);
    CHECK_THROWS_AS((void)drift::one_end_diagnostic(cfg, 3, 2), std::domain_error);
    cfg.box = {-4, 6, 4, false};
    CHECK_THROWS_AS((void)drift::one_end_diagnostic(cfg, 2, 2), std::domain_error);
    cfg.box = {2, 6, 4, true};
    CHECK_THROWS_AS((void)drift::one_end_diagnostic(cfg, 2, 2), std::domain_error);

    // p = 5, 6 poke out of the window and come back flagged
    cfg = base_cfg(1, 40, 1000, 21);
    cfg.box = {-4, 6, 4, true};
    std::vector<EstimateRow> rows = drift::one_end_diagnostic(cfg, 4, 6);
    REQUIRE(rows.size() == 3);
    CHECK(meta(rows[0], "skipped") == 0.0);
    CHECK(meta(rows[0], "samples") == 40.0);
    for (std::size_t i : {std::size_t{1}, std::size_t{2}}) {
        CHECK(meta(rows[i], "skipped") == 1.0);
        CHECK(meta(rows[i], "samples") == 0.0);
        CHECK(rows[i].std_error == 0.0);
    }

    // cutset well inside the window: the candidate-end count is monotone
    // per sampled tree, so the fractions fall with p sample-wise
    cfg = base_cfg(1, 400, 1000, 21);
    cfg.box = {-16, 24, 24, true};
    rows = drift::one_end_diagnostic(cfg, 3, 12);
    REQUIRE(rows.size() == 10);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        CHECK(rows[i + 1].value <= rows[i].value);
    }
    CHECK(rows.back().value < rows.front().value - 0.05);

    cfg = base_cfg(3, 150, 1000, 22);
    cfg.box = {-5, 8, 5, true};
    rows = drift::one_end_diagnostic(cfg, 2, 4);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].value <= rows[1].value);
    CHECK(rows[1].value <= rows[0].value);
    CHECK(rows[2].value < rows[0].value - 0.02);
}

TEST_CASE("experiment reruns are bit identical") {
    ExperimentConfig cfg = base_cfg(1, 200, 500, 41);
    EstimateRow a = drift::intersections_experiment(cfg, V(0, {0}), V(0, {1}));
    EstimateRow b = drift::intersections_experiment(cfg, V(0, {0}), V(0, {1}));
    CHECK(rows_equal(a, b));

    cfg.seed = 42;
    EstimateRow c = drift::intersections_experiment(cfg, V(0, {0}), V(0, {1}));
    CHECK(meta(a, "mean_pairs") != meta(c, "mean_pairs"));
}
