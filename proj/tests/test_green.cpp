#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "drift/green.hpp"
#include "drift/lattice.hpp"
#include "drift/stats.hpp"

using drift::EnvelopeConstants;
using drift::FiniteBox;
using drift::GreenEstimate;
using drift::GreenTable;
using drift::LatticeParams;
using drift::Vertex;
using oracles::V;

namespace {
const double kLn2 = std::log(2.0);
} // namespace

TEST_CASE("green_exact agrees with dense inversion") {
    struct Case {
        LatticeParams p;
        FiniteBox box;
        Vertex src;
    };
    std::vector<Case> cases{
        {{1, kLn2, false}, {0, 19, 5, false}, V(7, {1})},
        {{1, 0.4, true}, {-4, 9, 3, false}, V(0, {0})},
        {{2, kLn2, false}, {0, 5, 2, false}, V(2, {0, 1})},
        {{3, kLn2, false}, {0, 3, 1, false}, V(1, {0, 0, 0})},
    };
    for (const auto& c : cases) {
        GreenTable table = drift::green_exact(c.p, c.box, c.src);
        CHECK(table.solver_residual <= 1e-10);
        std::vector<double> dense = oracles::dense_green(c.p, c.box, c.src);
        std::vector<Vertex> interior = c.box.interior_vertices(c.p.d);
        REQUIRE(table.values.size() == dense.size());
        for (std::size_t i = 0; i < dense.size(); ++i) {
            CHECK(table.values[i] == doctest::Approx(dense[i]).epsilon(1e-8));
            CHECK(table.values[i] >= 0.0);
        }
        CHECK(table.at(V(99, interior.front().x)) == 0.0);
    }
}

TEST_CASE("green_exact pinned segment value") {
    // segment n in {0,1,2}, no transverse room: G(1,1) = 25/21
    LatticeParams p{1, kLn2, false};
    GreenTable table = drift::green_exact(p, {0, 2, 0, false}, V(1, {0}));
    CHECK(table.at(V(1, {0})) == doctest::Approx(25.0 / 21.0).epsilon(1e-9));
}

TEST_CASE("green_exact boundary behavior") {
    LatticeParams p{2, kLn2, false};
    CHECK_THROWS_AS((void)drift::green_exact(p, {0, 4, 2, false}, V(9, {0, 0})),
                    std::domain_error);

    // every neighbor absorbing: exactly the initial visit
    GreenTable lone = drift::green_exact(p, {5, 5, 0, false}, V(5, {0, 0}));
    CHECK(lone.at(V(5, {0, 0})) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("green tables are reversible and monotone in the box") {
    LatticeParams p{2, 0.5, false};
    FiniteBox small{0, 3, 1, false};
    FiniteBox big{-1, 4, 2, false};
    Vertex x = V(1, {0, 0}), y = V(2, {1, 0});

    GreenTable from_x = drift::green_exact(p, small, x);
    GreenTable from_y = drift::green_exact(p, small, y);
    // mu(x) G(x,y) = mu(y) G(y,x) on the same window
    CHECK(from_x.at(y) * drift::vertex_conductance(p, x) ==
          doctest::Approx(from_y.at(x) * drift::vertex_conductance(p, y)).epsilon(1e-8));

    GreenTable wide = drift::green_exact(p, big, x);
    for (const auto& v : small.interior_vertices(2))
        CHECK(from_x.at(v) <= wide.at(v) + 1e-12);
}

TEST_CASE("green_mc basics") {
    LatticeParams p{2, kLn2, false};
    GreenEstimate far = drift::green_mc(p, V(0, {0, 0}), V(30, {0, 0}), 10, 200, 5);
    CHECK(far.value == 0.0);
    CHECK(far.std_error == 0.0);

    // reversibility: G(0,z) = e^{lambda n} G(0,-z)
    Vertex z = V(2, {1, 0}), mz = V(-2, {-1, 0});
    GreenEstimate pos = drift::green_mc(p, drift::origin(2), z, 1200, 60000, 11);
    GreenEstimate neg = drift::green_mc(p, drift::origin(2), mz, 1200, 60000, 12);
    double scale = std::exp(kLn2 * 2.0);
    double gap = std::abs(pos.value - scale * neg.value);
    double sigma = std::sqrt(pos.std_error * pos.std_error +
                             scale * scale * neg.std_error * neg.std_error);
    CHECK(gap < 3.0 * sigma);
}

TEST_CASE("green_mc tracks green_exact on a case grid") {
    LatticeParams p{1, kLn2, false};
    FiniteBox box{-10, 30, 14, false};
    Vertex src = drift::origin(1);
    GreenTable exact = drift::green_exact(p, box, src);

    int within = 0, total = 0;
    for (std::int64_t n = 0; n <= 4; ++n) {
        for (std::int32_t x = -1; x <= 2; ++x) {
            Vertex target = V(n, {x});
            GreenEstimate mc = drift::green_mc(p, src, target, 1500, 4000,
                                               static_cast<std::uint64_t>(100 + total));
            ++total;
            if (std::abs(mc.value - exact.at(target)) <= 3.0 * mc.std_error + 1e-12) ++within;
        }
    }
    CHECK(total == 20);
    CHECK(within >= 19);
}

TEST_CASE("green_via_hitting is consistent") {
    LatticeParams p{3, kLn2, false};
    Vertex o = drift::origin(3), t = V(5, {0, 0, 0});

    GreenEstimate self = drift::green_via_hitting(p, o, o, 600, 20000, 31);
    GreenEstimate direct = drift::green_mc(p, o, o, 600, 20000, 32);
    CHECK(std::abs(self.value - direct.value) <
          3.0 * std::sqrt(self.std_error * self.std_error + direct.std_error * direct.std_error));

    GreenEstimate split = drift::green_via_hitting(p, o, t, 600, 30000, 33);
    GreenEstimate plain = drift::green_mc(p, o, t, 600, 30000, 34);
    CHECK(std::abs(split.value - plain.value) <
          3.0 * std::sqrt(split.std_error * split.std_error + plain.std_error * plain.std_error));

    // the walk law is translation invariant even though conductances tilt
    Vertex w = V(3, {-2, 1, 0});
    GreenEstimate shifted = drift::green_mc(p, w, V(8, {-2, 1, 0}), 600, 30000, 35);
    CHECK(std::abs(shifted.value - plain.value) <
          3.0 *
              std::sqrt(shifted.std_error * shifted.std_error + plain.std_error * plain.std_error));
}

TEST_CASE("envelope evaluation and branch selection") {
    LatticeParams p{3, kLn2, false};
    EnvelopeConstants consts{2.0, 0.7, 0.5, 1.1};

    CHECK_THROWS_AS((void)drift::envelope_upper(p, consts, V(0, {0, 0, 0})), std::domain_error);
    CHECK_THROWS_AS((void)drift::envelope_lower(p, consts, V(0, {0, 0, 0})), std::domain_error);

    // axis: pure power law
    CHECK(drift::envelope_upper(p, consts, V(9, {0, 0, 0})) ==
          doctest::Approx(2.0 * std::pow(9.0, -1.5)));
    CHECK(drift::envelope_lower(p, consts, V(9, {0, 0, 0})) ==
          doctest::Approx(0.5 * std::pow(9.0, -1.5)));

    // no forward progress: exponential branch in |z|
    CHECK(drift::envelope_upper(p, consts, V(0, {3, 4, 0})) ==
          doctest::Approx(2.0 * std::exp(-0.7 * 5.0)));
    CHECK(drift::envelope_upper(p, consts, V(-4, {0, 0, 0})) ==
          doctest::Approx(2.0 * std::exp(-0.7 * 4.0)));

    // tie |x| = n stays on the gaussian branch
    Vertex tie = V(3, {3, 0, 0});
    double z_norm = std::sqrt(18.0);
    CHECK(drift::envelope_upper(p, consts, tie) ==
          doctest::Approx(2.0 * std::pow(z_norm, -1.5) * std::exp(-0.7 * 9.0 / 3.0)));
    CHECK(drift::envelope_upper(p, consts, tie) != doctest::Approx(2.0 * std::exp(-0.7 * z_norm)));

    for (const auto& z : {V(5, {1, 2, 0}), V(1, {4, 0, 0}), V(-2, {1, 1, 1})})
        CHECK(drift::envelope_upper(p, consts, z) > drift::envelope_lower(p, consts, z));
}

TEST_CASE("fit_envelope_constants recovers synthetic constants") {
    LatticeParams p{3, kLn2, false};
    EnvelopeConstants truth{1.6, 0.45, 1.6, 0.45};
    std::vector<std::pair<Vertex, double>> data;
    for (const auto& z : {V(4, {0, 0, 0}), V(8, {2, 0, 0}), V(16, {3, 1, 0}), V(32, {0, 2, 2}),
                          V(0, {3, 0, 0}), V(0, {0, 5, 0}), V(-3, {1, 1, 0}), V(2, {4, 1, 0})})
        data.push_back({z, drift::envelope_upper(p, truth, z)});

    drift::EnvelopeFit fit = drift::fit_envelope_constants(p, data);
    CHECK(fit.coverage >= 0.95);
    CHECK(fit.violations.empty());
    CHECK(fit.constants.c1 == doctest::Approx(1.6).epsilon(0.05));
    CHECK(fit.constants.c2 == doctest::Approx(0.45).epsilon(0.05));
    CHECK(fit.constants.c3 == doctest::Approx(1.6).epsilon(0.05));
    CHECK(fit.constants.c4 == doctest::Approx(0.45).epsilon(0.05));
    for (const auto& [z, g] : data) {
        CHECK(drift::envelope_lower(p, fit.constants, z) <= g * (1.0 + 1e-9));
        CHECK(drift::envelope_upper(p, fit.constants, z) >= g * (1.0 - 1e-9));
    }

    CHECK_THROWS_AS((void)drift::fit_envelope_constants(p, {}), std::domain_error);
    CHECK_THROWS_AS(
        (void)drift::fit_envelope_constants(p, {{V(0, {0, 0, 0}), 1.0}, {V(1, {0, 0, 0}), 0.5}}),
        std::domain_error);
}

TEST_CASE("measured green decay follows the envelope regimes") {
    // gaussian regime, d=3 axis: log G vs log n slope near -d/2
    LatticeParams p3{3, kLn2, false};
    std::vector<double> logn, logg;
    std::vector<std::pair<Vertex, double>> grid;
    for (std::int64_t n : {8, 16, 32}) {
        Vertex z = V(n, {0, 0, 0});
        GreenEstimate est = drift::green_mc(p3, drift::origin(3), z, 700, 100000,
                                            static_cast<std::uint64_t>(40 + n));
        REQUIRE(est.value > 0.0);
        logn.push_back(std::log(static_cast<double>(n)));
        logg.push_back(std::log(est.value));
        grid.push_back({z, est.value});
    }
    // at n <= 32 the finite-size slope still sits a little below -d/2
    drift::LinearFit axis = drift::linear_fit(logn, logg);
    CHECK(axis.slope > -1.8);
    CHECK(axis.slope < -1.25);

    // exponential regime, d=1 transverse: log G linear in |z|, R^2 >= 0.9
    LatticeParams p1{1, kLn2, false};
    std::vector<double> dist, logt;
    for (std::int32_t k : {2, 3, 4, 5, 6}) {
        GreenEstimate est = drift::green_mc(p1, drift::origin(1), V(0, {k}), 400, 200000,
                                            static_cast<std::uint64_t>(60 + k));
        REQUIRE(est.value > 0.0);
        dist.push_back(k);
        logt.push_back(std::log(est.value));
    }
    drift::LinearFit trans = drift::linear_fit(dist, logt);
    CHECK(trans.slope < 0.0);
    CHECK(trans.r_sq >= 0.9);

    // mixed-regime fit encloses the measurements
    grid.push_back({V(0, {2, 0, 0}),
                    drift::green_mc(p3, drift::origin(3), V(0, {2, 0, 0}), 400, 100000, 71).value});
    grid.push_back({V(0, {0, 3, 0}),
                    drift::green_mc(p3, drift::origin(3), V(0, {0, 3, 0}), 400, 100000, 72).value});
    drift::EnvelopeFit fit = drift::fit_envelope_constants(p3, grid);
    CHECK(fit.coverage >= 0.95);
    for (const auto& [z, g] : grid) {
        if (!(g > 0.0)) continue;
        CHECK(drift::envelope_lower(p3, fit.constants, z) <= g * (1.0 + 1e-9));
        CHECK(drift::envelope_upper(p3, fit.constants, z) >= g * (1.0 - 1e-9));
    }
}

TEST_CASE("bubble integral") {
    LatticeParams p3{3, kLn2, false};
    CHECK_THROWS_AS((void)drift::bubble_integral(p3, 4, 0.0), std::domain_error);
    CHECK_THROWS_AS((void)drift::bubble_integral(p3, 32, -1.0), std::domain_error);

    // d=3 converges under refinement; the peak at h=0 is integrable but
    // sharp, so midpoint deltas shrink roughly linearly in the spacing
    double b32 = drift::bubble_integral(p3, 32, 0.0);
    double b64 = drift::bubble_integral(p3, 64, 0.0);
    double b128 = drift::bubble_integral(p3, 128, 0.0);
    CHECK(b32 < b64);
    CHECK(b64 < b128);
    CHECK(b128 - b64 < b64 - b32);
    CHECK((b128 - b64) / b128 < 0.04);

    // laziness halves 1 - phi pointwise, so the integral is exactly 4x
    LatticeParams lazy{3, kLn2, true};
    CHECK(drift::bubble_integral(lazy, 32, 0.0) == doctest::Approx(4.0 * b32).epsilon(1e-12));

    // d=2 mass near the origin keeps growing as the cutoff shrinks
    LatticeParams p2{2, kLn2, false};
    double w10 = drift::bubble_integral(p2, 256, 0.10);
    double w06 = drift::bubble_integral(p2, 256, 0.06);
    double w03 = drift::bubble_integral(p2, 256, 0.03);
    CHECK(w10 < w06);
    CHECK(w06 < w03);

    // Parseval check: sum of squared exact values over a wide box
    FiniteBox box{-12, 20, 8, false};
    GreenTable table = drift::green_exact(p3, box, drift::origin(3));
    double sum_sq = 0.0;
    for (double g : table.values) sum_sq += g * g;
    CHECK(std::abs(sum_sq - b128) / b128 < 0.10);
}

TEST_CASE("transverse symmetry of the fourier modulus") {
    LatticeParams p{3, 0.6, false};
    std::vector<double> h{0.7, 0.3, -1.1, 0.4};
    auto mod = [&](const std::vector<double>& v) {
        auto phi = drift::fourier_transform(p, v);
        double re = 1.0 - phi.real(), im = -phi.imag();
        return re * re + im * im;
    };
    for (std::size_t j = 1; j < h.size(); ++j) {
        std::vector<double> flipped = h;
        flipped[j] = -flipped[j];
        CHECK(mod(flipped) == doctest::Approx(mod(h)).epsilon(1e-12));
    }
}

TEST_CASE("green table csv export") {
    LatticeParams p{2, kLn2, false};
    FiniteBox box{0, 2, 1, false};
    GreenTable table = drift::green_exact(p, box, V(1, {0, 0}));
    std::string csv = drift::to_csv(table);
    CHECK(csv.rfind("n,x1,x2,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<std::ptrdiff_t>(box.interior_count(2)) + 1);

    // spot-check the source row against the table
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    bool found = false;
    while (std::getline(is, line)) {
        std::int64_t n = 0;
        std::int32_t x1 = 0, x2 = 0;
        double value = 0.0;
        char c = 0;
        std::istringstream ls(line);
        REQUIRE((ls >> n >> c >> x1 >> c >> x2 >> c >> value));
        if (n == 1 && x1 == 0 && x2 == 0) {
            found = true;
            CHECK(value == doctest::Approx(table.at(V(1, {0, 0}))).epsilon(1e-15));
        }
    }
    CHECK(found);
}
