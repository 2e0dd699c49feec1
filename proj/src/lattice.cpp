#include "drift/lattice.hpp"
#include "drift/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace drift {

void LatticeParams::validate() const {
    if (d < 1) throw std::domain_error("LatticeParams: d must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::domain_error("LatticeParams: lambda must be positive and finite");
}

Vertex origin(int d) {
    Vertex v;
    v.n = 0;
    v.x.assign(static_cast<std::size_t>(d), 0);
    return v;
}

Vertex make_vertex(std::int64_t n, std::vector<std::int32_t> x) {
    Vertex v;
    v.n = n;
    v.x = std::move(x);
    return v;
}

std::string to_string(const Vertex& v) {
    std::ostringstream os;
    os << '(' << v.n;
    for (auto c : v.x) os << ',' << c;
    os << ')';
    return os.str();
}

static void check_same_dim(const Vertex& u, const Vertex& v) {
    if (u.x.size() != v.x.size())
        throw std::domain_error("vertices have different transverse dimension");
}

Vertex sub(const Vertex& u, const Vertex& v) {
    check_same_dim(u, v);
    Vertex r = u;
    r.n -= v.n;
    for (std::size_t j = 0; j < r.x.size(); ++j) r.x[j] -= v.x[j];
    return r;
}

Vertex add(const Vertex& u, const Vertex& v) {
    check_same_dim(u, v);
    Vertex r = u;
    r.n += v.n;
    for (std::size_t j = 0; j < r.x.size(); ++j) r.x[j] += v.x[j];
    return r;
}

Vertex negate(const Vertex& v) {
    Vertex r = v;
    r.n = -r.n;
    for (auto& c : r.x) c = -c;
    return r;
}

std::uint64_t vertex_key(const Vertex& v) {
    std::uint64_t s = 0x51ED2701A1B42D8FULL;
    s ^= static_cast<std::uint64_t>(v.n);
    std::uint64_t h = splitmix64(s);
    for (auto c : v.x) {
        s = h ^ (static_cast<std::uint64_t>(static_cast<std::int64_t>(c)) + 0x9E3779B97F4A7C15ULL);
        h = splitmix64(s);
    }
    return h;
}

int degree(const LatticeParams& params) { return 2 * (params.d + 1); }

Vertex neighbor(const Vertex& v, int direction) {
    Vertex r = v;
    if (direction == 0) {
        ++r.n;
    } else if (direction == 1) {
        --r.n;
    } else {
        int j = (direction - 2) / 2;
        if (j < 0 || static_cast<std::size_t>(j) >= v.x.size())
            throw std::domain_error("neighbor: direction out of range");
        r.x[static_cast<std::size_t>(j)] += (direction % 2 == 0) ? 1 : -1;
    }
    return r;
}

// Returns +1 for the up edge, -1 for down, 0 for a transverse edge; throws if
// u and v are not nearest neighbors.
static int classify_edge(const Vertex& u, const Vertex& v) {
    check_same_dim(u, v);
    std::int64_t dn = u.n - v.n;
    int transverse_moves = 0;
    for (std::size_t j = 0; j < u.x.size(); ++j) {
        std::int64_t dx = static_cast<std::int64_t>(u.x[j]) - v.x[j];
        if (dx == 0) continue;
        if (dx == 1 || dx == -1)
            ++transverse_moves;
        else
            throw std::domain_error("conductance: vertices are not neighbors");
    }
    if (dn == 0 && transverse_moves == 1) return 0;
    if ((dn == 1 || dn == -1) && transverse_moves == 0) return static_cast<int>(dn);
    throw std::domain_error("conductance: vertices are not neighbors");
}

double conductance(const LatticeParams& params, const Vertex& u, const Vertex& v) {
    params.validate();
    classify_edge(u, v);
    return std::exp(params.lambda * static_cast<double>(std::max(u.n, v.n)));
}

double vertex_conductance(const LatticeParams& params, const Vertex& v) {
    params.validate();
    double total_rate = 2.0 * params.d + 1.0 + std::exp(params.lambda);
    return std::exp(params.lambda * static_cast<double>(v.n)) * total_rate;
}

StepDistribution step_distribution(const LatticeParams& params) {
    params.validate();
    double el = std::exp(params.lambda);
    double p = 1.0 / (2.0 * params.d + 1.0 + el);
    StepDistribution s;
    s.prob_up = el * p;
    s.prob_down = p;
    s.prob_transverse = p;
    s.prob_stay = 0.0;
    if (params.lazy) {
        s.prob_up *= 0.5;
        s.prob_down *= 0.5;
        s.prob_transverse *= 0.5;
        s.prob_stay = 0.5;
    }
    return s;
}

Moments moments(const LatticeParams& params) {
    params.validate();
    double el = std::exp(params.lambda);
    double denom = 2.0 * params.d + 1.0 + el;
    Moments m;
    m.a = (el - 1.0) / denom;
    m.sigma0_sq = (el + 1.0) / denom;
    m.sigma_sq = 2.0 / denom;
    return m;
}

std::complex<double> fourier_transform(const LatticeParams& params, const std::vector<double>& h) {
    params.validate();
    if (h.size() != static_cast<std::size_t>(params.d + 1))
        throw std::domain_error("fourier_transform: h must have d+1 components");
    constexpr double pi = 3.14159265358979323846;
    for (double c : h)
        if (!(c >= -pi && c <= pi)) throw std::domain_error("fourier_transform: h outside [-pi,pi]^{d+1}");
    double el = std::exp(params.lambda);
    double denom = 2.0 * params.d + 1.0 + el;
    std::complex<double> i01(0.0, 1.0);
    std::complex<double> phi = (el * std::exp(i01 * h[0]) + std::exp(-i01 * h[0])) / denom;
    for (int j = 1; j <= params.d; ++j) phi += 2.0 * std::cos(h[static_cast<std::size_t>(j)]) / denom;
    if (params.lazy) phi = 0.5 + 0.5 * phi;
    return phi;
}

void FiniteBox::validate() const {
    if (n_min > n_max || x_radius < 0) throw std::domain_error("FiniteBox: empty box");
}

bool FiniteBox::contains(const Vertex& v) const {
    if (v.n < n_min || v.n > n_max) return false;
    for (auto c : v.x)
        if (c < -x_radius || c > x_radius) return false;
    return true;
}

std::uint64_t FiniteBox::interior_count(int d) const {
    validate();
    std::uint64_t count = static_cast<std::uint64_t>(n_max - n_min + 1);
    for (int j = 0; j < d; ++j) count *= static_cast<std::uint64_t>(2 * x_radius + 1);
    return count;
}

std::vector<Vertex> FiniteBox::interior_vertices(int d) const {
    validate();
    std::vector<Vertex> out;
    out.reserve(interior_count(d));
    Vertex v;
    v.n = n_min;
    v.x.assign(static_cast<std::size_t>(d), -x_radius);
    while (true) {
        out.push_back(v);
        // odometer increment, last transverse coordinate fastest
        int j = d - 1;
        for (; j >= 0; --j) {
            auto k = static_cast<std::size_t>(j);
            if (v.x[k] < x_radius) {
                ++v.x[k];
                break;
            }
            v.x[k] = -x_radius;
        }
        if (j >= 0) continue;
        if (++v.n > n_max) break;
    }
    return out;
}

std::int64_t eta_sq(const Vertex& z) {
    std::int64_t xx = 0;
    for (auto c : z.x) xx += static_cast<std::int64_t>(c) * c;
    return std::max<std::int64_t>(std::llabs(z.n), xx);
}

double eta(const Vertex& z) { return std::sqrt(static_cast<double>(eta_sq(z))); }

double spread_point(const Vertex& z) { return std::max(1.0, eta(z)); }

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[static_cast<std::size_t>(b)] = a;
        return true;
    }
};

} // namespace

SpreadTree spread(const std::vector<Vertex>& vertices) {
    if (vertices.size() < 2) throw std::domain_error("spread: need at least two vertices");
    for (const auto& v : vertices) check_same_dim(v, vertices.front());

    // Sort the vertex set so edge enumeration (and hence tie-breaking) is
    // independent of input order.
    std::vector<Vertex> vs = vertices;
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    if (vs.size() < 2) throw std::domain_error("spread: need at least two distinct vertices");

    struct Edge {
        std::int64_t w2;  // max(1, eta^2), an exact integer
        int i, j;
    };
    std::vector<Edge> edges;
    edges.reserve(vs.size() * (vs.size() - 1) / 2);
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j)
            edges.push_back({std::max<std::int64_t>(1, eta_sq(sub(vs[j], vs[i]))),
                             static_cast<int>(i), static_cast<int>(j)});

    // Minimizing the product of weights >= 1 is the same as minimizing the sum
    // of their logs, so Kruskal on the exact squared weights is exact.
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.w2 != b.w2) return a.w2 < b.w2;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    SpreadTree tree;
    tree.vertices = vs;
    UnionFind uf(vs.size());
    for (const auto& e : edges) {
        if (!uf.unite(e.i, e.j)) continue;
        tree.edges.emplace_back(vs[static_cast<std::size_t>(e.i)], vs[static_cast<std::size_t>(e.j)]);
        tree.product *= std::sqrt(static_cast<double>(e.w2));
        if (tree.edges.size() + 1 == vs.size()) break;
    }
    return tree;
}

} // namespace drift
