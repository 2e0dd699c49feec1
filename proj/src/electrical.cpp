#include "drift/electrical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Sparse>

namespace drift {

namespace {

struct Adjacency {
    std::unordered_map<NodeId, std::size_t> index;
    std::vector<std::vector<std::pair<std::size_t, NodeId>>> incident;  // (edge idx, other end)
    std::vector<double> vertex_c;                                       // sum of incident conductances
};

void basic_checks(const FiniteNetwork& net) {
    if (net.vertices.empty()) throw std::domain_error("FiniteNetwork: no vertices");
    std::unordered_set<NodeId> seen(net.vertices.begin(), net.vertices.end());
    if (seen.size() != net.vertices.size()) throw std::domain_error("FiniteNetwork: duplicate vertex id");
    for (const auto& e : net.edges) {
        if (!seen.count(e.u) || !seen.count(e.v)) throw std::domain_error("FiniteNetwork: edge references unknown vertex");
        if (e.u == e.v) throw std::domain_error("FiniteNetwork: self-loop");
        if (!(e.conductance > 0.0) || !std::isfinite(e.conductance))
            throw std::domain_error("FiniteNetwork: conductance must be positive and finite");
    }
    if (net.wired && !seen.count(*net.wired)) throw std::domain_error("FiniteNetwork: wired vertex unknown");
}

Adjacency build_adjacency(const FiniteNetwork& net) {
    basic_checks(net);
    Adjacency a;
    a.index.reserve(net.vertices.size());
    for (std::size_t i = 0; i < net.vertices.size(); ++i) a.index[net.vertices[i]] = i;
    a.incident.resize(net.vertices.size());
    a.vertex_c.assign(net.vertices.size(), 0.0);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const auto& edge = net.edges[e];
        std::size_t iu = a.index[edge.u], iv = a.index[edge.v];
        a.incident[iu].emplace_back(e, edge.v);
        a.incident[iv].emplace_back(e, edge.u);
        a.vertex_c[iu] += edge.conductance;
        a.vertex_c[iv] += edge.conductance;
    }
    return a;
}

double value_at(const VertexFunction& f, NodeId id, const char* what) {
    auto it = f.find(id);
    if (it == f.end()) {
        std::ostringstream os;
        os << what << ": no value at vertex " << id;
        throw std::domain_error(os.str());
    }
    return it->second;
}

// Vertices reachable from the seed set along edges.
std::vector<bool> reachable(const FiniteNetwork& net, const Adjacency& a,
                            const std::vector<std::size_t>& seeds) {
    std::vector<bool> seen(net.vertices.size(), false);
    std::deque<std::size_t> queue;
    for (auto s : seeds) {
        if (!seen[s]) {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        std::size_t i = queue.front();
        queue.pop_front();
        for (const auto& [e, other] : a.incident[i]) {
            std::size_t j = a.index.at(other);
            if (!seen[j]) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    return seen;
}

} // namespace

void FiniteNetwork::validate() const {
    Adjacency a = build_adjacency(*this);
    auto seen = reachable(*this, a, {0});
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw std::domain_error("FiniteNetwork: not connected");
}

BoxNetwork box_network(const LatticeParams& params, const FiniteBox& box) {
    params.validate();
    box.validate();
    BoxNetwork out;
    out.lattice_vertex = box.interior_vertices(params.d);
    std::unordered_map<Vertex, NodeId, VertexHash> id_of;
    id_of.reserve(out.lattice_vertex.size());
    for (std::size_t i = 0; i < out.lattice_vertex.size(); ++i)
        id_of[out.lattice_vertex[i]] = static_cast<NodeId>(i);

    auto super = static_cast<NodeId>(out.lattice_vertex.size());
    for (NodeId i = 0; i < super; ++i) out.net.vertices.push_back(i);
    if (box.wired) {
        out.net.vertices.push_back(super);
        out.net.wired = super;
    }

    int deg = degree(params);
    for (std::size_t i = 0; i < out.lattice_vertex.size(); ++i) {
        const Vertex& v = out.lattice_vertex[i];
        double to_boundary = 0.0;
        for (int dir = 0; dir < deg; ++dir) {
            Vertex u = neighbor(v, dir);
            double c = conductance(params, v, u);
            auto it = id_of.find(u);
            if (it != id_of.end()) {
                if (v < u) out.net.edges.push_back({static_cast<NodeId>(i), it->second, c});
            } else {
                to_boundary += c;
            }
        }
        if (box.wired && to_boundary > 0.0)
            out.net.edges.push_back({static_cast<NodeId>(i), super, to_boundary});
    }
    return out;
}

EdgeFlow gradient(const FiniteNetwork& net, const VertexFunction& f) {
    basic_checks(net);
    EdgeFlow theta(net.edges.size());
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const auto& edge = net.edges[e];
        theta[e] = edge.conductance * (value_at(f, edge.v, "gradient") - value_at(f, edge.u, "gradient"));
    }
    return theta;
}

VertexFunction divergence(const FiniteNetwork& net, const EdgeFlow& theta) {
    Adjacency a = build_adjacency(net);
    if (theta.size() != net.edges.size()) throw std::domain_error("divergence: flow size mismatch");
    VertexFunction out;
    out.reserve(net.vertices.size());
    for (auto id : net.vertices) out[id] = 0.0;
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        out[net.edges[e].u] -= theta[e];  // edge leaves u ...
        out[net.edges[e].v] += theta[e];  // ... and enters v
    }
    for (std::size_t i = 0; i < net.vertices.size(); ++i) {
        NodeId id = net.vertices[i];
        if (a.vertex_c[i] > 0.0) out[id] /= a.vertex_c[i];
    }
    return out;
}

VertexFunction transition_apply(const FiniteNetwork& net, const VertexFunction& f) {
    Adjacency a = build_adjacency(net);
    VertexFunction out;
    out.reserve(net.vertices.size());
    for (std::size_t i = 0; i < net.vertices.size(); ++i) {
        NodeId id = net.vertices[i];
        double acc = 0.0;
        for (const auto& [e, other] : a.incident[i])
            acc += net.edges[e].conductance * value_at(f, other, "transition_apply");
        out[id] = a.vertex_c[i] > 0.0 ? acc / a.vertex_c[i] : value_at(f, id, "transition_apply");
    }
    return out;
}

double dirichlet_energy(const FiniteNetwork& net, const VertexFunction& f) {
    basic_checks(net);
    double energy = 0.0;
    for (const auto& edge : net.edges) {
        double df = value_at(f, edge.u, "dirichlet_energy") - value_at(f, edge.v, "dirichlet_energy");
        energy += edge.conductance * df * df;
    }
    return energy;
}

double flow_energy(const FiniteNetwork& net, const EdgeFlow& theta) {
    basic_checks(net);
    if (theta.size() != net.edges.size()) throw std::domain_error("flow_energy: flow size mismatch");
    double energy = 0.0;
    for (std::size_t e = 0; e < net.edges.size(); ++e)
        energy += theta[e] * theta[e] / net.edges[e].conductance;
    return energy;
}

bool is_harmonic(const FiniteNetwork& net, const VertexFunction& f, NodeId at, double tol) {
    Adjacency a = build_adjacency(net);
    auto it = a.index.find(at);
    if (it == a.index.end()) throw std::domain_error("is_harmonic: unknown vertex");
    std::size_t i = it->second;
    if (a.incident[i].empty()) throw std::domain_error("is_harmonic: isolated vertex");
    double acc = 0.0;
    for (const auto& [e, other] : a.incident[i])
        acc += net.edges[e].conductance * value_at(f, other, "is_harmonic");
    return std::abs(value_at(f, at, "is_harmonic") - acc / a.vertex_c[i]) <= tol;
}

bool is_harmonic(const LatticeParams& params, const std::function<double(const Vertex&)>& f,
                 const Vertex& at, double tol) {
    params.validate();
    StepDistribution s = step_distribution(params);
    double acc = s.prob_stay * f(at) + s.prob_up * f(neighbor(at, 0)) + s.prob_down * f(neighbor(at, 1));
    for (int dir = 2; dir < degree(params); ++dir) acc += s.prob_transverse * f(neighbor(at, dir));
    return std::abs(f(at) - acc) <= tol;
}

VertexFunction solve_dirichlet(const FiniteNetwork& net, const VertexFunction& boundary) {
    Adjacency a = build_adjacency(net);
    if (boundary.empty()) throw std::domain_error("solve_dirichlet: need at least one fixed vertex");
    std::vector<std::size_t> seeds;
    for (const auto& [id, val] : boundary) {
        auto it = a.index.find(id);
        if (it == a.index.end()) throw std::domain_error("solve_dirichlet: fixed vertex unknown");
        (void)val;
        seeds.push_back(it->second);
    }
    auto seen = reachable(net, a, seeds);
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw std::domain_error("solve_dirichlet: a vertex is unreachable from the fixed set");

    // index the free vertices
    std::vector<std::ptrdiff_t> free_index(net.vertices.size(), -1);
    std::vector<std::size_t> free_list;
    for (std::size_t i = 0; i < net.vertices.size(); ++i) {
        if (!boundary.count(net.vertices[i])) {
            free_index[i] = static_cast<std::ptrdiff_t>(free_list.size());
            free_list.push_back(i);
        }
    }

    VertexFunction out;
    out.reserve(net.vertices.size());
    for (const auto& [id, val] : boundary)
        if (a.index.count(id)) out[id] = val;
    if (free_list.empty()) return out;

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_list.size()));
    for (std::size_t row = 0; row < free_list.size(); ++row) {
        std::size_t i = free_list[row];
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), a.vertex_c[i]);
        for (const auto& [e, other] : a.incident[i]) {
            std::size_t j = a.index.at(other);
            double c = net.edges[e].conductance;
            if (free_index[j] >= 0)
                triplets.emplace_back(static_cast<int>(row), static_cast<int>(free_index[j]), -c);
            else
                rhs[static_cast<Eigen::Index>(row)] += c * boundary.at(other);
        }
    }
    Eigen::SparseMatrix<double> lap(static_cast<Eigen::Index>(free_list.size()),
                                    static_cast<Eigen::Index>(free_list.size()));
    lap.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
    if (solver.info() != Eigen::Success) throw std::runtime_error("solve_dirichlet: factorization failed");
    Eigen::VectorXd sol = solver.solve(rhs);
    if (solver.info() != Eigen::Success) throw std::runtime_error("solve_dirichlet: solve failed");
    for (std::size_t row = 0; row < free_list.size(); ++row)
        out[net.vertices[free_list[row]]] = sol[static_cast<Eigen::Index>(row)];
    return out;
}

double effective_conductance(const FiniteNetwork& net, NodeId source, NodeId sink) {
    Adjacency a = build_adjacency(net);
    auto s = a.index.find(source);
    auto t = a.index.find(sink);
    if (s == a.index.end() || t == a.index.end())
        throw std::domain_error("effective_conductance: unknown terminal");
    if (source == sink) throw std::domain_error("effective_conductance: source equals sink");
    auto seen = reachable(net, a, {s->second});
    if (!seen[t->second]) throw std::domain_error("effective_conductance: terminals not connected");

    // restrict to the component of the terminals; other components carry no current
    FiniteNetwork sub;
    for (std::size_t i = 0; i < net.vertices.size(); ++i)
        if (seen[i]) sub.vertices.push_back(net.vertices[i]);
    for (const auto& e : net.edges)
        if (seen[a.index.at(e.u)]) sub.edges.push_back(e);

    VertexFunction fixed{{source, 1.0}, {sink, 0.0}};
    VertexFunction potential = solve_dirichlet(sub, fixed);
    return dirichlet_energy(sub, potential);
}

double gauss_green_gap(const FiniteNetwork& net, const VertexFunction& f,
                       const VertexFunction& phi) {
    Adjacency a = build_adjacency(net);
    double lhs = 0.0;
    for (const auto& edge : net.edges) {
        double df = value_at(f, edge.v, "gauss_green") - value_at(f, edge.u, "gauss_green");
        double dphi = value_at(phi, edge.v, "gauss_green") - value_at(phi, edge.u, "gauss_green");
        lhs += edge.conductance * df * dphi;
    }
    VertexFunction pf = transition_apply(net, f);
    double rhs = 0.0;
    for (std::size_t i = 0; i < net.vertices.size(); ++i) {
        NodeId id = net.vertices[i];
        rhs += a.vertex_c[i] * (value_at(f, id, "gauss_green") - pf.at(id)) * value_at(phi, id, "gauss_green");
    }
    return std::abs(lhs - rhs);
}

bool gauss_green_check(const FiniteNetwork& net, const VertexFunction& f,
                       const VertexFunction& phi, double tol) {
    return gauss_green_gap(net, f, phi) <= tol;
}

std::string to_csv(const FiniteNetwork& net) {
    std::ostringstream os;
    os << "u_id,v_id,conductance\n";
    os.precision(17);
    for (const auto& e : net.edges) os << e.u << ',' << e.v << ',' << e.conductance << '\n';
    return os.str();
}

FiniteNetwork network_from_csv(const std::string& csv) {
    FiniteNetwork net;
    std::unordered_set<NodeId> ids;
    std::istringstream is(csv);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("u_id", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        std::istringstream ls(line);
        NetworkEdge e;
        char c1 = 0, c2 = 0;
        if (!(ls >> e.u >> c1 >> e.v >> c2 >> e.conductance) || c1 != ',' || c2 != ',')
            throw std::domain_error("network_from_csv: malformed line: " + line);
        net.edges.push_back(e);
        ids.insert(e.u);
        ids.insert(e.v);
    }
    net.vertices.assign(ids.begin(), ids.end());
    std::sort(net.vertices.begin(), net.vertices.end());
    return net;
}

} // namespace drift
