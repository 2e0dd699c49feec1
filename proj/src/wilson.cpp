#include "drift/wilson.hpp"

#include "drift/loop_erase.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace drift {

double StackDiagram::pop(const Vertex& v) {
    auto it = live_.find(v);
    if (it == live_.end())
        it = live_.emplace(v, RngStream::derived(seed_, vertex_key(v))).first;
    ++pops_[v];
    return it->second.u01();
}

std::uint64_t StackDiagram::pop_count(const Vertex& v) const {
    auto it = pops_.find(v);
    return it == pops_.end() ? 0 : it->second;
}

namespace {

using VertexSet = std::unordered_set<Vertex, VertexHash>;

// ordering prefix first, then the remaining window vertices lexicographically
std::vector<Vertex> effective_order(const LatticeParams& params, const FiniteBox& box,
                                    const std::vector<Vertex>& ordering) {
    std::vector<Vertex> order;
    VertexSet listed;
    for (const auto& v : ordering) {
        if (!box.contains(v)) throw std::domain_error("ordering vertex outside the window");
        if (listed.insert(v).second) order.push_back(v);
    }
    for (auto& v : box.interior_vertices(params.d))
        if (!listed.count(v)) order.push_back(std::move(v));
    return order;
}

// Maps one uniform draw to a step, weighting each in-box direction (plus,
// when wired, the exit mass) by its edge conductance.  The map depends only
// on the local geometry at `from`, never on the forest, which is what makes
// cycle popping order-independent.
struct BoxStep {
    const LatticeParams& params;
    const FiniteBox& box;
    double exp_lambda;

    BoxStep(const LatticeParams& p, const FiniteBox& b)
        : params(p), box(b), exp_lambda(std::exp(p.lambda)) {}

    // wired: full-lattice kernel; landing outside means absorption
    // free: renormalized over the directions that stay inside
    std::pair<Vertex, bool> operator()(const Vertex& from, double u) const {  // (target, absorbed)
        int deg = degree(params);
        if (box.wired) {
            double denom = 2.0 * params.d + 1.0 + exp_lambda;
            double up = exp_lambda / denom, other = 1.0 / denom;
            Vertex to;
            if (u < up) {
                to = neighbor(from, 0);
            } else {
                int k = static_cast<int>((u - up) / other);
                if (k > deg - 2) k = deg - 2;  // guard roundoff at u ~ 1
                to = neighbor(from, 1 + k);
            }
            return {to, !box.contains(to)};
        }
        double total = 0.0;
        for (int dir = 0; dir < deg; ++dir)
            if (box.contains(neighbor(from, dir))) total += dir == 0 ? exp_lambda : 1.0;
        if (total == 0.0) throw std::domain_error("ust_finite: window vertex has no in-window neighbor");
        double target = u * total, acc = 0.0;
        Vertex last;
        for (int dir = 0; dir < deg; ++dir) {
            Vertex to = neighbor(from, dir);
            if (!box.contains(to)) continue;
            acc += dir == 0 ? exp_lambda : 1.0;
            if (target < acc) return {to, false};
            last = to;
        }
        return {last, false};  // roundoff pushed u*total to the top of the range
    }
};

void attach_branch(Forest& forest, VertexSet& in_tree, const Path& branch, bool to_root,
                   bool truncated_flag) {
    for (std::size_t i = 0; i + 1 < branch.size(); ++i) {
        forest.parent[branch[i]] = branch[i + 1];
        in_tree.insert(branch[i]);
    }
    if (to_root) {
        forest.parent[branch.back()] = std::nullopt;
        in_tree.insert(branch.back());
    }
    forest.branches.push_back(branch);
    forest.truncated.push_back(truncated_flag);
}

} // namespace

Forest ust_finite(const LatticeParams& params, const FiniteBox& box,
                  const std::optional<Vertex>& root, const std::vector<Vertex>& ordering,
                  std::uint64_t seed) {
    params.validate();
    box.validate();
    if (box.wired) {
        if (root) throw std::domain_error("ust_finite: a wired window is rooted at its boundary vertex");
    } else {
        if (!root) throw std::domain_error("ust_finite: a free window needs a root vertex");
        if (!box.contains(*root)) throw std::domain_error("ust_finite: root outside the window");
    }

    Forest forest;
    forest.d = params.d;
    forest.box = box;
    forest.order = effective_order(params, box, ordering);

    VertexSet in_tree;
    if (root) {
        forest.parent[*root] = std::nullopt;
        in_tree.insert(*root);
    }

    StackDiagram stacks(seed);
    BoxStep boxstep(params, box);
    const std::uint64_t pop_guard = 1ULL << 40;
    std::uint64_t pops = 0;

    for (const auto& start : forest.order) {
        if (in_tree.count(start)) continue;
        Path path{start};
        Vertex cur = start;
        bool absorbed = false;
        while (!in_tree.count(cur)) {
            if (++pops > pop_guard) throw std::runtime_error("ust_finite: walk failed to attach");
            auto [to, exit] = boxstep(cur, stacks.pop(cur));
            if (exit) {
                absorbed = true;
                break;
            }
            cur = to;
            path.push_back(cur);
        }
        attach_branch(forest, in_tree, loop_erase(path), absorbed, false);
    }
    return forest;
}

Forest wsf_rooted_at_infinity(const LatticeParams& params, const FiniteBox& region,
                              const std::vector<Vertex>& ordering, std::uint64_t horizon,
                              std::uint64_t seed) {
    params.validate();
    region.validate();
    if (horizon == 0) throw std::domain_error("wsf_rooted_at_infinity: horizon must be positive");

    Forest forest;
    forest.d = params.d;
    forest.box = region;
    forest.order = effective_order(params, region, ordering);

    VertexSet in_tree;
    StepKernel kernel(params);

    for (const auto& start : forest.order) {
        if (in_tree.count(start)) continue;
        RngStream stream = RngStream::derived(seed, vertex_key(start));  // fresh per start
        Path path{start};
        Vertex cur = start;
        bool hit = false;
        for (std::uint64_t t = 0; t < horizon; ++t) {
            cur = kernel(cur, stream);
            path.push_back(cur);
            if (in_tree.count(cur)) {
                hit = true;
                break;
            }
        }
        attach_branch(forest, in_tree, loop_erase(path), !hit, !hit);
    }
    return forest;
}

Vertex component_of(const Forest& forest, const Vertex& v) {
    if (!forest.parent.count(v)) throw std::domain_error("component_of: vertex not in forest");

    std::unordered_map<Vertex, std::vector<Vertex>, VertexHash> adj;
    for (const auto& [child, par] : forest.parent) {
        if (!par) continue;
        adj[child].push_back(*par);
        adj[*par].push_back(child);
    }

    Vertex best = v;
    VertexSet seen{v};
    std::deque<Vertex> queue{v};
    while (!queue.empty()) {
        Vertex cur = queue.front();
        queue.pop_front();
        if (cur < best) best = cur;
        auto it = adj.find(cur);
        if (it == adj.end()) continue;
        for (const auto& next : it->second)
            if (seen.insert(next).second) queue.push_back(next);
    }
    return best;
}

std::uint64_t cutset_crossings(const Forest& forest, const Vertex& z, std::int64_t p) {
    if (p < 1) throw std::domain_error("cutset_crossings: p must be >= 1");
    if (!forest.parent.count(z)) throw std::domain_error("cutset_crossings: center not in forest");
    const FiniteBox& box = forest.box;
    bool covered = box.n_min <= z.n - p && z.n + p <= box.n_max;
    for (auto c : z.x)
        covered = covered && std::llabs(c) + p <= box.x_radius;
    if (!covered) throw std::domain_error("cutset_crossings: window does not cover the cutset cylinder");

    auto outside = [&](const Vertex& v) {
        if (std::llabs(v.n - z.n) > p) return true;
        std::int64_t xx = 0;
        for (std::size_t j = 0; j < v.x.size(); ++j) {
            std::int64_t dx = static_cast<std::int64_t>(v.x[j]) - z.x[j];
            xx += dx * dx;
        }
        return xx > p * p;
    };

    std::unordered_map<Vertex, std::vector<Vertex>, VertexHash> adj;
    bool z_at_root = false;
    for (const auto& [child, par] : forest.parent) {
        if (!par) {
            if (child == z) z_at_root = true;
            continue;
        }
        adj[child].push_back(*par);
        adj[*par].push_back(child);
    }

    // grow each tree direction at z until it pokes out of the cylinder or
    // reaches a root-sentinel edge (the wired exterior)
    auto escapes = [&](const Vertex& first) {
        VertexSet seen{z, first};
        std::deque<Vertex> queue{first};
        while (!queue.empty()) {
            Vertex cur = queue.front();
            queue.pop_front();
            if (outside(cur) || !forest.parent.at(cur)) return true;
            auto it = adj.find(cur);
            if (it == adj.end()) continue;
            for (const auto& next : it->second)
                if (seen.insert(next).second) queue.push_back(next);
        }
        return false;
    };

    std::uint64_t crossings = z_at_root ? 1 : 0;
    auto it = adj.find(z);
    if (it != adj.end()) {
        for (const auto& first : it->second)
            if (escapes(first)) ++crossings;
    }
    return crossings;
}

std::string to_text(const Forest& forest) {
    std::vector<Vertex> children;
    children.reserve(forest.parent.size());
    for (const auto& [child, par] : forest.parent) {
        (void)par;
        children.push_back(child);
    }
    std::sort(children.begin(), children.end());

    std::ostringstream os;
    auto put = [&os](const Vertex& v) {
        os << v.n;
        for (auto c : v.x) os << ' ' << c;
    };
    for (const auto& child : children) {
        put(child);
        os << " -> ";
        const auto& par = forest.parent.at(child);
        if (par)
            put(*par);
        else
            os << "ROOT";
        os << '\n';
    }
    return os.str();
}

Forest forest_from_text(const std::string& text) {
    Forest forest;
    std::istringstream is(text);
    std::string line;
    int d = -1;
    bool any = false;
    std::int64_t n_min = 0, n_max = 0, x_max = 0;

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        auto arrow = std::find(tokens.begin(), tokens.end(), "->");
        if (arrow == tokens.end()) throw std::domain_error("forest_from_text: missing '->': " + line);
        auto head = static_cast<std::size_t>(arrow - tokens.begin());
        if (d < 0) d = static_cast<int>(head) - 1;
        if (d < 1 || head != static_cast<std::size_t>(d) + 1)
            throw std::domain_error("forest_from_text: inconsistent vertex width: " + line);

        auto parse_vertex = [&](std::size_t at) {
            Vertex v;
            v.n = std::stoll(tokens.at(at));
            for (int j = 0; j < d; ++j)
                v.x.push_back(static_cast<std::int32_t>(std::stoll(tokens.at(at + 1 + static_cast<std::size_t>(j)))));
            return v;
        };
        auto track = [&](const Vertex& v) {
            if (!any) {
                n_min = n_max = v.n;
                any = true;
            }
            n_min = std::min(n_min, v.n);
            n_max = std::max(n_max, v.n);
            for (auto c : v.x) x_max = std::max<std::int64_t>(x_max, std::llabs(c));
        };

        Vertex child = parse_vertex(0);
        track(child);
        if (tokens.size() == head + 2 && tokens[head + 1] == "ROOT") {
            forest.parent[child] = std::nullopt;
        } else if (tokens.size() == head + 2 + static_cast<std::size_t>(d)) {
            Vertex par = parse_vertex(head + 1);
            track(par);
            forest.parent[child] = par;
        } else {
            throw std::domain_error("forest_from_text: malformed parent: " + line);
        }
    }
    if (!any) throw std::domain_error("forest_from_text: no entries");
    forest.d = d;
    forest.box.n_min = n_min;
    forest.box.n_max = n_max;
    forest.box.x_radius = static_cast<std::int32_t>(x_max);
    return forest;
}

} // namespace drift
