#include "drift/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "drift/loop_erase.hpp"
#include "drift/rng.hpp"
#include "drift/stats.hpp"
#include "drift/walk.hpp"
#include "drift/wilson.hpp"

namespace drift {

namespace {

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    return splitmix64(state);
}

void check_vertex_dim(const LatticeParams& params, const Vertex& v, const char* what) {
    if (v.x.size() != static_cast<std::size_t>(params.d)) {
        throw std::domain_error(std::string(what) + ": vertex has wrong transverse dimension");
    }
}

// ---- packed vertex tables ----------------------------------------------
//
// Hot sampling loops key their visit tables on an exact 63-bit encoding of
// the lattice point instead of hashing a heap-backed Vertex.  Budgets per
// dimension leave generous slack around the walk's reachable range; a walk
// that somehow leaves the encodable window raises instead of corrupting
// counts, and callers fall back to ordinary maps when the horizon is too
// large to encode (or d > 3).

struct CoordPacker {
    bool valid = false;
    int d = 0;
    int x_bits = 0;
    std::int64_t n_base = 0, n_half = 0;
    std::int64_t x_half = 0;
    std::vector<std::int64_t> x_base;

    CoordPacker(const LatticeParams& params, const std::vector<Vertex>& anchors,
                std::int64_t horizon) {
        d = params.d;
        if (d < 1 || d > 3 || anchors.empty()) return;
        int n_bits = d == 1 ? 37 : (d == 2 ? 29 : 24);
        x_bits = d == 1 ? 26 : (d == 2 ? 17 : 13);
        n_half = std::int64_t{1} << (n_bits - 1);
        x_half = std::int64_t{1} << (x_bits - 1);

        std::int64_t n_lo = anchors[0].n, n_hi = anchors[0].n;
        x_base.assign(static_cast<std::size_t>(d), 0);
        for (const auto& a : anchors) {
            n_lo = std::min(n_lo, a.n);
            n_hi = std::max(n_hi, a.n);
        }
        for (int j = 0; j < d; ++j) {
            std::int64_t lo = anchors[0].x[static_cast<std::size_t>(j)];
            std::int64_t hi = lo;
            for (const auto& a : anchors) {
                lo = std::min<std::int64_t>(lo, a.x[static_cast<std::size_t>(j)]);
                hi = std::max<std::int64_t>(hi, a.x[static_cast<std::size_t>(j)]);
            }
            x_base[static_cast<std::size_t>(j)] = (lo + hi) / 2;
            if (hi - lo > x_half) return;  // anchors too far apart to encode
        }
        n_base = (n_lo + n_hi) / 2 + horizon / 2;  // drift pushes n upward
        // the walk can cover at most `horizon` levels from an anchor
        if (n_hi + horizon + 2 - n_base >= n_half) return;
        if (n_base - (n_lo - horizon - 2) > n_half) return;
        valid = true;
    }

    std::uint64_t pack(const Vertex& v) const {
        std::int64_t un = v.n - n_base + n_half;
        std::uint64_t key = static_cast<std::uint64_t>(un);
        for (int j = 0; j < d; ++j) {
            std::int64_t ux = static_cast<std::int64_t>(v.x[static_cast<std::size_t>(j)]) -
                              x_base[static_cast<std::size_t>(j)] + x_half;
            if (ux < 0 || ux >= 2 * x_half) {
                throw std::runtime_error("packed table: walk left the encodable window");
            }
            key = (key << x_bits) | static_cast<std::uint64_t>(ux);
        }
        if (un < 0 || un >= 2 * n_half) {
            throw std::runtime_error("packed table: walk left the encodable window");
        }
        return key;
    }
};

// Open-addressing key -> int64 map with O(1) epoch clear.
class PackedTable {
public:
    void reset(std::size_t hint) {
        std::size_t want = 16;
        while (want < 2 * hint + 1) want <<= 1;
        if (keys_.size() < want) {
            keys_.assign(want, 0);
            vals_.assign(want, 0);
            stamps_.assign(want, 0);
            epoch_ = 0;
        }
        if (epoch_ == std::numeric_limits<std::uint32_t>::max()) {
            std::fill(stamps_.begin(), stamps_.end(), 0u);
            epoch_ = 0;
        }
        ++epoch_;
        used_ = 0;
    }

    std::int64_t& slot(std::uint64_t key) {
        std::size_t mask = keys_.size() - 1;
        std::uint64_t h = key + 0x9E3779B97F4A7C15ULL;
        std::size_t i = static_cast<std::size_t>(splitmix64(h)) & mask;
        while (true) {
            if (stamps_[i] != epoch_) {
                stamps_[i] = epoch_;
                keys_[i] = key;
                vals_[i] = 0;
                if (++used_ * 2 > keys_.size()) {
                    grow();
                    return slot(key);
                }
                return vals_[i];
            }
            if (keys_[i] == key) return vals_[i];
            i = (i + 1) & mask;
        }
    }

    std::int64_t lookup(std::uint64_t key) const {
        std::size_t mask = keys_.size() - 1;
        std::uint64_t h = key + 0x9E3779B97F4A7C15ULL;
        std::size_t i = static_cast<std::size_t>(splitmix64(h)) & mask;
        while (stamps_[i] == epoch_) {
            if (keys_[i] == key) return vals_[i];
            i = (i + 1) & mask;
        }
        return 0;
    }

    std::size_t size() const { return used_; }

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t i = 0; i < keys_.size(); ++i) {
            if (stamps_[i] == epoch_) f(keys_[i], vals_[i]);
        }
    }

private:
    void grow() {
        std::vector<std::uint64_t> keys;
        std::vector<std::int64_t> vals;
        keys.reserve(used_);
        vals.reserve(used_);
        for_each([&](std::uint64_t k, std::int64_t v) {
            keys.push_back(k);
            vals.push_back(v);
        });
        std::size_t want = keys_.size() * 2;
        keys_.assign(want, 0);
        vals_.assign(want, 0);
        stamps_.assign(want, 0);
        epoch_ = 1;
        used_ = 0;
        for (std::size_t i = 0; i < keys.size(); ++i) slot(keys[i]) = vals[i];
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::int64_t> vals_;
    std::vector<std::uint32_t> stamps_;
    std::uint32_t epoch_ = 0;
    std::size_t used_ = 0;
};

// Same jump scheme as loop_erase, on packed keys.
void packed_loop_erase(const std::vector<std::uint64_t>& path, PackedTable& scratch,
                       std::vector<std::uint64_t>& out) {
    scratch.reset(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        scratch.slot(path[i]) = static_cast<std::int64_t>(i);
    }
    out.clear();
    std::size_t i = 0;
    while (i < path.size()) {
        out.push_back(path[i]);
        i = static_cast<std::size_t>(scratch.lookup(path[i])) + 1;
    }
}

struct PairTally {
    std::uint64_t hits = 0;     // samples where the event fired
    RunningStat pair_count;     // per-sample collision / hit counts
    double sum_sq = 0.0;        // raw second moment accumulator
};

// ---- intersections -------------------------------------------------------

void intersections_sample_packed(const StepKernel& kernel, const CoordPacker& packer,
                                 const Vertex& start_a, const Vertex& start_b,
                                 std::int64_t horizon, RngStream& sa, RngStream& sb,
                                 PackedTable& table, std::uint64_t& out_k) {
    table.reset(static_cast<std::size_t>(horizon) + 1);
    Vertex pos = start_a;
    for (std::int64_t t = 0;; ++t) {
        table.slot(packer.pack(pos)) += 1;
        if (t == horizon) break;
        kernel.advance(pos, sa);
    }
    std::uint64_t k = 0;
    pos = start_b;
    for (std::int64_t t = 0;; ++t) {
        k += static_cast<std::uint64_t>(table.lookup(packer.pack(pos)));
        if (t == horizon) break;
        kernel.advance(pos, sb);
    }
    out_k = k;
}

void intersections_sample_map(const StepKernel& kernel, const Vertex& start_a,
                              const Vertex& start_b, std::int64_t horizon, RngStream& sa,
                              RngStream& sb, std::uint64_t& out_k) {
    std::unordered_map<Vertex, std::int64_t, VertexHash> table;
    table.reserve(static_cast<std::size_t>(horizon) + 1);
    Vertex pos = start_a;
    for (std::int64_t t = 0;; ++t) {
        ++table[pos];
        if (t == horizon) break;
        kernel.advance(pos, sa);
    }
    std::uint64_t k = 0;
    pos = start_b;
    for (std::int64_t t = 0;; ++t) {
        auto it = table.find(pos);
        if (it != table.end()) k += static_cast<std::uint64_t>(it->second);
        if (t == horizon) break;
        kernel.advance(pos, sb);
    }
    out_k = k;
}

// ---- connectivity ---------------------------------------------------------

// Branch of the forest at `start`: loop-erasure of the horizon-truncated
// walk.  Probing walk from z then counts its visits to the branch.
void connectivity_sample_packed(const StepKernel& kernel, const CoordPacker& packer,
                                const Vertex& z, std::int64_t horizon, RngStream& sa,
                                RngStream& sb, PackedTable& table, PackedTable& scratch,
                                std::vector<std::uint64_t>& path_keys,
                                std::vector<std::uint64_t>& branch_keys, std::uint64_t& out_k) {
    path_keys.clear();
    Vertex pos = origin(static_cast<int>(z.x.size()));
    for (std::int64_t t = 0;; ++t) {
        path_keys.push_back(packer.pack(pos));
        if (t == horizon) break;
        kernel.advance(pos, sa);
    }
    packed_loop_erase(path_keys, scratch, branch_keys);
    table.reset(branch_keys.size());
    for (std::uint64_t key : branch_keys) table.slot(key) = 1;

    std::uint64_t k = 0;
    pos = z;
    for (std::int64_t t = 0;; ++t) {
        k += static_cast<std::uint64_t>(table.lookup(packer.pack(pos)));
        if (t == horizon) break;
        kernel.advance(pos, sb);
    }
    out_k = k;
}

void connectivity_sample_map(const StepKernel& kernel, const Vertex& z, std::int64_t horizon,
                             RngStream& sa, RngStream& sb, std::uint64_t& out_k) {
    Path path;
    path.reserve(static_cast<std::size_t>(horizon) + 1);
    Vertex pos = origin(static_cast<int>(z.x.size()));
    path.push_back(pos);
    for (std::int64_t t = 0; t < horizon; ++t) {
        kernel.advance(pos, sa);
        path.push_back(pos);
    }
    Path branch = loop_erase(path);
    std::unordered_set<Vertex, VertexHash> in_branch(branch.begin(), branch.end());

    std::uint64_t k = 0;
    pos = z;
    for (std::int64_t t = 0;; ++t) {
        if (in_branch.count(pos)) ++k;
        if (t == horizon) break;
        kernel.advance(pos, sb);
    }
    out_k = k;
}

// ---- truncated forests for spread / separation ----------------------------

// Wilson rooted at infinity, grown lazily from the starts the experiment
// actually touches.  Stream per start depends only on (forest_seed, start),
// matching wsf_rooted_at_infinity.
struct TruncForest {
    std::unordered_map<Vertex, int, VertexHash> comp;
    int next_id = 0;
};

struct GrownBranch {
    int comp_id = 0;
    Path branch;
};

GrownBranch grow_branch(const StepKernel& kernel, TruncForest& forest, const Vertex& start,
                        std::int64_t horizon, std::uint64_t forest_seed) {
    auto it = forest.comp.find(start);
    if (it != forest.comp.end()) return {it->second, Path{start}};

    RngStream stream = RngStream::derived(forest_seed, vertex_key(start));
    Path path{start};
    Vertex cur = start;
    int hit_comp = -1;
    for (std::int64_t t = 0; t < horizon; ++t) {
        kernel.advance(cur, stream);
        path.push_back(cur);
        auto h = forest.comp.find(cur);
        if (h != forest.comp.end()) {
            hit_comp = h->second;
            break;
        }
    }
    GrownBranch out;
    out.branch = loop_erase(path);
    out.comp_id = hit_comp >= 0 ? hit_comp : forest.next_id++;
    for (const auto& v : out.branch) forest.comp.emplace(v, out.comp_id);
    return out;
}

// Up to `cap` vertices from the closed neighborhood of the `seeds` members
// nearest `target` (ties broken lexicographically): the candidate re-entry
// points for the next forest hop.
std::vector<Vertex> frontier_near(const std::vector<Vertex>& seeds, const Vertex& target,
                                  std::size_t seed_cap, std::size_t cap) {
    auto closer = [&target](const Vertex& a, const Vertex& b) {
        std::int64_t ea = eta_sq(sub(a, target)), eb = eta_sq(sub(b, target));
        if (ea != eb) return ea < eb;
        return a < b;
    };
    std::vector<Vertex> base = seeds;
    if (base.size() > seed_cap) {
        std::nth_element(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(seed_cap),
                         base.end(), closer);
        base.resize(seed_cap);
    }
    std::vector<Vertex> cand;
    std::unordered_set<Vertex, VertexHash> seen;
    int deg = 2 * (static_cast<int>(target.x.size()) + 1);
    for (const auto& u : base) {
        if (seen.insert(u).second) cand.push_back(u);
        for (int dir = 0; dir < deg; ++dir) {
            Vertex v = neighbor(u, dir);
            if (seen.insert(v).second) cand.push_back(v);
        }
    }
    std::sort(cand.begin(), cand.end(), closer);
    if (cand.size() > cap) cand.resize(cap);
    return cand;
}

// ---- output ---------------------------------------------------------------

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

} // namespace

void ExperimentConfig::validate() const {
    params.validate();
    box.validate();
    if (samples < 1) throw std::domain_error("experiment config: samples must be >= 1");
    if (horizon < 1) throw std::domain_error("experiment config: horizon must be >= 1");
    if (k0 < 1) throw std::domain_error("experiment config: k0 must be >= 1");
}

void EstimateRow::put(const std::string& key, double v) { meta.emplace_back(key, v); }

std::optional<double> EstimateRow::get(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return v;
    }
    return std::nullopt;
}

EstimateRow intersections_experiment(const ExperimentConfig& cfg, const Vertex& start_a,
                                     const Vertex& start_b) {
    cfg.validate();
    check_vertex_dim(cfg.params, start_a, "intersections_experiment");
    check_vertex_dim(cfg.params, start_b, "intersections_experiment");

    StepKernel kernel(cfg.params);
    CoordPacker packer(cfg.params, {start_a, start_b}, cfg.horizon);
    PackedTable table;

    std::uint64_t share = 0;
    RunningStat pairs;
    for (std::int64_t s = 0; s < cfg.samples; ++s) {
        RngStream sa = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(2 * s));
        RngStream sb = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(2 * s + 1));
        std::uint64_t k = 0;
        if (packer.valid) {
            intersections_sample_packed(kernel, packer, start_a, start_b, cfg.horizon, sa, sb,
                                        table, k);
        } else {
            intersections_sample_map(kernel, start_a, start_b, cfg.horizon, sa, sb, k);
        }
        if (k > 0) ++share;
        pairs.add(static_cast<double>(k));
    }

    EstimateRow row;
    row.label = "intersections";
    row.value = static_cast<double>(share) / static_cast<double>(cfg.samples);
    row.std_error = binomial_std_error(share, static_cast<std::uint64_t>(cfg.samples));
    row.put("samples", static_cast<double>(cfg.samples));
    row.put("horizon", static_cast<double>(cfg.horizon));
    row.put("mean_pairs", pairs.mean);
    row.put("mean_pairs_se", pairs.std_error());
    row.put("truncation_bound", 0.0);  // the estimand is horizon-indexed
    return row;
}

EstimateRow connectivity_experiment(const ExperimentConfig& cfg, const Vertex& z) {
    cfg.validate();
    if (cfg.params.d < 3) {
        throw std::domain_error("connectivity_experiment: requires d >= 3");
    }
    check_vertex_dim(cfg.params, z, "connectivity_experiment");

    StepKernel kernel(cfg.params);
    Vertex o = origin(cfg.params.d);
    CoordPacker packer(cfg.params, {o, z}, cfg.horizon);
    PackedTable table, scratch;
    std::vector<std::uint64_t> path_keys, branch_keys;

    std::uint64_t connected = 0;
    RunningStat k_stat;
    double k_sq_sum = 0.0;
    for (std::int64_t s = 0; s < cfg.samples; ++s) {
        RngStream sa = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(2 * s));
        RngStream sb = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(2 * s + 1));
        std::uint64_t k = 0;
        if (packer.valid) {
            connectivity_sample_packed(kernel, packer, z, cfg.horizon, sa, sb, table, scratch,
                                       path_keys, branch_keys, k);
        } else {
            connectivity_sample_map(kernel, z, cfg.horizon, sa, sb, k);
        }
        if (k > 0) ++connected;
        double kd = static_cast<double>(k);
        k_stat.add(kd);
        k_sq_sum += kd * kd;
    }

    double n = static_cast<double>(cfg.samples);
    double p_hat = static_cast<double>(connected) / n;
    double k2 = k_sq_sum / n;
    EstimateRow row;
    row.label = "connectivity";
    row.value = p_hat;
    row.std_error = binomial_std_error(connected, static_cast<std::uint64_t>(cfg.samples));
    row.put("samples", n);
    row.put("horizon", static_cast<double>(cfg.horizon));
    row.put("eta", eta(z));
    row.put("mean_k", k_stat.mean);
    row.put("mean_k_se", k_stat.std_error());
    row.put("k_second_moment", k2);
    row.put("second_moment_bound", k2 > 0.0 ? k_stat.mean * k_stat.mean / (4.0 * k2) : 0.0);
    // conservative: a sample that failed to connect within the horizon might
    // connect with unbounded time
    row.put("truncation_bound", 1.0 - p_hat);
    return row;
}

std::vector<EstimateRow> crossings_experiment(const ExperimentConfig& cfg, int p_lo, int p_hi) {
    cfg.validate();
    if (cfg.params.d != 2) throw std::domain_error("crossings_experiment: requires d == 2");
    if (p_lo < 1 || p_lo > p_hi) {
        throw std::domain_error("crossings_experiment: need 1 <= p_lo <= p_hi");
    }
    if ((static_cast<std::int64_t>(p_hi) + 1) * cfg.k0 > 18) {
        throw std::domain_error("crossings_experiment: scale 9^((p_hi+1) k0) overflows");
    }

    std::vector<std::int64_t> pow9(19, 1);
    for (std::size_t i = 1; i < pow9.size(); ++i) pow9[i] = 9 * pow9[i - 1];
    auto in_u = [&](const Vertex& v, std::int64_t xx, int p) {
        return std::llabs(v.n) <= 4 * pow9[static_cast<std::size_t>(p * cfg.k0)] &&
               xx <= pow9[static_cast<std::size_t>((p + 1) * cfg.k0)];
    };
    auto in_d = [&](const Vertex& v, std::int64_t xx, int p) {
        std::int64_t s = pow9[static_cast<std::size_t>(p * cfg.k0)];
        return v.n > s && v.n <= 2 * s && xx <= s;
    };

    StepKernel kernel(cfg.params);
    Vertex o = origin(cfg.params.d);
    CoordPacker packer(cfg.params, {o}, cfg.horizon);
    if (!packer.valid) {
        throw std::domain_error("crossings_experiment: horizon too large to encode sections");
    }

    int np = p_hi - p_lo + 1;
    std::vector<PackedTable> sets_a(static_cast<std::size_t>(np));
    std::vector<PackedTable> sets_b(static_cast<std::size_t>(np));
    std::vector<std::uint64_t> crossed(static_cast<std::size_t>(np), 0);
    std::vector<std::uint64_t> truncated(static_cast<std::size_t>(np), 0);

    // one walk: record, per requested p, the section [T_{p-1}, T_p] clipped
    // to the slab D_{p k0}; returns the first section the horizon cut off
    auto run_walk = [&](RngStream& stream, std::vector<PackedTable>& sets) {
        Vertex pos = o;
        std::int64_t xx = 0;
        std::int64_t steps = 0;
        int cut_from = p_hi + 1;
        for (std::size_t i = 0; i < sets.size(); ++i) sets[i].reset(64);
        for (int p = 1; p <= p_hi; ++p) {
            PackedTable* set = p >= p_lo ? &sets[static_cast<std::size_t>(p - p_lo)] : nullptr;
            while (true) {
                if (set && in_d(pos, xx, p)) set->slot(packer.pack(pos)) = 1;
                if (!in_u(pos, xx, p)) break;  // pos is the hit of F_p
                if (steps == cfg.horizon) return std::min(cut_from, p);
                kernel.advance(pos, stream);
                ++steps;
                xx = 0;
                for (std::int32_t c : pos.x) xx += static_cast<std::int64_t>(c) * c;
            }
        }
        return cut_from;
    };

    for (std::int64_t s = 0; s < cfg.samples; ++s) {
        RngStream sa = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(2 * s));
        RngStream sb = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(2 * s + 1));
        int cut_a = run_walk(sa, sets_a);
        int cut_b = run_walk(sb, sets_b);
        for (int p = p_lo; p <= p_hi; ++p) {
            std::size_t i = static_cast<std::size_t>(p - p_lo);
            if (p >= std::min(cut_a, cut_b)) ++truncated[i];
            const PackedTable& small = sets_a[i].size() <= sets_b[i].size() ? sets_a[i] : sets_b[i];
            const PackedTable& big = sets_a[i].size() <= sets_b[i].size() ? sets_b[i] : sets_a[i];
            bool hit = false;
            small.for_each([&](std::uint64_t key, std::int64_t) {
                if (!hit && big.lookup(key) != 0) hit = true;
            });
            if (hit) ++crossed[i];
        }
    }

    std::vector<EstimateRow> rows;
    for (int p = p_lo; p <= p_hi; ++p) {
        std::size_t i = static_cast<std::size_t>(p - p_lo);
        EstimateRow row;
        row.label = "crossings_p=" + std::to_string(p);
        row.value = static_cast<double>(crossed[i]) / static_cast<double>(cfg.samples);
        row.std_error = binomial_std_error(crossed[i], static_cast<std::uint64_t>(cfg.samples));
        row.put("p", static_cast<double>(p));
        row.put("k0", static_cast<double>(cfg.k0));
        row.put("samples", static_cast<double>(cfg.samples));
        row.put("truncation_bound",
                static_cast<double>(truncated[i]) / static_cast<double>(cfg.samples));
        rows.push_back(std::move(row));
    }
    return rows;
}

EstimateRow spread_bound_experiment(const ExperimentConfig& cfg, const std::vector<Vertex>& w) {
    cfg.validate();
    if (cfg.params.d < 3) throw std::domain_error("spread_bound_experiment: requires d >= 3");
    if (w.empty() || w.size() > 5) {
        throw std::domain_error("spread_bound_experiment: need 1 <= |w| <= 5");
    }
    for (const auto& v : w) check_vertex_dim(cfg.params, v, "spread_bound_experiment");

    StepKernel kernel(cfg.params);
    std::uint64_t joined = 0;
    for (std::int64_t s = 0; s < cfg.samples; ++s) {
        std::uint64_t fseed = sample_seed(cfg.seed, static_cast<std::uint64_t>(s));
        TruncForest forest;
        bool all_same = true;
        int first_id = -1;
        for (const auto& v : w) {
            GrownBranch g = grow_branch(kernel, forest, v, cfg.horizon, fseed);
            if (first_id < 0) first_id = g.comp_id;
            all_same = all_same && g.comp_id == first_id;
        }
        if (all_same) ++joined;
    }

    double p_hat = static_cast<double>(joined) / static_cast<double>(cfg.samples);
    EstimateRow row;
    row.label = "spread_bound";
    row.value = p_hat;
    row.std_error = binomial_std_error(joined, static_cast<std::uint64_t>(cfg.samples));
    row.put("samples", static_cast<double>(cfg.samples));
    row.put("horizon", static_cast<double>(cfg.horizon));
    row.put("spread", w.size() >= 2 ? spread(w).product : 1.0);
    row.put("truncation_bound", 1.0 - p_hat);
    return row;
}

EstimateRow separation_experiment(const ExperimentConfig& cfg, const Vertex& z,
                                  const Vertex& z_prime, int m) {
    cfg.validate();
    if (cfg.params.d < 3) throw std::domain_error("separation_experiment: requires d >= 3");
    if (m < 0) throw std::domain_error("separation_experiment: m must be >= 0");
    check_vertex_dim(cfg.params, z, "separation_experiment");
    check_vertex_dim(cfg.params, z_prime, "separation_experiment");

    constexpr std::size_t kSeedCap = 16;
    constexpr std::size_t kFrontierCap = 64;
    StepKernel kernel(cfg.params);

    std::uint64_t reached = 0;
    for (std::int64_t s = 0; s < cfg.samples; ++s) {
        std::uint64_t base = static_cast<std::uint64_t>(s) * (static_cast<std::uint64_t>(m) + 1);
        bool event = false;
        if (m == 0) {
            TruncForest forest;
            std::uint64_t fseed = sample_seed(cfg.seed, base);
            int a = grow_branch(kernel, forest, z, cfg.horizon, fseed).comp_id;
            int b = grow_branch(kernel, forest, z_prime, cfg.horizon, fseed).comp_id;
            event = a == b;
        } else {
            TruncForest f0;
            std::vector<Vertex> reach =
                grow_branch(kernel, f0, z, cfg.horizon, sample_seed(cfg.seed, base)).branch;
            for (int level = 1; level < m; ++level) {
                TruncForest fi;
                std::uint64_t fseed =
                    sample_seed(cfg.seed, base + static_cast<std::uint64_t>(level));
                std::vector<Vertex> next;
                for (const auto& u :
                     frontier_near(reach, z_prime, kSeedCap, kFrontierCap)) {
                    GrownBranch g = grow_branch(kernel, fi, u, cfg.horizon, fseed);
                    next.insert(next.end(), g.branch.begin(), g.branch.end());
                }
                reach = std::move(next);
            }
            TruncForest fm;
            std::uint64_t fseed = sample_seed(cfg.seed, base + static_cast<std::uint64_t>(m));
            int target = grow_branch(kernel, fm, z_prime, cfg.horizon, fseed).comp_id;
            for (const auto& u : frontier_near(reach, z_prime, kSeedCap, kFrontierCap)) {
                if (grow_branch(kernel, fm, u, cfg.horizon, fseed).comp_id == target) {
                    event = true;
                    break;
                }
            }
        }
        if (event) ++reached;
    }

    double p_hat = static_cast<double>(reached) / static_cast<double>(cfg.samples);
    EstimateRow row;
    row.label = "separation_m=" + std::to_string(m);
    row.value = p_hat;
    row.std_error = binomial_std_error(reached, static_cast<std::uint64_t>(cfg.samples));
    row.put("samples", static_cast<double>(cfg.samples));
    row.put("horizon", static_cast<double>(cfg.horizon));
    row.put("m", static_cast<double>(m));
    row.put("frontier_cap", static_cast<double>(kFrontierCap));
    row.put("truncation_bound", 1.0 - p_hat);
    return row;
}

std::vector<EstimateRow> one_end_diagnostic(const ExperimentConfig& cfg, int p_lo, int p_hi) {
    cfg.validate();
    if (p_lo < 1 || p_lo > p_hi) {
        throw std::domain_error("one_end_diagnostic: need 1 <= p_lo <= p_hi");
    }
    if (!cfg.box.wired) {
        throw std::domain_error("one_end_diagnostic: the window must be wired");
    }
    Vertex o = origin(cfg.params.d);
    if (!cfg.box.contains(o)) {
        throw std::domain_error("one_end_diagnostic: window must contain the origin");
    }

    auto covered = [&](int p) {
        return cfg.box.n_min <= -static_cast<std::int64_t>(p) &&
               static_cast<std::int64_t>(p) <= cfg.box.n_max && p <= cfg.box.x_radius;
    };

    std::vector<int> active;
    for (int p = p_lo; p <= p_hi; ++p) {
        if (covered(p)) active.push_back(p);
    }
    std::vector<std::uint64_t> multi(active.size(), 0);
    if (!active.empty()) {
        for (std::int64_t s = 0; s < cfg.samples; ++s) {
            Forest tree = ust_finite(cfg.params, cfg.box, std::nullopt, {},
                                     sample_seed(cfg.seed, static_cast<std::uint64_t>(s)));
            for (std::size_t i = 0; i < active.size(); ++i) {
                if (cutset_crossings(tree, o, active[i]) >= 2) ++multi[i];
            }
        }
    }

    std::vector<EstimateRow> rows;
    std::size_t ai = 0;
    for (int p = p_lo; p <= p_hi; ++p) {
        EstimateRow row;
        row.label = "one_end_p=" + std::to_string(p);
        row.put("p", static_cast<double>(p));
        if (!covered(p)) {
            row.put("samples", 0.0);
            row.put("skipped", 1.0);
        } else {
            row.value = static_cast<double>(multi[ai]) / static_cast<double>(cfg.samples);
            row.std_error =
                binomial_std_error(multi[ai], static_cast<std::uint64_t>(cfg.samples));
            row.put("samples", static_cast<double>(cfg.samples));
            row.put("skipped", 0.0);
            ++ai;
        }
        row.put("truncation_bound", 0.0);  // windowed trees are sampled exactly
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string rows_to_csv(const std::vector<EstimateRow>& rows) {
    std::vector<std::string> keys;
    for (const auto& row : rows) {
        for (const auto& [k, v] : row.meta) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
        }
    }
    std::ostringstream out;
    out << "label,value,std_error";
    for (const auto& k : keys) out << ',' << k;
    out << '\n';
    for (const auto& row : rows) {
        out << row.label << ',' << format_double(row.value) << ','
            << format_double(row.std_error);
        for (const auto& k : keys) {
            out << ',';
            if (auto v = row.get(k)) out << format_double(*v);
        }
        out << '\n';
    }
    return out.str();
}

std::string rows_to_json(const std::vector<EstimateRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json obj;
        obj["label"] = row.label;
        obj["value"] = row.value;
        obj["std_error"] = row.std_error;
        nlohmann::json meta = nlohmann::json::object();
        for (const auto& [k, v] : row.meta) meta[k] = v;
        obj["meta"] = meta;
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

void write_rows(const ExperimentConfig& cfg, const std::vector<EstimateRow>& rows) {
    if (cfg.output_path.empty()) return;
    std::ofstream out(cfg.output_path);
    if (!out) throw std::runtime_error("cannot open output path: " + cfg.output_path);
    out << (cfg.format == OutputFormat::csv ? rows_to_csv(rows) : rows_to_json(rows));
}

} // namespace drift
