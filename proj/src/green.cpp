#include "drift/green.hpp"

#include "drift/rng.hpp"
#include "drift/stats.hpp"
#include "drift/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace drift {

namespace {

// Flat index of v inside the box (lexicographic layout); -1 when outside.
std::ptrdiff_t box_index(const FiniteBox& box, int d, const Vertex& v) {
    if (!box.contains(v)) return -1;
    std::int64_t width = 2 * static_cast<std::int64_t>(box.x_radius) + 1;
    std::int64_t idx = v.n - box.n_min;
    for (int j = 0; j < d; ++j)
        idx = idx * width + (v.x[static_cast<std::size_t>(j)] + box.x_radius);
    return static_cast<std::ptrdiff_t>(idx);
}

struct KernelWeights {
    double up, down, transverse, stay, diag;
};

KernelWeights kernel_weights(const LatticeParams& params) {
    StepDistribution s = step_distribution(params);
    return {s.prob_up, s.prob_down, s.prob_transverse, s.prob_stay, 1.0 - s.prob_stay};
}

} // namespace

double GreenTable::at(const Vertex& v) const {
    std::ptrdiff_t idx = box_index(box, params.d, v);
    return idx < 0 ? 0.0 : values[static_cast<std::size_t>(idx)];
}

GreenTable green_exact(const LatticeParams& params, const FiniteBox& box, const Vertex& source) {
    params.validate();
    box.validate();
    if (source.x.size() != static_cast<std::size_t>(params.d))
        throw std::domain_error("green_exact: source has wrong transverse dimension");
    std::ptrdiff_t src = box_index(box, params.d, source);
    if (src < 0) throw std::domain_error("green_exact: source is not interior to the box");

    std::vector<Vertex> interior = box.interior_vertices(params.d);
    std::size_t count = interior.size();
    int deg = degree(params);

    // Incoming-neighbor table: for (P^T g)(y) the up weight multiplies the
    // vertex below y and vice versa, so store the below/above indices first.
    std::vector<std::int32_t> nb(count * static_cast<std::size_t>(deg), -1);
    for (std::size_t i = 0; i < count; ++i) {
        for (int dir = 0; dir < deg; ++dir) {
            std::ptrdiff_t j = box_index(box, params.d, neighbor(interior[i], dir));
            nb[i * static_cast<std::size_t>(deg) + static_cast<std::size_t>(dir)] =
                j < 0 ? -1 : static_cast<std::int32_t>(j);
        }
    }

    KernelWeights w = kernel_weights(params);
    std::vector<double> g(count, 0.0), g_next(count, 0.0);
    // ||e_source|| = 1; kept tight because exp(lambda n) reweighting in the
    // reversibility identity amplifies absolute error by up to e^{lambda n_max}
    const double target = 1e-13;
    const std::uint64_t max_sweeps = 2000000;
    double residual = 1.0;

    for (std::uint64_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta_sq = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const std::int32_t* nbi = &nb[i * static_cast<std::size_t>(deg)];
            double acc = (static_cast<std::ptrdiff_t>(i) == src) ? 1.0 : 0.0;
            if (nbi[1] >= 0) acc += w.up * g[static_cast<std::size_t>(nbi[1])];
            if (nbi[0] >= 0) acc += w.down * g[static_cast<std::size_t>(nbi[0])];
            for (int dir = 2; dir < deg; ++dir)
                if (nbi[dir] >= 0) acc += w.transverse * g[static_cast<std::size_t>(nbi[dir])];
            acc /= w.diag;
            double diff = acc - g[i];
            delta_sq += diff * diff;
            g_next[i] = acc;
        }
        g.swap(g_next);
        residual = w.diag * std::sqrt(delta_sq);
        if (residual <= target) break;
    }
    if (residual > target)
        throw SolverError("green_exact: Jacobi iteration did not reach the residual target", residual);

    GreenTable table;
    table.params = params;
    table.box = box;
    table.source = source;
    table.values = std::move(g);
    table.solver_residual = residual;
    return table;
}

namespace {

struct VisitTally {
    std::uint64_t visits = 0;
    std::int64_t n_end = 0;
};

// One walk of `horizon` steps counting visits to the target.
VisitTally run_visit_sample(const StepKernel& kernel, const Vertex& source,
                            const Vertex& target, std::uint64_t horizon, RngStream& stream) {
    VisitTally tally;
    Vertex pos = source;
    if (pos == target) ++tally.visits;
    for (std::uint64_t t = 0; t < horizon; ++t) {
        pos = kernel(pos, stream);
        if (pos == target) ++tally.visits;
    }
    tally.n_end = pos.n;
    return tally;
}

double truncation_term(const StepDistribution& s, std::int64_t n_end, std::int64_t n_target) {
    double ratio = s.prob_down / s.prob_up;
    std::int64_t gap = n_end - n_target;
    double reach = gap > 0 ? std::pow(ratio, static_cast<double>(gap)) : 1.0;
    return reach;
}

} // namespace

GreenEstimate green_mc(const LatticeParams& params, const Vertex& source, const Vertex& target,
                       std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed) {
    params.validate();
    if (samples == 0) throw std::domain_error("green_mc: need at least one sample");
    if (source.x.size() != static_cast<std::size_t>(params.d) ||
        target.x.size() != static_cast<std::size_t>(params.d))
        throw std::domain_error("green_mc: vertex has wrong transverse dimension");

    StepDistribution s = step_distribution(params);
    StepKernel kernel(params);
    double escape = s.prob_up - s.prob_down;
    std::uint64_t total = 0, total_sq = 0;
    double trunc = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        RngStream stream = RngStream::derived(seed, i);
        VisitTally tally = run_visit_sample(kernel, source, target, horizon, stream);
        total += tally.visits;
        total_sq += tally.visits * tally.visits;
        trunc += truncation_term(s, tally.n_end, target.n) / escape;
    }

    GreenEstimate est;
    est.samples = samples;
    double n = static_cast<double>(samples);
    est.value = static_cast<double>(total) / n;
    double var = samples > 1
                     ? (static_cast<double>(total_sq) - n * est.value * est.value) / (n - 1.0)
                     : 0.0;
    est.std_error = std::sqrt(std::max(0.0, var) / n);
    est.truncation_bound = trunc / n;
    return est;
}

GreenEstimate green_via_hitting(const LatticeParams& params, const Vertex& source,
                                const Vertex& target, std::uint64_t horizon,
                                std::uint64_t samples, std::uint64_t seed) {
    params.validate();
    if (samples == 0) throw std::domain_error("green_via_hitting: need at least one sample");

    // pass 1: on-diagonal Green value at the source
    GreenEstimate diag = green_mc(params, source, source, horizon, samples, seed);

    // pass 2: probability of reaching the target at all
    StepDistribution s = step_distribution(params);
    StepKernel kernel(params);
    std::uint64_t hits = 0;
    double trunc_p = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        RngStream stream = RngStream::derived(seed, samples + i);
        Vertex pos = source;
        bool hit = (pos == target);
        std::uint64_t t = 0;
        for (; t < horizon && !hit; ++t) {
            pos = kernel(pos, stream);
            if (pos == target) hit = true;
        }
        if (hit)
            ++hits;
        else
            trunc_p += truncation_term(s, pos.n, target.n);
    }

    double n = static_cast<double>(samples);
    double p_hat = static_cast<double>(hits) / n;
    double p_se = binomial_std_error(hits, samples);

    GreenEstimate est;
    est.samples = samples;
    est.value = diag.value * p_hat;
    est.std_error = std::sqrt(diag.value * diag.value * p_se * p_se +
                              p_hat * p_hat * diag.std_error * diag.std_error);
    est.truncation_bound = p_hat * diag.truncation_bound + diag.value * trunc_p / n;
    return est;
}

namespace {

double envelope_shape(int d, double decay, const Vertex& z) {
    double xx = 0.0;
    for (auto c : z.x) xx += static_cast<double>(c) * c;
    if (z.n == 0 && xx == 0.0) throw std::domain_error("envelope: z must be nonzero");
    double x_norm = std::sqrt(xx);
    double z_norm = std::sqrt(static_cast<double>(z.n) * static_cast<double>(z.n) + xx);
    if (z.n > 0 && x_norm <= static_cast<double>(z.n))
        return std::pow(z_norm, -0.5 * d) * std::exp(-decay * xx / static_cast<double>(z.n));
    return std::exp(-decay * z_norm);
}

} // namespace

double envelope_upper(const LatticeParams& params, const EnvelopeConstants& consts, const Vertex& z) {
    params.validate();
    return consts.c1 * envelope_shape(params.d, consts.c2, z);
}

double envelope_lower(const LatticeParams& params, const EnvelopeConstants& consts, const Vertex& z) {
    params.validate();
    return consts.c3 * envelope_shape(params.d, consts.c4, z);
}

EnvelopeFit fit_envelope_constants(const LatticeParams& params,
                                   const std::vector<std::pair<Vertex, double>>& data) {
    params.validate();

    // Regress log G + (d/2) log|z| (Gaussian regime) or log G (exponential
    // regime) against the regime's decay variable; shared slope.
    std::vector<double> ts, ys;
    EnvelopeFit fit;
    for (const auto& [z, value] : data) {
        double xx = 0.0;
        for (auto c : z.x) xx += static_cast<double>(c) * c;
        if (z.n == 0 && xx == 0.0) throw std::domain_error("fit_envelope_constants: data at z = 0");
        if (!(value > 0.0)) {
            fit.violations.push_back(z);
            continue;
        }
        double x_norm = std::sqrt(xx);
        double z_norm = std::sqrt(static_cast<double>(z.n) * static_cast<double>(z.n) + xx);
        bool gaussian = z.n > 0 && x_norm <= static_cast<double>(z.n);
        ts.push_back(gaussian ? xx / static_cast<double>(z.n) : z_norm);
        ys.push_back(std::log(value) + (gaussian ? 0.5 * params.d * std::log(z_norm) : 0.0));
    }
    if (ts.size() < 2) throw std::domain_error("fit_envelope_constants: need >= 2 usable points");

    LinearFit line = linear_fit(ts, ys);
    double decay = -line.slope;
    fit.constants.c2 = decay;
    fit.constants.c4 = decay;

    // widen the scale constants until every usable point is enclosed
    double ratio_max = 0.0, ratio_min = std::numeric_limits<double>::infinity();
    for (const auto& [z, value] : data) {
        if (!(value > 0.0)) continue;
        double ratio = value / envelope_shape(params.d, decay, z);
        ratio_max = std::max(ratio_max, ratio);
        ratio_min = std::min(ratio_min, ratio);
    }
    fit.constants.c1 = ratio_max * (1.0 + 1e-12);
    fit.constants.c3 = ratio_min * (1.0 - 1e-12);
    fit.coverage = data.empty() ? 0.0
                                : static_cast<double>(ts.size()) / static_cast<double>(data.size());
    return fit;
}

double bubble_integral(const LatticeParams& params, int mesh, double epsilon_cutoff) {
    params.validate();
    if (mesh < 8) throw std::domain_error("bubble_integral: mesh must be >= 8");
    if (epsilon_cutoff < 0.0) throw std::domain_error("bubble_integral: negative cutoff");

    constexpr double pi = 3.14159265358979323846;
    double el = std::exp(params.lambda);
    double denom = 2.0 * params.d + 1.0 + el;
    int axes = params.d + 1;

    std::vector<double> h(static_cast<std::size_t>(mesh));
    for (int k = 0; k < mesh; ++k)
        h[static_cast<std::size_t>(k)] = -pi + (k + 0.5) * 2.0 * pi / mesh;

    double eps_sq = epsilon_cutoff * epsilon_cutoff;
    double sum = 0.0;
    // odometer over the grid; trailing axes rebuilt as the odometer advances
    std::vector<int> idx(static_cast<std::size_t>(axes), 0);
    std::vector<double> cos_pre(static_cast<std::size_t>(axes) + 1, 0.0);  // transverse cos prefix
    std::vector<double> r2_pre(static_cast<std::size_t>(axes) + 1, 0.0);   // |h|^2 prefix
    auto refresh = [&](int from) {
        for (int a = from; a < axes; ++a) {
            double ha = h[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
            cos_pre[static_cast<std::size_t>(a) + 1] =
                cos_pre[static_cast<std::size_t>(a)] + (a == 0 ? 0.0 : std::cos(ha));
            r2_pre[static_cast<std::size_t>(a) + 1] = r2_pre[static_cast<std::size_t>(a)] + ha * ha;
        }
    };
    refresh(0);
    while (true) {
        if (r2_pre[static_cast<std::size_t>(axes)] >= eps_sq) {
            double h0 = h[static_cast<std::size_t>(idx[0])];
            double re = 1.0 - ((el + 1.0) * std::cos(h0) + 2.0 * cos_pre[static_cast<std::size_t>(axes)]) / denom;
            double im = -(el - 1.0) * std::sin(h0) / denom;
            sum += 1.0 / (re * re + im * im);
        }
        int a = axes - 1;
        for (; a >= 0; --a) {
            auto k = static_cast<std::size_t>(a);
            if (++idx[k] < mesh) break;
            idx[k] = 0;
        }
        if (a < 0) break;
        refresh(a);
    }

    double value = sum / std::pow(static_cast<double>(mesh), axes);
    if (params.lazy) value *= 4.0;  // |1 - (1 + phi)/2|^2 = |1 - phi|^2 / 4
    return value;
}

std::string to_csv(const GreenTable& table) {
    std::ostringstream os;
    os << 'n';
    for (int j = 1; j <= table.params.d; ++j) os << ",x" << j;
    os << ",value\n";
    os.precision(17);
    std::vector<Vertex> interior = table.box.interior_vertices(table.params.d);
    for (std::size_t i = 0; i < interior.size(); ++i) {
        os << interior[i].n;
        for (auto c : interior[i].x) os << ',' << c;
        os << ',' << table.values[i] << '\n';
    }
    return os.str();
}

} // namespace drift
