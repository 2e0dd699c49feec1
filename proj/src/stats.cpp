#include "drift/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <gsl/gsl_cdf.h>

namespace drift {

double RunningStat::std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

Stats summarize(const RunningStat& acc) {
    Stats s;
    s.n = acc.n;
    s.mean = acc.mean;
    s.variance = acc.variance();
    s.error = acc.std_error();
    return s;
}

Stats summarize(const std::vector<double>& xs) {
    RunningStat acc;
    for (double x : xs) acc.add(x);
    return summarize(acc);
}

double binomial_std_error(std::uint64_t k, std::uint64_t n) {
    if (n == 0) return 0.0;
    double p = static_cast<double>(k) / static_cast<double>(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

double chi_square_pvalue(const std::vector<std::uint64_t>& observed,
                         const std::vector<double>& expected) {
    if (observed.size() != expected.size() || observed.size() < 2)
        throw std::domain_error("chi_square_pvalue: need matching cell counts (>= 2 cells)");
    std::uint64_t total = 0;
    double mass = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        total += observed[i];
        if (!(expected[i] > 0.0)) throw std::domain_error("chi_square_pvalue: expected mass must be positive");
        mass += expected[i];
    }
    if (total == 0) throw std::domain_error("chi_square_pvalue: no observations");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double e = static_cast<double>(total) * expected[i] / mass;
        double diff = static_cast<double>(observed[i]) - e;
        stat += diff * diff / e;
    }
    double dof = static_cast<double>(observed.size() - 1);
    return gsl_cdf_chisq_Q(stat, dof);
}

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::domain_error("linear_fit: need >= 2 matching points");
    double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw std::domain_error("linear_fit: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_sq = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

} // namespace drift
