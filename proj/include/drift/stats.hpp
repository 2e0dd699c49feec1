#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace drift {

// Streaming mean/variance accumulator (Welford).
struct RunningStat {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_error() const;
};

struct Stats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
    double error = 0.0;  // standard error of the mean
};

Stats summarize(const RunningStat& acc);
Stats summarize(const std::vector<double>& xs);

// Standard error of a Bernoulli frequency k/n.
double binomial_std_error(std::uint64_t k, std::uint64_t n);

// Pearson chi-square goodness-of-fit p-value; dof = #cells - 1.
// expected[] are probabilities (they are scaled to the observed total).
double chi_square_pvalue(const std::vector<std::uint64_t>& observed,
                         const std::vector<double>& expected);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_sq = 0.0;
};

// Ordinary least squares of y against x.
LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace drift
