#include "stochflow/stats.hpp"

#include "stochflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stochflow::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw DomainError("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double jackknife_se(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double total = std::accumulate(x.begin(), x.end(), 0.0);
    const double nn = static_cast<double>(n);
    const double full = total / nn;
    // For the mean the leave-one-out values are (total - x_i) / (n - 1).
    double ss = 0.0;
    for (double v : x) {
        const double loo = (total - v) / (nn - 1.0);
        ss += (loo - full) * (loo - full);
    }
    return std::sqrt((nn - 1.0) / nn * ss);
}

Estimate mean_with_se(std::span<const double> x) { return {mean(x), jackknife_se(x)}; }

double median(std::vector<double> x) {
    if (x.empty()) throw DomainError("median of an empty sample");
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    const double upper = x[mid];
    if (x.size() % 2 == 1) return upper;
    const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("linear_fit needs equally long x and y");
    const std::size_t n = x.size();
    if (n < 3) throw DomainError("linear_fit needs at least three points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("linear_fit needs distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

}  // namespace stochflow::stats
