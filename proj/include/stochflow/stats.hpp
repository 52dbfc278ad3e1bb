#pragma once

// Small Monte Carlo statistics toolkit: means, jackknife errors, medians and
// ordinary least squares with slope standard errors.

#include <cstddef>
#include <span>
#include <vector>

namespace stochflow::stats {

double mean(std::span<const double> x);

/// Leave-one-out jackknife standard error of the sample mean.
double jackknife_se(std::span<const double> x);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

Estimate mean_with_se(std::span<const double> x);

/// Median; averages the middle pair for even sizes.
double median(std::vector<double> x);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r_squared = 0.0;
};

/// Least squares y = intercept + slope x; needs at least three points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace stochflow::stats
