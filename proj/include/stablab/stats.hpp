#pragma once

#include <span>
#include <vector>

namespace stablab {

double mean(std::span<const double> xs);

/// Standard error of the mean, sample standard deviation over sqrt(count).
/// Zero for fewer than two values.
double standard_error(std::span<const double> xs);

/// Fractional ranks (1-based), ties share their average rank.
std::vector<double> ranks(std::span<const double> xs);

/// Spearman rank correlation; NaN when either input has zero rank variance.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Least-squares slope of log(y) against log(x). Entries with nonpositive x or
/// y are skipped.
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace stablab
