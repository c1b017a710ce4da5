#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace pos {

double mean(std::span<const double> x);
// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);
inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

// Type-7 empirical quantile (linear interpolation between order statistics,
// h = (n - 1) p), as in R's default. `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::span<const double> x, double p);
std::vector<double> quantiles(std::span<const double> x, std::span<const double> probs);

// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// Two-sample Kolmogorov-Smirnov statistic sup |F_x - F_y|.
double ks_statistic(std::span<const double> x, std::span<const double> y);

}  // namespace pos
