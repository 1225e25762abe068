#pragma once

#include <utility>
#include <vector>

namespace depthwatch {

// Median with the even-length convention: mean of the two central order
// statistics. Input is copied; empty input is a precondition violation.
double median(std::vector<double> values);

// (median, MAD) where MAD = med(|x - med(x)|).
std::pair<double, double> univariate_med_mad(const std::vector<double>& values);

double mean(const std::vector<double>& values);

// Unbiased sample variance (n - 1 denominator); requires n >= 2.
double sample_variance(const std::vector<double>& values);

// p in [0, 1]; linear interpolation between order statistics (q * (n - 1)).
double quantile(std::vector<double> values, double p);

}  // namespace depthwatch
