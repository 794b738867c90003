#pragma once
#include <span>
#include <vector>

namespace cda {

// Quantile of an ascending-sorted sample by linear interpolation between the
// closest order statistics: position h = (n - 1) * p.
double quantile_sorted(std::span<const double> sorted, double p);

// Same, but sorts a copy first.
double quantile(std::vector<double> values, double p);

// Conventional median (mean of the two central values for even counts).
double median(std::vector<double> values);

// Lower of the two central values for even counts; used for reported
// Median-APE cells so they always equal an observed value.
double lower_median(std::vector<double> values);

}  // namespace cda
