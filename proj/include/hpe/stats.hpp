#ifndef HPE_STATS_HPP
#define HPE_STATS_HPP

#include <span>
#include <vector>

namespace hpe::stats {

double mean(std::span<const double> x);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> x);

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
double quantile(std::span<const double> x, double p);

/// Same, on data the caller has already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

double log_sum_exp(std::span<const double> x);

/// Midpoint of the most populated histogram bin, with bin width chosen by
/// the Freedman-Diaconis rule (2 IQR n^(-1/3)). Ties go to the lowest bin.
double histogram_mode(std::span<const double> x);

/// Gaussian kernel density estimate with Silverman's bandwidth, evaluated
/// on `grid`.
std::vector<double> kde(std::span<const double> x, std::span<const double> grid);

/// Rounds half away from zero to `decimals` places. A relative nudge of a
/// few ulps absorbs binary representation error, so 9.595 rounds to 9.60.
double round_to(double x, int decimals);

}  // namespace hpe::stats

#endif
