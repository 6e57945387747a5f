#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ne::stats {

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // unbiased
double correlation(std::span<const double> a, std::span<const double> b);

/// Two-sided one-sample Kolmogorov-Smirnov statistic D_n against a CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Asymptotic p-value of sqrt(n) D_n (Kolmogorov distribution, with the
/// usual small-sample correction of Stephens).
double ks_pvalue(double d, std::size_t n);

/// Upper-tail p-value of a chi-square statistic.
double chi_square_sf(double statistic, double dof);

struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};
/// Pearson goodness of fit; cells with expected count below min_expected are
/// pooled into one cell.
ChiSquare chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                         double min_expected = 5.0);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};
/// Weighted least squares y = a + b x; r2 is the weighted coefficient of
/// determination.
LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w);

/// Half the L1 distance between two distributions on the same finite set.
double total_variation(std::span<const double> a, std::span<const double> b);

}  // namespace ne::stats
