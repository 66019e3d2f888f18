#pragma once

#include <vector>

#include "hankelid/model.hpp"

namespace hankelid {

/// Impulse-response fit in percent:
///   100 * (1 - sqrt(sum (g - ghat)^2 / sum (g - mean(g))^2)).
/// 100 means a perfect match; the score is unbounded below. Throws when
/// g_true is constant (zero denominator).
double fit(const Vec& g_true, const Vec& g_est);

/// Number of singular values >= rel_tol * sigma_1; zero for the zero matrix.
int numerical_rank(const Mat& x, double rel_tol);

/// Five-number summary plus mean and 1.5*IQR outliers, quartiles by linear
/// interpolation of the sorted sample (type-7 convention).
struct DistSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
    int count = 0;
    std::vector<double> outliers;
};

DistSummary summarize(std::vector<double> values);

}  // namespace hankelid
