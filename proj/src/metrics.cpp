#include "hankelid/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hankelid {

double fit(const Vec& g_true, const Vec& g_est) {
    if (g_true.size() != g_est.size() || g_true.size() == 0) {
        throw std::invalid_argument("fit: responses must have equal nonzero length");
    }
    const double mean = g_true.mean();
    const double denom = (g_true.array() - mean).square().sum();
    if (denom <= 0.0) {
        throw std::invalid_argument("fit: true response is constant, fit is undefined");
    }
    const double num = (g_true - g_est).squaredNorm();
    return 100.0 * (1.0 - std::sqrt(num / denom));
}

int numerical_rank(const Mat& x, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw std::invalid_argument("numerical_rank: rel_tol must lie in (0, 1)");
    }
    const Vec s = Eigen::JacobiSVD<Mat>(x).singularValues();
    if (s.size() == 0 || s[0] <= 0.0) {
        return 0;
    }
    const double cut = rel_tol * s[0];
    int rank = 0;
    for (int i = 0; i < s.size(); ++i) {
        if (s[i] >= cut) {
            ++rank;
        }
    }
    return rank;
}

namespace {

// Type-7 quantile: linear interpolation at position (n-1)p of the sorted
// sample.
double quantile_sorted(const std::vector<double>& x, double p) {
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= x.size()) {
        return x.back();
    }
    const double frac = pos - static_cast<double>(lo);
    return x[lo] + frac * (x[lo + 1] - x[lo]);
}

}  // namespace

DistSummary summarize(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("summarize: empty sample");
    }
    std::sort(values.begin(), values.end());

    DistSummary s;
    s.count = static_cast<int>(values.size());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    s.mean = 0.0;
    for (double v : values) {
        s.mean += v;
    }
    s.mean /= static_cast<double>(s.count);

    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
        }
    }
    return s;
}

}  // namespace hankelid
