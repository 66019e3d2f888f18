#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hankelid/metrics.hpp"
#include "hankelid/rng.hpp"

using namespace hankelid;

TEST_CASE("fit is 100 for a perfect match and 0 at the mean predictor") {
    Vec g(4);
    g << 1.0, -2.0, 0.5, 3.0;
    CHECK(fit(g, g) == 100.0);

    Vec mean_pred = Vec::Constant(4, g.mean());
    CHECK(std::abs(fit(g, mean_pred)) < 1e-12);
}

TEST_CASE("fit matches the hand-computed spike example") {
    Vec g(3);
    g << 1.0, 0.0, 0.0;
    Vec zero = Vec::Zero(3);
    CHECK(fit(g, zero) == doctest::Approx(100.0 * (1.0 - std::sqrt(1.5))).epsilon(1e-6));
    CHECK(fit(g, zero) == doctest::Approx(-22.474).epsilon(1e-4));
}

TEST_CASE("fit rejects constant targets and mismatched lengths") {
    CHECK_THROWS_AS(fit(Vec::Ones(5), Vec::Ones(5)), std::invalid_argument);
    CHECK_THROWS_AS(fit(Vec::Ones(5), Vec::Ones(4)), std::invalid_argument);
}

TEST_CASE("fit is invariant to common nonzero scaling") {
    Rng rng(6);
    Vec g(10);
    Vec ghat(10);
    for (int i = 0; i < 10; ++i) {
        g[i] = rng.gaussian();
        ghat[i] = rng.gaussian();
    }
    const double base = fit(g, ghat);
    for (double c : {2.0, 0.01, -3.5}) {
        CHECK(fit((c * g).eval(), (c * ghat).eval()) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("fit never exceeds 100 and equals 100 only at equality") {
    Rng rng(7);
    Vec g(8);
    for (int i = 0; i < 8; ++i) {
        g[i] = rng.gaussian();
    }
    for (int trial = 0; trial < 50; ++trial) {
        Vec ghat(8);
        for (int i = 0; i < 8; ++i) {
            ghat[i] = rng.gaussian();
        }
        const double w = fit(g, ghat);
        CHECK(w <= 100.0);
        if (w == 100.0) {
            CHECK((g - ghat).norm() == 0.0);
        }
    }
}

TEST_CASE("numerical_rank identifies exact and constructed ranks") {
    CHECK(numerical_rank(Mat::Identity(3, 3), 1e-8) == 3);
    CHECK(numerical_rank(Mat::Zero(4, 4), 1e-8) == 0);

    // rank-1 outer-product Hankel of a geometric sequence
    Vec theta(5);
    for (int k = 0; k < 5; ++k) {
        theta[k] = std::pow(0.5, k);
    }
    Mat h(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            h(i, j) = theta[i + j];
        }
    }
    CHECK(numerical_rank(h, 1e-8) == 1);

    Rng rng(9);
    Mat a(6, 2);
    Mat b(2, 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 2; ++j) {
            a(i, j) = rng.gaussian();
            b(j, i) = rng.gaussian();
        }
    }
    CHECK(numerical_rank(a * b, 1e-8) == 2);
    CHECK_THROWS_AS(numerical_rank(Mat::Identity(2, 2), 0.0), std::invalid_argument);
}

TEST_CASE("summarize handles singletons and small samples") {
    const DistSummary single = summarize({5.0});
    CHECK(single.min == 5.0);
    CHECK(single.q1 == 5.0);
    CHECK(single.median == 5.0);
    CHECK(single.q3 == 5.0);
    CHECK(single.max == 5.0);
    CHECK(single.mean == 5.0);
    CHECK(single.count == 1);
    CHECK(single.outliers.empty());

    const DistSummary four = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(four.median == doctest::Approx(2.5));
    CHECK(four.q1 == doctest::Approx(1.75));
    CHECK(four.q3 == doctest::Approx(3.25));
}

TEST_CASE("summarize flags points beyond 1.5 IQR") {
    std::vector<double> values;
    for (int i = 1; i <= 100; ++i) {
        values.push_back(static_cast<double>(i));
    }
    values.push_back(1000.0);
    const DistSummary s = summarize(values);
    REQUIRE(s.outliers.size() == 1);
    CHECK(s.outliers[0] == 1000.0);
    CHECK(s.max == 1000.0);
    CHECK(s.min <= s.q1);
    CHECK(s.q1 <= s.median);
    CHECK(s.median <= s.q3);
    CHECK(s.q3 <= s.max);
}

TEST_CASE("summarize is permutation-invariant") {
    std::vector<double> values = {3.0, -1.0, 7.5, 2.0, 2.0, 9.0, -4.0};
    std::vector<double> shuffled = {9.0, 2.0, -4.0, 7.5, 3.0, 2.0, -1.0};
    const DistSummary a = summarize(values);
    const DistSummary b = summarize(shuffled);
    CHECK(a.min == b.min);
    CHECK(a.q1 == b.q1);
    CHECK(a.median == b.median);
    CHECK(a.q3 == b.q3);
    CHECK(a.max == b.max);
    CHECK(a.mean == b.mean);
    CHECK(a.outliers == b.outliers);
}

TEST_CASE("summarize rejects empty samples") {
    CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}
