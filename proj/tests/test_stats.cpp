#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fkmc/stats.hpp"

using namespace fkmc;

TEST_SUITE("stats") {

TEST_CASE("accumulator matches direct formulas") {
    std::vector<double> xs = {1.5, -2.0, 0.25, 4.0, 4.0, -1.0, 0.0, 7.5};
    Accumulator acc;
    for (double x : xs) acc.add(x);
    double n = double(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0, m2raw = 0;
    for (double x : xs) {
        var += (x - mean) * (x - mean);
        m2raw += x * x;
    }
    var /= (n - 1);
    CHECK(acc.count() == int64_t(xs.size()));
    CHECK(acc.mean() == doctest::Approx(mean).epsilon(1e-14));
    CHECK(acc.variance() == doctest::Approx(var).epsilon(1e-13));
    CHECK(acc.second_moment() == doctest::Approx(m2raw / n).epsilon(1e-13));

    Estimate e = acc.estimate();
    CHECK(e.value == doctest::Approx(mean));
    CHECK(e.stderr_ == doctest::Approx(std::sqrt(var / n)).epsilon(1e-13));
    CHECK(e.n_samples == int64_t(xs.size()));
    CHECK(e.ci95_lo() == doctest::Approx(mean - 1.96 * e.stderr_));
    CHECK(e.ci95_hi() == doctest::Approx(mean + 1.96 * e.stderr_));
}

TEST_CASE("accumulator merge equals bulk") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> N(3.0, 2.0);
    std::vector<double> xs(10001);
    for (auto& x : xs) x = N(gen);

    Accumulator bulk;
    for (double x : xs) bulk.add(x);

    // merge uneven pieces, including an empty one
    Accumulator a, b, c, empty;
    for (size_t i = 0; i < 17; ++i) a.add(xs[i]);
    for (size_t i = 17; i < 6000; ++i) b.add(xs[i]);
    for (size_t i = 6000; i < xs.size(); ++i) c.add(xs[i]);
    Accumulator merged;
    merged.merge(a);
    merged.merge(empty);
    merged.merge(b);
    merged.merge(c);
    CHECK(merged.count() == bulk.count());
    CHECK(merged.mean() == doctest::Approx(bulk.mean()).epsilon(1e-13));
    CHECK(merged.variance() == doctest::Approx(bulk.variance()).epsilon(1e-11));
}

TEST_CASE("median handles odd, even, unsorted") {
    CHECK(median({3.0}) == doctest::Approx(3.0));
    CHECK(median({5.0, 1.0, 3.0}) == doctest::Approx(3.0));
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
    CHECK(median({-1.0, -1.0, 10.0, -1.0}) == doctest::Approx(-1.0));
}

TEST_CASE("paley-zygmund bound") {
    // P(Z >= theta E Z) >= (1-theta)^2 (E Z)^2 / E Z^2
    CHECK(paley_zygmund_bound(2.0, 5.0, 0.5) ==
          doctest::Approx(0.25 * 4.0 / 5.0).epsilon(1e-14));
    // degenerate Z = const: bound (1-theta)^2, never above 1
    CHECK(paley_zygmund_bound(1.0, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(paley_zygmund_bound(3.0, 9.0, 0.25) == doctest::Approx(0.5625));
    // zero mean gives a vacuous bound
    CHECK(paley_zygmund_bound(0.0, 1.0, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("t quantile") {
    CHECK(t_quantile_95(1) == doctest::Approx(12.706).epsilon(5e-3));
    CHECK(t_quantile_95(2) == doctest::Approx(4.303).epsilon(5e-3));
    CHECK(t_quantile_95(10) == doctest::Approx(2.228).epsilon(5e-3));
    CHECK(t_quantile_95(30) == doctest::Approx(2.042).epsilon(5e-3));
    CHECK(t_quantile_95(100000) == doctest::Approx(1.96).epsilon(2e-3));
}

TEST_CASE("weighted fit recovers an exact line") {
    std::vector<FitPoint> pts;
    for (int i = 0; i < 6; ++i)
        pts.push_back({double(i), 2.0 * i + 1.0, 1.0 + i});
    FitResult fit = weighted_linear_fit(pts);
    CHECK(fit.n_points == 6);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.slope_ci95_lo <= fit.slope);
    CHECK(fit.slope_ci95_hi >= fit.slope);
}

TEST_CASE("weighted fit covers a noisy known slope") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> N(0.0, 1.0);
    const double slope = -0.7, intercept = 0.3;
    std::vector<FitPoint> pts;
    for (int i = 0; i < 40; ++i) {
        double x = 0.2 * i;
        double sd = 0.05 * (1 + i % 3);
        pts.push_back({x, intercept + slope * x + sd * N(gen), 1.0 / (sd * sd)});
    }
    FitResult fit = weighted_linear_fit(pts);
    CHECK(std::abs(fit.slope - slope) < 5 * fit.slope_stderr);
    CHECK(fit.slope_ci95_lo < fit.slope_ci95_hi);
    CHECK(fit.r_squared > 0.9);
}

TEST_CASE("misfit inflates the slope interval") {
    // quadratic data with tiny quoted errors: residual inflation must widen
    // the slope interval well beyond the naive covariance
    std::vector<FitPoint> pts;
    for (int i = 0; i < 12; ++i) {
        double x = double(i);
        pts.push_back({x, x * x, 1e8});
    }
    FitResult fit = weighted_linear_fit(pts);
    double naive_se = 0;
    {
        // same design with honest unit weights has this residual-based se
        std::vector<FitPoint> unit = pts;
        for (auto& p : unit) p.w = 1.0;
        naive_se = weighted_linear_fit(unit).slope_stderr;
    }
    CHECK(fit.slope_stderr == doctest::Approx(naive_se).epsilon(1e-6));
}

}  // TEST_SUITE
