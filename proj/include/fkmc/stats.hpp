// Estimator plumbing: mean/stderr accumulation with deterministic pairwise
// reduction, medians, the Paley-Zygmund lower bound, and (weighted) least
// squares on log-log data with a slope confidence interval.
#pragma once

#include <cstdint>
#include <vector>

namespace fkmc {

// A Monte Carlo estimate.  ci95 spans value +/- 1.96 stderr.
struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int64_t n_samples = 0;

    double ci95_lo() const { return value - 1.96 * stderr_; }
    double ci95_hi() const { return value + 1.96 * stderr_; }
};

// Welford accumulator.  merge() is exact and associative-by-construction:
// estimators always merge fixed-size blocks in index order, so results do
// not depend on thread scheduling.
class Accumulator {
  public:
    void add(double x);
    void merge(const Accumulator& other);
    int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double second_moment() const;  // E[X^2] estimate
    double variance() const;       // unbiased sample variance
    Estimate estimate() const;

  private:
    int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double median(std::vector<double> values);

// P(Z >= theta E Z) >= (1-theta)^2 (E Z)^2 / E(Z^2) for Z >= 0, theta in [0,1).
double paley_zygmund_bound(double mean, double second_moment, double theta);

// Two-sided 95% Student-t quantile for the given degrees of freedom.
double t_quantile_95(int dof);

struct FitPoint {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;  // weight; 1/stderr^2 when stderrs are known
};

// Weighted least squares line y = intercept + slope x.  The slope standard
// error is residual-based: with unit weights it is the classic OLS formula;
// with 1/stderr^2 weights the per-point covariance is inflated by the
// reduced chi-square when the residuals exceed the quoted errors, so model
// misfit (curvature) widens the interval instead of being hidden.
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double slope_ci95_lo = 0.0;
    double slope_ci95_hi = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
    int n_censored = 0;  // points dropped before the fit (non-positive values)
    std::vector<FitPoint> points;
};

FitResult weighted_linear_fit(std::vector<FitPoint> points);

}  // namespace fkmc
