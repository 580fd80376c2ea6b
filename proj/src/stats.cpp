#include "fkmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fkmc {

void Accumulator::add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / double(n_);
    m2_ += d * (x - mean_);
}

void Accumulator::merge(const Accumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    double d = other.mean_ - mean_;
    int64_t n = n_ + other.n_;
    m2_ += other.m2_ + d * d * double(n_) * double(other.n_) / double(n);
    mean_ += d * double(other.n_) / double(n);
    n_ = n;
}

double Accumulator::variance() const {
    if (n_ < 2) return 0.0;
    return m2_ / double(n_ - 1);
}

double Accumulator::second_moment() const {
    if (n_ == 0) return 0.0;
    return m2_ / double(n_) + mean_ * mean_;
}

Estimate Accumulator::estimate() const {
    Estimate e;
    e.value = mean_;
    e.n_samples = n_;
    e.stderr_ = n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0;
    return e;
}

double median(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("median: empty sample");
    size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    std::nth_element(values.begin(), values.begin() + mid - 1,
                     values.begin() + mid);
    return 0.5 * (values[mid - 1] + hi);
}

double paley_zygmund_bound(double mean, double second_moment, double theta) {
    if (!(theta >= 0.0 && theta < 1.0))
        throw std::invalid_argument("paley_zygmund_bound: theta outside [0,1)");
    if (!(second_moment > 0.0))
        throw std::invalid_argument(
            "paley_zygmund_bound: second moment must be positive");
    double b = (1.0 - theta) * (1.0 - theta) * mean * mean / second_moment;
    return std::min(b, 1.0);
}

double t_quantile_95(int dof) {
    // Two-sided 95% quantiles; asymptotes to the normal value.
    static const double table[] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
        2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
        2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof < 1) return table[0];
    if (dof <= 30) return table[dof - 1];
    if (dof <= 60) return 2.00;
    return 1.96;
}

FitResult weighted_linear_fit(std::vector<FitPoint> points) {
    FitResult r;
    r.points = points;
    r.n_points = int(points.size());
    if (points.size() < 3)
        throw std::invalid_argument(
            "weighted_linear_fit: need at least 3 points, got " +
            std::to_string(points.size()));
    double sw = 0, sx = 0, sy = 0;
    for (const auto& p : points) {
        if (!(p.w > 0))
            throw std::invalid_argument("weighted_linear_fit: weight <= 0");
        sw += p.w;
        sx += p.w * p.x;
        sy += p.w * p.y;
    }
    double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0, sxy = 0;
    for (const auto& p : points) {
        sxx += p.w * (p.x - xbar) * (p.x - xbar);
        sxy += p.w * (p.x - xbar) * (p.y - ybar);
    }
    if (!(sxx > 0))
        throw std::invalid_argument(
            "weighted_linear_fit: zero spread in x");
    r.slope = sxy / sxx;
    r.intercept = ybar - r.slope * xbar;
    double ssr = 0, sst = 0;
    for (const auto& p : points) {
        double e = p.y - (r.intercept + r.slope * p.x);
        ssr += p.w * e * e;
        sst += p.w * (p.y - ybar) * (p.y - ybar);
    }
    r.r_squared = sst > 0 ? 1.0 - ssr / sst : 1.0;
    int dof = r.n_points - 2;
    double chi2_red = dof > 0 ? ssr / double(dof) : 0.0;
    // Unit weights: plain OLS error.  1/stderr^2 weights: never shrink the
    // interval below the quoted point errors, but inflate it when the
    // residuals say the line does not fit.
    r.slope_stderr = std::sqrt(std::max(chi2_red, 1.0) / sxx);
    bool unit_weights = true;
    for (const auto& p : points) unit_weights = unit_weights && p.w == 1.0;
    if (unit_weights) r.slope_stderr = std::sqrt(chi2_red / sxx);
    double t = t_quantile_95(dof);
    r.slope_ci95_lo = r.slope - t * r.slope_stderr;
    r.slope_ci95_hi = r.slope + t * r.slope_stderr;
    return r;
}

}  // namespace fkmc
