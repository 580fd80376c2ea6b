// Brownian paths and bridges for the semigroup generated by the (positive)
// Laplacian: transition density p_t(x,y) = (4 pi t)^(-d/2) exp(-|x-y|^2/4t),
// so increments over dt have variance 2*dt PER COORDINATE and
// E|X_t - X_0|^2 = 2 d t (= 4t in the plane).  Mixing this up with the
// probabilists' convention (variance t, generator Laplacian/2) is the single
// most damaging mistake available here; the tests pin the factor down.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fkmc/geometry.hpp"
#include "fkmc/rng.hpp"

namespace fkmc {

struct Path {
    std::vector<double> t;  // strictly increasing, t.front()=0, t.back()=horizon
    std::vector<Vec2> x;
};

struct BridgePath {
    Path path;
    Vec2 x0, x1;
    double horizon = 0.0;
};

// p_t(x,y) in the plane.
double transition_density(Vec2 x, Vec2 y, double t);
// Radial form in general dimension d >= 1 (used by quadrature checks).
double transition_density_radial(double r, double t, int d);

// Forward path on a uniform grid of n_steps steps over [0, horizon].
Path sample_path(RandomStream& rng, Vec2 x0, double horizon, int n_steps);

// Brownian bridge from x0 to x1 over [0, horizon] by forward conditioning:
// from position z at time s, the next point at s+h is Gaussian with mean
// z + h/(T-s) * (x1 - z) and per-coordinate variance 2 h (T-s-h)/(T-s).
BridgePath sample_bridge(RandomStream& rng, Vec2 x0, Vec2 x1, double horizon,
                         int n_steps);

// Adaptive variants: step_rule(position, time_left) returns the desired time
// step; it is clamped to [min_dt, max_dt] and to the remaining time.  Exact
// in distribution for any measurable rule (Gaussian increments at any dt).
Path sample_path_adaptive(RandomStream& rng, Vec2 x0, double horizon,
                          const std::function<double(Vec2, double)>& step_rule,
                          double min_dt, double max_dt);
BridgePath sample_bridge_adaptive(
    RandomStream& rng, Vec2 x0, Vec2 x1, double horizon,
    const std::function<double(Vec2, double)>& step_rule, double min_dt,
    double max_dt);

// Streaming forms used by the estimator hot loops: visit(x_prev, x_next, dt)
// is called per step without materializing a Path.  StepFn must be callable
// as double(Vec2 pos, double time_left).
template <class StepFn, class Visit>
inline Vec2 walk_forward(RandomStream& rng, Vec2 x0, double horizon,
                         StepFn&& step_of, Visit&& visit) {
    Vec2 x = x0;
    double s = 0.0;
    while (s < horizon) {
        double h = step_of(x, horizon - s);
        if (h > horizon - s) h = horizon - s;
        double sd = std::sqrt(2.0 * h);
        Vec2 nx{x.x + sd * rng.normal(), x.y + sd * rng.normal()};
        visit(x, nx, h);
        x = nx;
        s += h;
    }
    return x;
}

template <class StepFn, class Visit>
inline void walk_bridge(RandomStream& rng, Vec2 x0, Vec2 x1, double horizon,
                        StepFn&& step_of, Visit&& visit) {
    Vec2 x = x0;
    double s = 0.0;
    while (s < horizon) {
        double left = horizon - s;
        double h = step_of(x, left);
        if (h > left) h = left;
        Vec2 nx;
        if (h >= left) {
            nx = x1;
            h = left;
        } else {
            double f = h / left;
            double sd = std::sqrt(2.0 * h * (left - h) / left);
            nx = Vec2{x.x + f * (x1.x - x.x) + sd * rng.normal(),
                      x.y + f * (x1.y - x.y) + sd * rng.normal()};
        }
        visit(x, nx, h);
        x = nx;
        s += h;
    }
}

}  // namespace fkmc
