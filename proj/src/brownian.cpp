#include "fkmc/brownian.hpp"

#include <cmath>
#include <stdexcept>

namespace fkmc {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_horizon(double t) {
    if (!(t > 0)) throw std::invalid_argument("horizon must be positive");
}
}  // namespace

double transition_density(Vec2 x, Vec2 y, double t) {
    check_horizon(t);
    return std::exp(-norm2(x - y) / (4.0 * t)) / (4.0 * kPi * t);
}

double transition_density_radial(double r, double t, int d) {
    check_horizon(t);
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    return std::pow(4.0 * kPi * t, -0.5 * d) * std::exp(-r * r / (4.0 * t));
}

Path sample_path(RandomStream& rng, Vec2 x0, double horizon, int n_steps) {
    check_horizon(horizon);
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    Path p;
    p.t.reserve(n_steps + 1);
    p.x.reserve(n_steps + 1);
    p.t.push_back(0.0);
    p.x.push_back(x0);
    double h = horizon / n_steps;
    double sd = std::sqrt(2.0 * h);
    Vec2 x = x0;
    for (int i = 1; i <= n_steps; ++i) {
        x = Vec2{x.x + sd * rng.normal(), x.y + sd * rng.normal()};
        p.t.push_back(i == n_steps ? horizon : i * h);
        p.x.push_back(x);
    }
    return p;
}

BridgePath sample_bridge(RandomStream& rng, Vec2 x0, Vec2 x1, double horizon,
                         int n_steps) {
    check_horizon(horizon);
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    BridgePath bp;
    bp.x0 = x0;
    bp.x1 = x1;
    bp.horizon = horizon;
    bp.path.t.reserve(n_steps + 1);
    bp.path.x.reserve(n_steps + 1);
    bp.path.t.push_back(0.0);
    bp.path.x.push_back(x0);
    double h = horizon / n_steps;
    Vec2 x = x0;
    for (int i = 1; i <= n_steps; ++i) {
        double left = horizon - (i - 1) * h;
        if (i == n_steps) {
            x = x1;
        } else {
            double f = h / left;
            double sd = std::sqrt(2.0 * h * (left - h) / left);
            x = Vec2{x.x + f * (x1.x - x.x) + sd * rng.normal(),
                     x.y + f * (x1.y - x.y) + sd * rng.normal()};
        }
        bp.path.t.push_back(i == n_steps ? horizon : i * h);
        bp.path.x.push_back(x);
    }
    return bp;
}

Path sample_path_adaptive(RandomStream& rng, Vec2 x0, double horizon,
                          const std::function<double(Vec2, double)>& step_rule,
                          double min_dt, double max_dt) {
    check_horizon(horizon);
    if (!(min_dt > 0 && min_dt <= max_dt))
        throw std::invalid_argument("need 0 < min_dt <= max_dt");
    Path p;
    p.t.push_back(0.0);
    p.x.push_back(x0);
    walk_forward(
        rng, x0, horizon,
        [&](Vec2 x, double left) {
            double h = std::clamp(step_rule(x, left), min_dt, max_dt);
            return h;
        },
        [&](Vec2, Vec2 nx, double h) {
            p.t.push_back(p.t.back() + h);
            p.x.push_back(nx);
        });
    p.t.back() = horizon;
    return p;
}

BridgePath sample_bridge_adaptive(
    RandomStream& rng, Vec2 x0, Vec2 x1, double horizon,
    const std::function<double(Vec2, double)>& step_rule, double min_dt,
    double max_dt) {
    check_horizon(horizon);
    if (!(min_dt > 0 && min_dt <= max_dt))
        throw std::invalid_argument("need 0 < min_dt <= max_dt");
    BridgePath bp;
    bp.x0 = x0;
    bp.x1 = x1;
    bp.horizon = horizon;
    bp.path.t.push_back(0.0);
    bp.path.x.push_back(x0);
    walk_bridge(
        rng, x0, x1, horizon,
        [&](Vec2 x, double left) {
            double h = std::clamp(step_rule(x, left), min_dt, max_dt);
            return h;
        },
        [&](Vec2, Vec2 nx, double h) {
            bp.path.t.push_back(bp.path.t.back() + h);
            bp.path.x.push_back(nx);
        });
    bp.path.t.back() = horizon;
    bp.path.x.back() = x1;
    return bp;
}

}  // namespace fkmc
