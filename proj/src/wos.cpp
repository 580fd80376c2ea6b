#include "fkmc/wos.hpp"

#include <cmath>
#include <stdexcept>

namespace fkmc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

WosOutcome walk_on_spheres(RandomStream& rng, const DomainSpec& domain,
                           Vec2 start, const Ball& target, double eps,
                           int max_steps) {
    if (!domain.boundary) throw std::invalid_argument("wos: no boundary");
    if (!(eps > 0)) throw std::invalid_argument("wos: eps must be positive");
    if (!(target.radius > 0))
        throw std::invalid_argument("wos: target radius must be positive");
    const PrefractalBoundary& K = *domain.boundary;
    {
        double db = K.distance(start);
        double dt = norm(start - target.center) - target.radius;
        if (db <= eps || dt <= 0)
            throw std::invalid_argument(
                "wos: start must lie strictly between boundary and target");
    }
    Vec2 x = start;
    for (int step = 0; step < max_steps; ++step) {
        double d_target = norm(x - target.center) - target.radius;
        if (d_target <= eps) return WosOutcome::hit_target;
        double d_boundary = K.distance(x);
        if (d_boundary <= eps) return WosOutcome::hit_boundary;
        double r = std::min(d_boundary, d_target);
        double ang = 2.0 * kPi * rng.uniform();
        x = Vec2{x.x + r * std::cos(ang), x.y + r * std::sin(ang)};
    }
    return WosOutcome::timeout;
}

WosBatch walk_on_spheres_batch(const RngKey& key, const DomainSpec& domain,
                               Vec2 start, const Ball& target, double eps,
                               int64_t n_walks, int max_steps) {
    WosBatch out;
    Accumulator acc;
    for (int64_t i = 0; i < n_walks; ++i) {
        RandomStream rng(key.child("wos", uint64_t(i)));
        switch (walk_on_spheres(rng, domain, start, target, eps, max_steps)) {
            case WosOutcome::hit_boundary:
                ++out.n_boundary;
                acc.add(0.0);
                break;
            case WosOutcome::hit_target:
                ++out.n_target;
                acc.add(1.0);
                break;
            case WosOutcome::timeout:
                ++out.n_timeout;
                break;
        }
    }
    out.hit_target = acc.estimate();
    return out;
}

}  // namespace fkmc
