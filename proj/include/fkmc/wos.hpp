// Walk on spheres for harmonic measure: from the current point, jump to a
// uniform point on the largest circle that crosses neither the absorbing
// boundary K nor the target ball.  Absorb at K when within eps of it, at the
// target when inside (operationally: within eps of its surface, since exact
// entry has probability zero).  The hit_target frequency over many walks
// estimates the harmonic function h with h=0 on K and h=1 on the ball.
#pragma once

#include "fkmc/geometry.hpp"
#include "fkmc/rng.hpp"
#include "fkmc/stats.hpp"

namespace fkmc {

enum class WosOutcome { hit_boundary, hit_target, timeout };

WosOutcome walk_on_spheres(RandomStream& rng, const DomainSpec& domain,
                           Vec2 start, const Ball& target, double eps,
                           int max_steps = 100000);

struct WosBatch {
    Estimate hit_target;  // frequency estimate of h(start)
    int64_t n_boundary = 0;
    int64_t n_target = 0;
    int64_t n_timeout = 0;
};

// n_walks independent walks; substreams are keyed by walk index, so the
// result is reproducible and independent of scheduling.
WosBatch walk_on_spheres_batch(const RngKey& key, const DomainSpec& domain,
                               Vec2 start, const Ball& target, double eps,
                               int64_t n_walks, int max_steps = 100000);

}  // namespace fkmc
