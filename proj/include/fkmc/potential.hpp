// Distance potentials V(z) = c_v d_K(z)^-beta, their shell truncations
// V^A = c_v A^beta on {d_K <= 1/A}, the additive functional A_V along path
// skeletons (midpoint rule), the heat-kernel time integral
//   Gamma_t(r) = int_0^t (4 pi s)^(-d/2) exp(-r^2/4s) ds,
// and the convolution criterion int V(z) Gamma_t(|x-z|) dz whose finiteness
// separates alpha+beta < d from alpha+beta >= d.
#pragma once

#include <optional>
#include <vector>

#include "fkmc/brownian.hpp"
#include "fkmc/geometry.hpp"

namespace fkmc {

struct PotentialSpec {
    double beta = 1.0;
    double c_v = 1.0;
    // Truncation level A: V^A = c_v A^beta restricted to {d_K <= 1/A}.
    std::optional<double> trunc_A;
    // Constant potential V = c (ignores the boundary); used for exact checks.
    std::optional<double> constant_override;
};

void validate(const PotentialSpec& spec);

// V at a point (may be +infinity exactly on K for the untruncated form).
double potential_eval(const PotentialSpec& spec, const PrefractalBoundary& b,
                      Vec2 p);
double potential_from_distance(const PotentialSpec& spec, double dist);

struct FunctionalValue {
    double value = 0.0;
    // |value - same sum on every second skeleton point|: a step-halving
    // (Richardson-style) discretization diagnostic.
    double refinement_delta = 0.0;
};

// Midpoint Riemann sum of V along the skeleton.  For truncated potentials,
// every interval that could touch the support {d_K <= 1/A} must satisfy
// dt <= (1/(10A))^2 / 2 (steps resolve the shell); violations throw with the
// required step count.  Exact for constant potentials.
FunctionalValue fk_functional(const Path& path, const PotentialSpec& spec,
                              const PrefractalBoundary& b);

// exp(-A_V) in [0,1].
double fk_weight(const Path& path, const PotentialSpec& spec,
                 const PrefractalBoundary& b);

// Gamma_t(r) for d >= 2; r = 0 is a divergent integral and throws.
// Computed by adaptive quadrature after the substitution u = r^2/(4s), with
// a series for the small-u part (which carries the d=2 log regime).
double gamma_t(double r, double t, int d);

enum class ConvolveVerdict { finite, diverging };

struct ConvolveOptions {
    double gamma0 = 0.25;      // outermost shell radius
    int shells_per_level = 2;  // shells added per refinement level
    int mesh_levels = 4;       // refinement levels
    // Heat-kernel draws shared across all shells (each draw lands in at most
    // one dyadic band).
    int64_t samples = 4000000;
    double cauchy_rel_tol = 5e-3;
};

struct ConvolveLevel {
    double partial_sum = 0.0;   // outer region + shells so far
    double extrapolated = 0.0;  // with geometric tail estimate when decaying
    double increment = 0.0;     // mass added by this level's shells
};

struct ConvolveReport {
    ConvolveVerdict verdict = ConvolveVerdict::diverging;
    double value = 0.0;  // tail-extrapolated total (meaningful when finite)
    double outer_value = 0.0;
    double growth_ratio = 0.0;  // fitted per-shell increment ratio
    double last_rel_change = 0.0;
    std::vector<double> shell_values;
    std::vector<double> shell_stderrs;
    std::vector<ConvolveLevel> levels;
};

// Annular quadrature of int V(z) Gamma_t(|x-z|) dz over dyadic shells
// around K, refined mesh_levels times; finite iff successive refinements
// are Cauchy (relative change < cauchy_rel_tol) after geometric tail
// extrapolation of decaying shell increments.  Requires an untruncated
// potential and x off K.
ConvolveReport convolve_potential_gamma(const PotentialSpec& spec,
                                        const PrefractalBoundary& b, Vec2 x,
                                        double t,
                                        const ConvolveOptions& opts = {});

}  // namespace fkmc
