// Monte Carlo estimators for the Feynman-Kac quantities: reweighted bridge
// kernels, truncated-potential crossing masses and their decay rate in the
// truncation level, shell occupation statistics with the small-deviation
// (Paley-Zygmund) check, growth of the additive functional as the truncation
// is released, and harmonic-measure hitting exponents via walk-on-spheres.
//
// Every estimator derives one substream per path from the caller's RngKey
// and accumulates in fixed-size blocks merged in index order, so results are
// byte-identical for any worker count.
#pragma once

#include <cstdint>
#include <vector>

#include "fkmc/geometry.hpp"
#include "fkmc/potential.hpp"
#include "fkmc/rng.hpp"
#include "fkmc/stats.hpp"
#include "fkmc/wos.hpp"

namespace fkmc {

// Time-step control for paths interacting with a shell of width `w_fine`
// around the boundary: dt is pinned to h_fine = (w_fine/10)^2/2 within two
// shell widths and relaxes quadratically with the distance margin outside
// (dt ~ margin^2/margin_c, rms move ~ 0.28 margin at the default), capped at
// h_max_frac * horizon.
struct StepControl {
    double margin_c = 50.0;
    double h_max_frac = 0.02;
    bool use_distance_field = true;
    int df_cells = 512;
    int64_t block_size = 4096;
};

struct KernelEstimate {
    double free_density = 0.0;  // p_t(x,y) with no potential
    Estimate weight;            // E over bridges of exp(-A_V)
    Estimate density;           // free_density * weight
    int64_t n_paths = 0;
};

// p_t^V(x,y) estimated as p_t(x,y) E[exp(-A_V) | bridge x->y].  Constant
// potentials skip distance queries entirely (the weight is deterministic);
// truncated potentials use the adaptive stepping above; untruncated ones
// additionally floor dt at h_floor_frac * t.
struct KernelOptions {
    StepControl step;
    int n_steps_constant = 64;
    double h_floor_frac = 1e-6;
};

KernelEstimate kernel_bridge_estimate(const RngKey& key,
                                      const PrefractalBoundary& b,
                                      const PotentialSpec& spec, Vec2 x, Vec2 y,
                                      double t, int64_t n_paths,
                                      const KernelOptions& opts = {});

struct CrossingEstimate {
    double trunc_A = 0.0;
    Estimate mass;      // E[exp(-A_{V^A}) 1{X_t in target}]
    Estimate hit_prob;  // E[1{X_t in target}] on the same paths
    int64_t n_paths = 0;
    double mean_steps = 0.0;
};

// Forward paths from x over horizon t on a uniform skeleton of n_steps
// increments; the mass is the truncated semigroup applied to the target-ball
// indicator, accumulated by the midpoint rule.  The potential spec must
// carry trunc_A.  n_steps <= 0 picks max(400, ceil(4 c_v A^beta t)), which
// caps the per-step potential increment at 1/4 so weight granularity cannot
// masquerade as extra decay.  Identical keys and step counts give identical
// paths, so masses are monotone in c_v realization by realization when
// n_steps is pinned across the comparison.
CrossingEstimate crossing_mass_estimate(const RngKey& key,
                                        const PrefractalBoundary& b,
                                        const PotentialSpec& spec, Vec2 x,
                                        const Ball& target, double t,
                                        int64_t n_paths, int64_t n_steps = 0,
                                        const StepControl& opts = {});

struct MassPoint {
    double trunc_A = 0.0;
    double mass = 0.0;
    double stderr_ = 0.0;
};

struct DecayReport {
    FitResult fit;  // log mass against log A, weighted by stderr
    double sigma_hat = 0.0;  // decay exponent: mass ~ A^-sigma
    double sigma_ci_lo = 0.0;
    double sigma_ci_hi = 0.0;
    int n_censored = 0;
};

DecayReport decay_rate_fit(const std::vector<MassPoint>& masses);

struct OccupationShell {
    int n = 0;
    Estimate mean;               // E(Z_n), Z_n the sojourn time in shell n
    double second_moment = 0.0;  // E(Z_n^2)
    double ratio = 0.0;          // E(Z_n^2)/E(Z_n)^2
    double b_n = 0.0;            // a^{n(d-alpha)} delta^{2-d+alpha}
    double pz_bound = 0.0;       // (1-theta)^2 E(Z)^2 / E(Z^2), estimated
    double frac_above = 0.0;     // empirical P(Z_n >= theta E(Z_n))
    int64_t n_exceed = 0;
};

struct OccupationStats {
    std::vector<OccupationShell> shells;
    double shell_a = 0.0;
    double delta = 0.0;
    double theta = 0.0;
    int64_t n_paths = 0;
    double mean_steps = 0.0;
};

// Sojourn times of forward paths started on the boundary in the shells
// K'_n = {a^{n+1} < d_K <= a^n}, n in [n_lo, n_hi], over horizon delta^2.
// Steps are pinned to (a^{n_hi+1})^2/20 whenever the path is within reach of
// the deepest shell and relax quadratically with distance outside.
OccupationStats occupation_samples(const RngKey& key,
                                   const PrefractalBoundary& b, Vec2 x0,
                                   double delta, int n_lo, int n_hi, double a,
                                   int64_t n_paths, double theta = 0.5);

// Quadrature oracle for E(Z_n) = int over the shell of Gamma_{delta^2}(|x0-y|).
double occupation_mean_oracle(const PrefractalBoundary& b, Vec2 x0,
                              double delta, int n, double a);

struct DivergencePoint {
    double trunc_A = 0.0;
    double median_functional = 0.0;
    double mean_functional = 0.0;
};

struct DivergenceReport {
    std::vector<DivergencePoint> points;
    FitResult fit;  // log median against log A, unweighted
    double slope = 0.0;
};

// Growth of A_{V^A} over paths started on the boundary as the truncation is
// released: all truncation levels are evaluated on common paths.
DivergenceReport divergence_growth_fit(const RngKey& key,
                                       const PrefractalBoundary& b, double beta,
                                       double c_v, Vec2 x0, double t,
                                       const std::vector<double>& trunc_levels,
                                       int64_t n_paths);

struct HarmonicPoint {
    double dist = 0.0;
    Estimate hit;
    int64_t n_timeout = 0;
    int64_t n_walks = 0;
};

struct HarmonicReport {
    std::vector<HarmonicPoint> points;
    FitResult fit;  // log hit probability against log distance
    double gamma_hat = 0.0;
    double timeout_fraction = 0.0;
};

// Hitting probability of the domain's target ball from approach points
// ray_origin + dist * ray_dir, fitted as h(x) ~ dist^gamma.  Walks that
// exceed max_steps are counted and must stay below one per thousand.
HarmonicReport harmonic_exponent_fit(const RngKey& key, const DomainSpec& dom,
                                     Vec2 ray_origin, Vec2 ray_dir,
                                     const std::vector<double>& dists,
                                     double eps, int64_t n_walks,
                                     int64_t max_steps = 100000);

}  // namespace fkmc
