#include "fkmc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fkmc/brownian.hpp"
#include "fkmc/parallel.hpp"

namespace fkmc {

namespace {

// Distance-driven step rule: pinned to h_fine within 2*w_fine of the
// boundary, h_fine + margin^2/margin_c outside, capped at h_max.  The
// distance field supplies a cheap lower bound; the exact query runs only
// when the bound cannot already justify a comfortable step.
struct Stepper {
    const PrefractalBoundary* b = nullptr;
    const DistanceField* df = nullptr;
    double w_fine = 0.0;
    double h_fine = 0.0;
    double h_max = 0.0;
    double margin_c = 50.0;

    double operator()(Vec2 x, double) const {
        double d = 0.0;
        if (df && !df->empty()) {
            double lb = df->lower_bound(x);
            if (lb > 2.0 * w_fine) d = lb;  // conservative: lb <= true distance
        }
        if (d == 0.0) d = b->distance(x);
        double m = d - 2.0 * w_fine;
        if (m <= 0.0) return h_fine;
        return std::min(h_max, h_fine + m * m / margin_c);
    }
};

// True when the midpoint is certainly farther than `radius` from the
// boundary, so the exact distance query can be skipped.
inline bool certainly_beyond(const DistanceField* df, Vec2 p, double radius) {
    return df && !df->empty() && df->lower_bound(p) > radius;
}

DistanceField make_field(const PrefractalBoundary& b, std::initializer_list<Vec2> pts,
                         double pad, const StepControl& opts) {
    DistanceField df;
    if (!opts.use_distance_field || b.segments.size() < 64) return df;
    Bbox box = b.bbox;
    for (Vec2 p : pts) box.expand(p);
    df.build(b, box, pad, opts.df_cells);
    return df;
}

}  // namespace

KernelEstimate kernel_bridge_estimate(const RngKey& key,
                                      const PrefractalBoundary& b,
                                      const PotentialSpec& spec, Vec2 x, Vec2 y,
                                      double t, int64_t n_paths,
                                      const KernelOptions& opts) {
    validate(spec);
    if (!(t > 0.0)) throw std::invalid_argument("kernel_bridge_estimate: t must be positive");
    if (n_paths < 1) throw std::invalid_argument("kernel_bridge_estimate: need paths");

    const bool constant = spec.constant_override.has_value();
    const bool truncated = spec.trunc_A.has_value();
    const double c0 = constant ? *spec.constant_override : 0.0;
    const double w = truncated ? 1.0 / *spec.trunc_A : 0.0;
    const double v_shell = truncated ? spec.c_v * std::pow(*spec.trunc_A, spec.beta) : 0.0;

    DistanceField df = constant ? DistanceField{}
                                : make_field(b, {x, y}, 6.0 * std::sqrt(t) + 1.0, opts.step);
    Stepper step{&b, &df, w,
                 truncated ? (w / 10.0) * (w / 10.0) * 0.5 : t * opts.h_floor_frac,
                 t * opts.step.h_max_frac, opts.step.margin_c};
    const double h_const = t / opts.n_steps_constant;

    const int64_t n_blocks = block_count(n_paths, opts.step.block_size);
    std::vector<Accumulator> accs(n_blocks);
    for_blocks(n_paths, opts.step.block_size, [&](int64_t blk, int64_t lo, int64_t hi) {
        Accumulator acc;
        for (int64_t i = lo; i < hi; ++i) {
            RandomStream rng(key.child("path", static_cast<uint64_t>(i)));
            double f_val = 0.0;
            auto visit = [&](Vec2 p, Vec2 q, double h) {
                if (constant) {
                    f_val += c0 * h;
                    return;
                }
                Vec2 mid = 0.5 * (p + q);
                if (truncated) {
                    if (certainly_beyond(&df, mid, w)) return;
                    if (b.distance(mid) <= w) f_val += v_shell * h;
                } else {
                    f_val += potential_from_distance(spec, b.distance(mid)) * h;
                }
            };
            if (constant) {
                walk_bridge(rng, x, y, t, [&](Vec2, double) { return h_const; }, visit);
            } else {
                walk_bridge(rng, x, y, t, step, visit);
            }
            acc.add(std::exp(-f_val));
        }
        accs[blk] = acc;
    });
    Accumulator total;
    for (const auto& a : accs) total.merge(a);

    KernelEstimate out;
    out.free_density = transition_density(x, y, t);
    out.weight = total.estimate();
    out.density = Estimate{out.free_density * out.weight.value,
                           out.free_density * out.weight.stderr_, total.count()};
    out.n_paths = total.count();
    return out;
}

CrossingEstimate crossing_mass_estimate(const RngKey& key,
                                        const PrefractalBoundary& b,
                                        const PotentialSpec& spec, Vec2 x,
                                        const Ball& target, double t,
                                        int64_t n_paths, int64_t n_steps,
                                        const StepControl& opts) {
    validate(spec);
    if (!spec.trunc_A)
        throw std::invalid_argument("crossing_mass_estimate: spec must carry trunc_A");
    if (!(t > 0.0) || n_paths < 1 || !(target.radius > 0.0))
        throw std::invalid_argument("crossing_mass_estimate: bad arguments");
    const double a_lvl = *spec.trunc_A;
    const double w = 1.0 / a_lvl;
    if (b.resolution > w / 10.0) {
        char msg[192];
        std::snprintf(msg, sizeof msg,
                      "crossing_mass_estimate: boundary resolution %.3g too coarse "
                      "for shell width %.3g (need <= %.3g; Koch level >= %d)",
                      b.resolution, w, w / 10.0,
                      static_cast<int>(std::ceil(std::log(10.0 * a_lvl) / std::log(3.0))));
        throw std::runtime_error(msg);
    }
    const double v_shell = spec.c_v * std::pow(a_lvl, spec.beta);
    if (n_steps <= 0)
        n_steps = std::max<int64_t>(
            400, static_cast<int64_t>(std::ceil(4.0 * v_shell * t)));
    const double h = t / static_cast<double>(n_steps);
    const double sd = std::sqrt(2.0 * h);
    const double v_h = v_shell * h;
    const double r2 = target.radius * target.radius;

    DistanceField df = make_field(
        b, {x, target.center + Vec2{target.radius, target.radius},
            target.center - Vec2{target.radius, target.radius}},
        6.0 * std::sqrt(t) + 1.0, opts);

    const int64_t n_blocks = block_count(n_paths, opts.block_size);
    std::vector<Accumulator> mass_b(n_blocks), hit_b(n_blocks);
    for_blocks(n_paths, opts.block_size, [&](int64_t blk, int64_t lo, int64_t hi) {
        Accumulator am, ah;
        for (int64_t i = lo; i < hi; ++i) {
            RandomStream rng(key.child("path", static_cast<uint64_t>(i)));
            Vec2 z = x;
            double f_val = 0.0;
            int hint = -1;
            for (int64_t s = 0; s < n_steps; ++s) {
                Vec2 dz{sd * rng.normal(), sd * rng.normal()};
                Vec2 mid{z.x + 0.5 * dz.x, z.y + 0.5 * dz.y};
                if (!certainly_beyond(&df, mid, w)) {
                    auto [d, idx] = b.nearest(mid, hint);
                    hint = idx;
                    if (d <= w) f_val += v_h;
                }
                z.x += dz.x;
                z.y += dz.y;
            }
            bool hit = norm2(z - target.center) <= r2;
            am.add(hit ? std::exp(-f_val) : 0.0);
            ah.add(hit ? 1.0 : 0.0);
        }
        mass_b[blk] = am;
        hit_b[blk] = ah;
    });
    Accumulator mass, hit;
    for (int64_t blk = 0; blk < n_blocks; ++blk) {
        mass.merge(mass_b[blk]);
        hit.merge(hit_b[blk]);
    }
    CrossingEstimate out;
    out.trunc_A = a_lvl;
    out.mass = mass.estimate();
    out.hit_prob = hit.estimate();
    out.n_paths = mass.count();
    out.mean_steps = static_cast<double>(n_steps);
    return out;
}

DecayReport decay_rate_fit(const std::vector<MassPoint>& masses) {
    std::vector<FitPoint> pts;
    int censored = 0;
    for (const auto& m : masses) {
        if (!(m.mass > 0.0)) {
            ++censored;
            continue;
        }
        double rel = m.stderr_ > 0.0 ? m.stderr_ / m.mass : 1e-9;
        pts.push_back({std::log(m.trunc_A), std::log(m.mass), 1.0 / (rel * rel)});
    }
    if (pts.size() < 3)
        throw std::runtime_error("decay_rate_fit: fewer than 3 positive masses");
    DecayReport rep;
    rep.fit = weighted_linear_fit(pts);
    rep.fit.n_censored = censored;
    rep.n_censored = censored;
    rep.sigma_hat = -rep.fit.slope;
    rep.sigma_ci_lo = -rep.fit.slope_ci95_hi;
    rep.sigma_ci_hi = -rep.fit.slope_ci95_lo;
    return rep;
}

OccupationStats occupation_samples(const RngKey& key,
                                   const PrefractalBoundary& b, Vec2 x0,
                                   double delta, int n_lo, int n_hi, double a,
                                   int64_t n_paths, double theta) {
    if (!(delta > 0.0) || !(a > 0.0) || !(a < 1.0) || n_lo < 0 || n_hi < n_lo ||
        n_paths < 1 || !(theta > 0.0) || !(theta < 1.0))
        throw std::invalid_argument("occupation_samples: bad arguments");
    if (b.distance(x0) > 1e-9 * std::max(b.diameter, 1.0))
        throw std::invalid_argument("occupation_samples: x0 must lie on the boundary");
    const double deepest = std::pow(a, n_hi + 1);
    if (b.resolution > deepest / 10.0) {
        char msg[192];
        std::snprintf(msg, sizeof msg,
                      "occupation_samples: boundary resolution %.3g too coarse for "
                      "shell %d (inner radius %.3g; need resolution <= %.3g)",
                      b.resolution, n_hi, deepest, deepest / 10.0);
        throw std::runtime_error(msg);
    }

    const double horizon = delta * delta;
    const double h_fine = deepest * deepest / 20.0;
    const double h_max = horizon / 50.0;
    const double outer = std::pow(a, n_lo);  // outermost tracked-shell radius
    StepControl ctrl;
    DistanceField df = make_field(b, {x0}, 6.0 * delta, ctrl);

    // dt = max(h_fine, d^2/q) with q >= 22/a^2 resolves every tracked shell:
    // inside shell n the step is at most a^{2n}/q <= (a^{n+1})^2/20, and the
    // floor binds only within reach of the deepest one.
    const double q = 22.0 / (a * a);

    const int k = n_hi - n_lo + 1;
    std::vector<double> zmat(static_cast<size_t>(n_paths) * k, 0.0);
    const int64_t n_blocks = block_count(n_paths, ctrl.block_size);
    std::vector<Accumulator> step_b(n_blocks);
    for_blocks(n_paths, ctrl.block_size, [&](int64_t blk, int64_t lo, int64_t hi) {
        Accumulator as;
        for (int64_t i = lo; i < hi; ++i) {
            RandomStream rng(key.child("path", static_cast<uint64_t>(i)));
            double* z = &zmat[static_cast<size_t>(i) * k];
            int64_t n_steps = 0;
            // The exact distance established at each midpoint carries forward
            // to the next step choice through the Lipschitz bound
            // d(p) >= d(mid) - |p - mid|, so the step rule itself never pays
            // for a nearest-segment search.  Both bounds sit below the true
            // distance, keeping every step on the safe side of the shell
            // resolution requirement.
            int hint = -1;
            double last_d = 0.0;  // exact at the start: x0 lies on the boundary
            Vec2 last_p = x0;
            auto step = [&](Vec2 p, double) {
                double lb = last_d - norm(p - last_p);
                if (!df.empty()) lb = std::max(lb, df.lower_bound(p));
                if (lb < 0.0) lb = 0.0;
                return std::min(h_max, std::max(h_fine, lb * lb / q));
            };
            auto visit = [&](Vec2 p, Vec2 qn, double h) {
                ++n_steps;
                Vec2 mid = 0.5 * (p + qn);
                if (!df.empty()) {
                    double lb = df.lower_bound(mid);
                    if (lb > outer) {
                        last_d = lb;
                        last_p = mid;
                        return;
                    }
                }
                auto [d, idx] = b.nearest(mid, hint);
                hint = idx;
                last_d = d;
                last_p = mid;
                if (d <= 0.0 || d > outer || d <= deepest) return;
                int n = shell_of(d, a);
                if (n >= n_lo && n <= n_hi) z[n - n_lo] += h;
            };
            walk_forward(rng, x0, horizon, step, visit);
            as.add(static_cast<double>(n_steps));
        }
        step_b[blk] = as;
    });
    Accumulator steps;
    for (const auto& s : step_b) steps.merge(s);

    OccupationStats out;
    out.shell_a = a;
    out.delta = delta;
    out.theta = theta;
    out.n_paths = n_paths;
    out.mean_steps = steps.mean();
    const double alpha = b.nominal_alpha;
    for (int n = n_lo; n <= n_hi; ++n) {
        Accumulator acc;
        double sum_sq = 0.0;
        for (int64_t i = 0; i < n_paths; ++i) {
            double z = zmat[static_cast<size_t>(i) * k + (n - n_lo)];
            acc.add(z);
            sum_sq += z * z;
        }
        OccupationShell sh;
        sh.n = n;
        sh.mean = acc.estimate();
        sh.second_moment = sum_sq / static_cast<double>(n_paths);
        sh.ratio = sh.mean.value > 0.0
                       ? sh.second_moment / (sh.mean.value * sh.mean.value)
                       : 0.0;
        sh.b_n = std::pow(a, n * (2.0 - alpha)) * std::pow(delta, alpha);
        sh.pz_bound = sh.second_moment > 0.0
                          ? paley_zygmund_bound(sh.mean.value, sh.second_moment, theta)
                          : 0.0;
        double thr = theta * sh.mean.value;
        int64_t exceed = 0;
        for (int64_t i = 0; i < n_paths; ++i)
            if (zmat[static_cast<size_t>(i) * k + (n - n_lo)] >= thr) ++exceed;
        sh.n_exceed = exceed;
        sh.frac_above = static_cast<double>(exceed) / static_cast<double>(n_paths);
        out.shells.push_back(sh);
    }
    return out;
}

double occupation_mean_oracle(const PrefractalBoundary& b, Vec2 x0,
                              double delta, int n, double a) {
    if (!(delta > 0.0) || !(a > 0.0) || !(a < 1.0) || n < 0)
        throw std::invalid_argument("occupation_mean_oracle: bad arguments");
    const double r_out = std::pow(a, n);
    const double width = r_out * (1.0 - a);
    const double mesh = width / 8.0;
    if (b.resolution > std::pow(a, n + 1) / 10.0)
        throw std::runtime_error(
            "occupation_mean_oracle: boundary resolution too coarse for this shell");
    Bbox box = b.bbox;
    box.expand(x0);
    const double pad = r_out + mesh;
    const double t = delta * delta;
    double acc = 0.0;
    const int nx = static_cast<int>(std::ceil((box.hi.x - box.lo.x + 2 * pad) / mesh));
    const int ny = static_cast<int>(std::ceil((box.hi.y - box.lo.y + 2 * pad) / mesh));
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            Vec2 c{box.lo.x - pad + (ix + 0.5) * mesh,
                   box.lo.y - pad + (iy + 0.5) * mesh};
            double d = b.distance(c);
            if (d <= std::pow(a, n + 1) || d > r_out) continue;
            double r = norm(c - x0);
            acc += gamma_t(std::max(r, 1e-12), t, 2) * mesh * mesh;
        }
    }
    return acc;
}

DivergenceReport divergence_growth_fit(const RngKey& key,
                                       const PrefractalBoundary& b, double beta,
                                       double c_v, Vec2 x0, double t,
                                       const std::vector<double>& trunc_levels,
                                       int64_t n_paths) {
    if (trunc_levels.size() < 3)
        throw std::invalid_argument("divergence_growth_fit: need >= 3 truncation levels");
    for (size_t i = 1; i < trunc_levels.size(); ++i)
        if (!(trunc_levels[i] > trunc_levels[i - 1]))
            throw std::invalid_argument("divergence_growth_fit: levels must increase");
    if (!(beta > 0.0) || !(c_v > 0.0) || !(t > 0.0) || n_paths < 1)
        throw std::invalid_argument("divergence_growth_fit: bad arguments");
    if (b.distance(x0) > 1e-9 * std::max(b.diameter, 1.0))
        throw std::invalid_argument("divergence_growth_fit: x0 must lie on the boundary");
    const double a_max = trunc_levels.back();
    const double w_out = 1.0 / trunc_levels.front();
    if (b.resolution > (1.0 / a_max) / 10.0) {
        char msg[192];
        std::snprintf(msg, sizeof msg,
                      "divergence_growth_fit: boundary resolution %.3g too coarse "
                      "for the deepest shell %.3g (need <= %.3g)",
                      b.resolution, 1.0 / a_max, 0.1 / a_max);
        throw std::runtime_error(msg);
    }

    const size_t n_lvl = trunc_levels.size();
    std::vector<double> v_shell(n_lvl), inv_a(n_lvl);
    for (size_t j = 0; j < n_lvl; ++j) {
        v_shell[j] = c_v * std::pow(trunc_levels[j], beta);
        inv_a[j] = 1.0 / trunc_levels[j];
    }
    // dt = max(h_fine, d^2/200): inside the level-j shell (d <= 1/A_j) the
    // step is at most 1/(200 A_j^2), the resolution each truncation level
    // itself demands, with the floor binding only inside the deepest one.
    const double h_fine = 1.0 / (200.0 * a_max * a_max);
    const double h_max = t / 50.0;
    StepControl ctrl;
    DistanceField df = make_field(b, {x0}, 6.0 * std::sqrt(t), ctrl);

    std::vector<double> fmat(static_cast<size_t>(n_paths) * n_lvl, 0.0);
    for_blocks(n_paths, ctrl.block_size, [&](int64_t, int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            RandomStream rng(key.child("path", static_cast<uint64_t>(i)));
            double* f = &fmat[static_cast<size_t>(i) * n_lvl];
            // Same distance carry-forward as occupation_samples: the step
            // rule lives off the Lipschitz bound from the last midpoint query
            // and the coarse field, both below the true distance.
            int hint = -1;
            double last_d = 0.0;  // exact at the start: x0 lies on the boundary
            Vec2 last_p = x0;
            auto step = [&](Vec2 p, double) {
                double lb = last_d - norm(p - last_p);
                if (!df.empty()) lb = std::max(lb, df.lower_bound(p));
                if (lb < 0.0) lb = 0.0;
                return std::min(h_max, std::max(h_fine, lb * lb / 200.0));
            };
            auto visit = [&](Vec2 p, Vec2 qn, double h) {
                Vec2 mid = 0.5 * (p + qn);
                if (!df.empty()) {
                    double lb = df.lower_bound(mid);
                    if (lb > w_out) {
                        last_d = lb;
                        last_p = mid;
                        return;
                    }
                }
                auto [d, idx] = b.nearest(mid, hint);
                hint = idx;
                last_d = d;
                last_p = mid;
                for (size_t j = 0; j < n_lvl; ++j)
                    if (d <= inv_a[j]) f[j] += v_shell[j] * h;
            };
            walk_forward(rng, x0, t, step, visit);
        }
    });

    DivergenceReport rep;
    std::vector<FitPoint> pts;
    for (size_t j = 0; j < n_lvl; ++j) {
        std::vector<double> col(n_paths);
        double mean = 0.0;
        for (int64_t i = 0; i < n_paths; ++i) {
            col[i] = fmat[static_cast<size_t>(i) * n_lvl + j];
            mean += col[i];
        }
        mean /= static_cast<double>(n_paths);
        DivergencePoint p;
        p.trunc_A = trunc_levels[j];
        p.median_functional = median(col);
        p.mean_functional = mean;
        rep.points.push_back(p);
        if (p.median_functional > 0.0)
            pts.push_back({std::log(p.trunc_A), std::log(p.median_functional), 1.0});
    }
    if (pts.size() < 3)
        throw std::runtime_error("divergence_growth_fit: fewer than 3 positive medians");
    rep.fit = weighted_linear_fit(pts);
    rep.slope = rep.fit.slope;
    return rep;
}

HarmonicReport harmonic_exponent_fit(const RngKey& key, const DomainSpec& dom,
                                     Vec2 ray_origin, Vec2 ray_dir,
                                     const std::vector<double>& dists,
                                     double eps, int64_t n_walks,
                                     int64_t max_steps) {
    if (!dom.boundary || !dom.target)
        throw std::invalid_argument("harmonic_exponent_fit: domain needs boundary and target");
    if (dists.size() < 3)
        throw std::invalid_argument("harmonic_exponent_fit: need >= 3 approach distances");
    if (!(eps > 0.0) || n_walks < 1)
        throw std::invalid_argument("harmonic_exponent_fit: bad arguments");
    double dn = norm(ray_dir);
    if (!(dn > 0.0)) throw std::invalid_argument("harmonic_exponent_fit: zero direction");
    Vec2 dir = (1.0 / dn) * ray_dir;

    HarmonicReport rep;
    std::vector<FitPoint> pts;
    int64_t timeouts = 0, walks = 0;
    for (size_t kd = 0; kd < dists.size(); ++kd) {
        double d = dists[kd];
        Vec2 start = ray_origin + d * dir;
        double dk = dom.boundary->distance(start);
        if (dk < 0.4 * d || dk > 1.0001 * d) {
            char msg[192];
            std::snprintf(msg, sizeof msg,
                          "harmonic_exponent_fit: approach point at ray distance %.3g "
                          "has boundary distance %.3g (need within [0.4, 1.0001] of it)",
                          d, dk);
            throw std::invalid_argument(msg);
        }
        if (!dom.in_domain(start))
            throw std::invalid_argument("harmonic_exponent_fit: approach point outside domain");
        WosBatch batch = walk_on_spheres_batch(key.child("dist", kd), dom, start,
                                               *dom.target, eps, n_walks,
                                               static_cast<int>(max_steps));
        HarmonicPoint hp;
        hp.dist = d;
        hp.hit = batch.hit_target;
        hp.n_timeout = batch.n_timeout;
        hp.n_walks = n_walks;
        rep.points.push_back(hp);
        timeouts += batch.n_timeout;
        walks += n_walks;
        if (hp.hit.value > 0.0 && hp.hit.stderr_ > 0.0) {
            double rel = hp.hit.stderr_ / hp.hit.value;
            pts.push_back({std::log(d), std::log(hp.hit.value), 1.0 / (rel * rel)});
        }
    }
    rep.timeout_fraction = walks > 0 ? static_cast<double>(timeouts) / walks : 0.0;
    if (pts.size() < 3)
        throw std::runtime_error("harmonic_exponent_fit: fewer than 3 usable hit rates");
    rep.fit = weighted_linear_fit(pts);
    rep.gamma_hat = rep.fit.slope;
    return rep;
}

}  // namespace fkmc
