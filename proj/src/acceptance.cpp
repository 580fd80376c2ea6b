#include "fkmc/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fkmc/brownian.hpp"
#include "fkmc/estimators.hpp"
#include "fkmc/geometry.hpp"
#include "fkmc/harness.hpp"
#include "fkmc/numerics.hpp"
#include "fkmc/parallel.hpp"
#include "fkmc/potential.hpp"
#include "fkmc/rng.hpp"
#include "fkmc/wos.hpp"

namespace fkmc {

namespace {

// ---- pinned targets and tolerances -------------------------------------
const double kSnowflakeAlpha = std::log(4.0) / std::log(3.0);
constexpr double kQvarTarget = 4.0;            // E|X_t - X_0|^2 = 2 d t at t=1, d=2
constexpr double kNormQuadTol = 1e-6;          // kernel normalization quadrature
constexpr double kBridgeMidVar = 0.5;          // unit bridge mid-time, per coordinate
constexpr double kAlphaTol = 0.05;             // box-count dimension
constexpr double kOccSlopeTarget = 1.0;        // log E(Z_n) ~ n log a
constexpr double kOccSlopeTol = 0.15;
constexpr double kOccOracleRelTol = 0.10;
constexpr double kOccMomentRatioMax = 50.0;
constexpr double kSmallDevTheta = 0.5;
constexpr double kSmallDevMinFrac = 0.05;
constexpr double kGrowthTol = 0.2;             // functional growth slopes
constexpr double kGrowthSubMax = 0.1;
constexpr double kTopTwoRelTol = 0.20;         // subcritical mass plateau
constexpr double kGammaTol = 0.1;              // hitting exponents
constexpr double kKochGammaMin = 0.4;
constexpr double kTimeoutMaxFrac = 1e-3;

// ---- experiment geometry (shared by full and fast tiers) ----------------
// Line crossing: start one unit above the barrier, target ball beyond it.
constexpr double kLineHalfWidth = 8.0;
const Vec2 kLineStart{0.0, 1.0};
const Ball kLineTarget{{0.0, -2.2}, 0.25};
// Snowflake crossing: start at the centroid, target outside the bottom edge.
const Vec2 kKochStart{0.5, std::sqrt(3.0) / 6.0};
const Ball kKochTarget{{0.5, -1.5}, 0.3};
constexpr double kCrossT = 1.0;
const std::vector<double> kCrossLevels{4, 8, 16, 32, 64, 128};
// Coupling strengths: strong enough for a clear supercritical decay, weak
// enough that the subcritical transient sits inside the Monte Carlo noise.
constexpr double kLineSupBeta = 1.5, kLineSupCv = 1.0;
constexpr double kLineSubBeta = 0.5, kLineSubCv = 0.15;
constexpr double kKochSupBeta = 1.0, kKochSupCv = 1.0;
constexpr double kKochSubBeta = 0.4, kKochSubCv = 0.2;
constexpr int kCrossKochLevel = 7;

struct TierSizes {
    int64_t qvar_paths;
    int64_t bridge_paths;
    int64_t const_paths;
    int64_t occ_line_paths;
    int64_t occ_koch_paths;
    int64_t growth_paths;
    int64_t crossing_paths;
    int64_t wos_walks;
    int64_t det_paths;
};

TierSizes tier_sizes(const std::string& tier) {
    if (tier == "full")
        return {100000, 100000, 20000, 40000, 4000, 2000, 1000000, 50000, 5000};
    if (tier == "fast")
        return {100000, 100000, 5000, 20000, 1500, 600, 100000, 10000, 5000};
    throw std::invalid_argument("acceptance: tier must be 'fast' or 'full'");
}

struct Reporter {
    std::ostream& log;
    std::string out_dir;
    int index = 0;
    int failures = 0;
    std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();

    void line(bool pass, const std::string& name, const std::string& detail) {
        ++index;
        auto now = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(now - mark).count();
        mark = now;
        char head[32], tail[32];
        std::snprintf(head, sizeof head, "[%2d/11] %s ", index,
                      pass ? "PASS" : "FAIL");
        std::snprintf(tail, sizeof tail, " [%.1fs]", secs);
        log << head << name << " — " << detail << tail << "\n" << std::flush;
        if (!pass) ++failures;
    }

    void artifact(const std::string& name, const std::string& content) const {
        if (out_dir.empty()) return;
        std::filesystem::create_directories(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
        out << content;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Masses CSV shared by the crossing artifacts.
std::string masses_csv(const std::vector<CrossingEstimate>& rows) {
    std::string out = "trunc_A,mass,mass_stderr,hit_prob,hit_stderr,n_paths,mean_steps\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%.17g\n",
                      r.trunc_A, r.mass.value, r.mass.stderr_, r.hit_prob.value,
                      r.hit_prob.stderr_, static_cast<long long>(r.n_paths),
                      r.mean_steps);
        out += buf;
    }
    return out;
}

std::vector<CrossingEstimate> crossing_sweep(const RngKey& key,
                                             const PrefractalBoundary& b,
                                             double beta, double c_v, Vec2 start,
                                             const Ball& target, int64_t n_paths) {
    std::vector<CrossingEstimate> rows;
    for (double a_lvl : kCrossLevels) {
        PotentialSpec spec;
        spec.beta = beta;
        spec.c_v = c_v;
        spec.trunc_A = a_lvl;
        rows.push_back(crossing_mass_estimate(
            key.child("trunc", static_cast<uint64_t>(a_lvl)), b, spec, start,
            target, kCrossT, n_paths));
    }
    return rows;
}

DecayReport fit_of(const std::vector<CrossingEstimate>& rows) {
    std::vector<MassPoint> pts;
    for (const auto& r : rows) pts.push_back({r.trunc_A, r.mass.value, r.mass.stderr_});
    return decay_rate_fit(pts);
}

}  // namespace

int acceptance_suite(const AcceptanceOptions& opts, std::ostream& log) {
    const TierSizes sz = tier_sizes(opts.tier);
    const RngKey root = RngKey::root(opts.seed).child("accept");
    Reporter rep{log, opts.out_dir};
    log << "acceptance tier=" << opts.tier << " seed=" << opts.seed << "\n";

    // [1] Quadratic variation of free paths and kernel normalization.
    try {
        RngKey key = root.child("qvar");
        Accumulator q;
        for (int64_t i = 0; i < sz.qvar_paths; ++i) {
            RandomStream rng(key.child("path", i));
            Path p = sample_path(rng, {0.0, 0.0}, 1.0, 8);
            q.add(norm2(p.x.back()));
        }
        Estimate e = q.estimate();
        // integrate to r = 12, where the remaining mass is e^{-36}: a wider
        // interval starves the adaptive rule's first probe points
        double norm_err = std::abs(
            adaptive_simpson(
                [](double r) {
                    return transition_density_radial(r, 1.0, 2) * 2.0 * M_PI * r;
                },
                0.0, 12.0, 1e-10) -
            1.0);
        bool pass = std::abs(e.value - kQvarTarget) <= 3.0 * e.stderr_ &&
                    norm_err < kNormQuadTol;
        rep.line(pass, "free-path quadratic variation and kernel normalization",
                 "E|X_1-X_0|^2 = " + fmt(e.value) + " (target 4 within 3se = " +
                     fmt(3.0 * e.stderr_) + "), |integral p_1 - 1| = " + fmt(norm_err) +
                     " (tol 1e-06)");
    } catch (const std::exception& ex) {
        rep.line(false, "free-path quadratic variation and kernel normalization", ex.what());
    }

    // [2] Bridge endpoint pinning and mid-time law.
    try {
        RngKey key = root.child("bridge");
        const Vec2 x0{0.3, -0.2}, x1{1.1, 0.7};
        const double t = 1.0;
        Accumulator mx, my, sx, sy;
        int64_t bad_end = 0;
        for (int64_t i = 0; i < sz.bridge_paths; ++i) {
            RandomStream rng(key.child("path", i));
            BridgePath bp = sample_bridge(rng, x0, x1, t, 16);
            if (bp.path.x.back().x != x1.x || bp.path.x.back().y != x1.y) ++bad_end;
            Vec2 mid = bp.path.x[8];
            Vec2 cm = x0 + 0.5 * (x1 - x0);
            mx.add(mid.x - cm.x);
            my.add(mid.y - cm.y);
            sx.add((mid.x - cm.x) * (mid.x - cm.x));
            sy.add((mid.y - cm.y) * (mid.y - cm.y));
        }
        Estimate emx = mx.estimate(), emy = my.estimate();
        Estimate esx = sx.estimate(), esy = sy.estimate();
        bool pass = bad_end == 0 &&
                    std::abs(emx.value) <= 3.0 * emx.stderr_ &&
                    std::abs(emy.value) <= 3.0 * emy.stderr_ &&
                    std::abs(esx.value - kBridgeMidVar) <= 3.0 * esx.stderr_ &&
                    std::abs(esy.value - kBridgeMidVar) <= 3.0 * esy.stderr_;
        rep.line(pass, "bridge endpoint pinning and mid-time law",
                 "exact endpoints: " + std::to_string(sz.bridge_paths - bad_end) + "/" +
                     std::to_string(sz.bridge_paths) + ", mid mean = (" + fmt(emx.value) +
                     ", " + fmt(emy.value) + ") within 3se, mid var = (" + fmt(esx.value) +
                     ", " + fmt(esy.value) + ") target 0.5 within 3se");
    } catch (const std::exception& ex) {
        rep.line(false, "bridge endpoint pinning and mid-time law", ex.what());
    }

    // [3] Constant potential: reweighted kernel equals exp(-ct) p_t exactly.
    try {
        RngKey key = root.child("const");
        PrefractalBoundary line = line_boundary(2.0);
        const Vec2 x{0.1, 0.4}, y{-0.3, -0.2};
        const double t = 0.7;
        bool pass = true;
        std::string detail;
        for (double c : {0.5, 2.0}) {
            PotentialSpec spec;
            spec.constant_override = c;
            KernelEstimate est = kernel_bridge_estimate(key.child("c", (uint64_t)(c * 2)),
                                                        line, spec, x, y, t, sz.const_paths);
            double target = std::exp(-c * t) * transition_density(x, y, t);
            double tol = std::max(3.0 * est.density.stderr_, 1e-12 * target);
            bool ok = std::abs(est.density.value - target) <= tol;
            pass = pass && ok;
            if (!detail.empty()) detail += "; ";
            detail += "c=" + fmt(c) + ": |" + fmt(est.density.value) + " - " +
                      fmt(target) + "| <= " + fmt(tol) + (ok ? "" : " VIOLATED");
        }
        rep.line(pass, "constant-potential kernel exactness", detail);
    } catch (const std::exception& ex) {
        rep.line(false, "constant-potential kernel exactness", ex.what());
    }

    // [4] Box-count dimension of the level-8 snowflake prefractal.
    try {
        PrefractalBoundary koch = koch_prefractal(8);
        RegularityReport mk = minkowski_fit(koch, 0.9 * std::pow(3.0, -7),
                                            1.1 * std::pow(3.0, -2));
        bool pass = std::abs(mk.alpha_hat - kSnowflakeAlpha) <= kAlphaTol;
        rep.line(pass, "box-count dimension, level-8 snowflake",
                 "alpha_hat = " + fmt(mk.alpha_hat) + " (target " + fmt(kSnowflakeAlpha) +
                     " +- " + fmt(kAlphaTol) + ", scales 3^-2..3^-7)");
        std::string csv = "scale,box_count\n";
        for (const auto& p : mk.fit.points)
            csv += fmt(std::exp(-p.x)) + "," + fmt(std::exp(p.y)) + "\n";
        rep.artifact("c04_box_count.csv", csv);
    } catch (const std::exception& ex) {
        rep.line(false, "box-count dimension, level-8 snowflake", ex.what());
    }

    // [5] Line shell occupation: oracle match, geometric decay, moment ratio.
    OccupationStats line_occ;
    try {
        RngKey key = root.child("occupation");
        PrefractalBoundary line = line_boundary(kLineHalfWidth);
        line_occ = occupation_samples(key, line, {0.0, 0.0}, 1.0, 1, 5, 1.0 / 3.0,
                                      sz.occ_line_paths, kSmallDevTheta);
        bool oracle_ok = true, ratio_ok = true;
        std::vector<FitPoint> pts;
        std::string csv = "n,mean,mean_stderr,oracle,ratio,frac_above\n";
        std::string worst;
        for (const auto& sh : line_occ.shells) {
            double oracle = occupation_mean_oracle(line, {0.0, 0.0}, 1.0, sh.n, 1.0 / 3.0);
            double rel = std::abs(sh.mean.value - oracle) / oracle;
            if (rel > kOccOracleRelTol) {
                oracle_ok = false;
                worst += " n=" + std::to_string(sh.n) + " rel=" + fmt(rel);
            }
            if (sh.ratio >= kOccMomentRatioMax) ratio_ok = false;
            double w = sh.mean.stderr_ > 0.0
                           ? 1.0 / ((sh.mean.stderr_ / sh.mean.value) *
                                    (sh.mean.stderr_ / sh.mean.value))
                           : 1.0;
            pts.push_back({sh.n * std::log(1.0 / 3.0), std::log(sh.mean.value), w});
            csv += std::to_string(sh.n) + "," + fmt(sh.mean.value) + "," +
                   fmt(sh.mean.stderr_) + "," + fmt(oracle) + "," + fmt(sh.ratio) +
                   "," + fmt(sh.frac_above) + "\n";
        }
        FitResult fit = weighted_linear_fit(pts);
        bool slope_ok = std::abs(fit.slope - kOccSlopeTarget) <= kOccSlopeTol;
        bool pass = oracle_ok && ratio_ok && slope_ok;
        rep.line(pass, "line shell occupation vs quadrature oracle",
                 "slope = " + fmt(fit.slope) + " (target 1 +- 0.15), oracle match" +
                     (oracle_ok ? " <= 10% all shells" : " VIOLATED:" + worst) +
                     ", max E(Z^2)/E(Z)^2 ratio ok: " + (ratio_ok ? "yes" : "no"));
        rep.artifact("c05_line_occupation.csv", csv);
    } catch (const std::exception& ex) {
        rep.line(false, "line shell occupation vs quadrature oracle", ex.what());
    }

    // [6] Small-deviation fractions P(Z_n >= theta E Z_n) on line and snowflake.
    // The snowflake range stops at n = 4: its paths pay fractal-distance
    // queries on every step, and four shells already span a 27x radius range.
    try {
        RngKey key = root.child("smalldev");
        PrefractalBoundary koch = koch_prefractal(8);
        OccupationStats koch_occ = occupation_samples(key, koch, {0.0, 0.0}, 1.0, 1,
                                                      4, 1.0 / 3.0, sz.occ_koch_paths,
                                                      kSmallDevTheta);
        bool pass = !line_occ.shells.empty();
        double min_frac = 1.0;
        std::string csv = "boundary,n,frac_above,pz_bound\n";
        for (const auto& st : {&line_occ, &koch_occ}) {
            for (const auto& sh : st->shells) {
                min_frac = std::min(min_frac, sh.frac_above);
                if (sh.frac_above < kSmallDevMinFrac) pass = false;
                csv += std::string(st == &line_occ ? "line" : "koch") + "," +
                       std::to_string(sh.n) + "," + fmt(sh.frac_above) + "," +
                       fmt(sh.pz_bound) + "\n";
            }
        }
        rep.line(pass, "small-deviation occupation fractions (theta = 1/2)",
                 "min P(Z_n >= theta E Z_n) = " + fmt(min_frac) +
                     " over line shells 1..5 and snowflake shells 1..4 (need >= 0.05)");
        rep.artifact("c06_small_deviation.csv", csv);
    } catch (const std::exception& ex) {
        rep.line(false, "small-deviation occupation fractions (theta = 1/2)", ex.what());
    }

    // [7] Growth of the truncated functional as the truncation is released.
    try {
        RngKey key = root.child("growth");
        const std::vector<double> levels{8, 16, 32, 64, 128};
        PrefractalBoundary line = line_boundary(kLineHalfWidth);
        PrefractalBoundary koch = koch_prefractal(7);
        DivergenceReport line_sup = divergence_growth_fit(
            key.child("line-sup"), line, 1.5, 1.0, {0.0, 0.0}, 1.0, levels, sz.growth_paths);
        DivergenceReport koch_sup = divergence_growth_fit(
            key.child("koch-sup"), koch, 1.2, 1.0, {0.0, 0.0}, 1.0, levels, sz.growth_paths);
        DivergenceReport line_sub = divergence_growth_fit(
            key.child("line-sub"), line, 0.5, 1.0, {0.0, 0.0}, 1.0, levels, sz.growth_paths);
        double koch_target = 1.2 + kSnowflakeAlpha - 2.0;
        bool p1 = std::abs(line_sup.slope - 0.5) <= kGrowthTol;
        bool p2 = std::abs(koch_sup.slope - koch_target) <= kGrowthTol;
        bool p3 = line_sub.slope <= kGrowthSubMax;
        rep.line(p1 && p2 && p3, "functional growth under truncation release",
                 "line beta=1.5: slope " + fmt(line_sup.slope) + " (target 0.5 +- 0.2)" +
                     (p1 ? "" : " VIOLATED") + "; snowflake beta=1.2: slope " +
                     fmt(koch_sup.slope) + " (target " + fmt(koch_target) + " +- 0.2)" +
                     (p2 ? "" : " VIOLATED") + "; line beta=0.5: slope " +
                     fmt(line_sub.slope) + " (need <= 0.1)" + (p3 ? "" : " VIOLATED"));
        std::string csv = "case,trunc_A,median,mean\n";
        auto add = [&](const char* tag, const DivergenceReport& r) {
            for (const auto& p : r.points)
                csv += std::string(tag) + "," + fmt(p.trunc_A) + "," +
                       fmt(p.median_functional) + "," + fmt(p.mean_functional) + "\n";
        };
        add("line-sup", line_sup);
        add("koch-sup", koch_sup);
        add("line-sub", line_sub);
        rep.artifact("c07_functional_growth.csv", csv);
    } catch (const std::exception& ex) {
        rep.line(false, "functional growth under truncation release", ex.what());
    }

    // [8] Crossing-mass decay in the truncation level.
    try {
        RngKey key = root.child("crossing");
        PrefractalBoundary line = line_boundary(kLineHalfWidth);
        PrefractalBoundary koch = koch_prefractal(kCrossKochLevel);

        auto line_sup = crossing_sweep(key.child("line-sup"), line, kLineSupBeta,
                                       kLineSupCv, kLineStart, kLineTarget,
                                       sz.crossing_paths);
        auto line_sub = crossing_sweep(key.child("line-sub"), line, kLineSubBeta,
                                       kLineSubCv, kLineStart, kLineTarget,
                                       sz.crossing_paths);
        auto koch_sup = crossing_sweep(key.child("koch-sup"), koch, kKochSupBeta,
                                       kKochSupCv, kKochStart, kKochTarget,
                                       sz.crossing_paths);
        auto koch_sub = crossing_sweep(key.child("koch-sub"), koch, kKochSubBeta,
                                       kKochSubCv, kKochStart, kKochTarget,
                                       sz.crossing_paths);
        rep.artifact("c08_line_supercritical.csv", masses_csv(line_sup));
        rep.artifact("c08_line_subcritical.csv", masses_csv(line_sub));
        rep.artifact("c08_koch_supercritical.csv", masses_csv(koch_sup));
        rep.artifact("c08_koch_subcritical.csv", masses_csv(koch_sub));

        DecayReport f_ls = fit_of(line_sup), f_lb = fit_of(line_sub);
        DecayReport f_ks = fit_of(koch_sup), f_kb = fit_of(koch_sub);
        auto plateau_ok = [](const std::vector<CrossingEstimate>& rows) {
            const auto& m1 = rows[rows.size() - 2].mass;
            const auto& m2 = rows[rows.size() - 1].mass;
            bool positive = m1.ci95_lo() > 0.0 && m2.ci95_lo() > 0.0;
            double rel = std::abs(m1.value - m2.value) /
                         std::max(std::abs(m2.value), 1e-300);
            return positive && rel < kTopTwoRelTol;
        };
        bool p_ls = f_ls.sigma_ci_lo > 0.0;
        bool p_ks = f_ks.sigma_ci_lo > 0.0;
        bool p_lb = f_lb.sigma_ci_lo <= 0.0 && f_lb.sigma_ci_hi >= 0.0 && plateau_ok(line_sub);
        bool p_kb = f_kb.sigma_ci_lo <= 0.0 && f_kb.sigma_ci_hi >= 0.0 && plateau_ok(koch_sub);
        rep.line(p_ls && p_ks && p_lb && p_kb, "crossing-mass decay in the truncation level",
                 "supercritical sigma: line " + fmt(f_ls.sigma_hat) + " CI [" +
                     fmt(f_ls.sigma_ci_lo) + ", " + fmt(f_ls.sigma_ci_hi) +
                     "], snowflake " + fmt(f_ks.sigma_hat) + " CI [" + fmt(f_ks.sigma_ci_lo) +
                     ", " + fmt(f_ks.sigma_ci_hi) + "] (need CI > 0); subcritical sigma: line " +
                     fmt(f_lb.sigma_hat) + " CI [" + fmt(f_lb.sigma_ci_lo) + ", " +
                     fmt(f_lb.sigma_ci_hi) + "], snowflake " + fmt(f_kb.sigma_hat) + " CI [" +
                     fmt(f_kb.sigma_ci_lo) + ", " + fmt(f_kb.sigma_ci_hi) +
                     "] (need CI containing 0 and a positive two-point plateau within 20%)");
    } catch (const std::exception& ex) {
        rep.line(false, "crossing-mass decay in the truncation level", ex.what());
    }

    // [9] Convolution finiteness verdicts.
    try {
        PrefractalBoundary line = line_boundary(20.0);
        PrefractalBoundary koch = koch_prefractal(9);
        auto verdict = [&](const PrefractalBoundary& b, Vec2 x, double beta) {
            PotentialSpec spec;
            spec.beta = beta;
            return convolve_potential_gamma(spec, b, x, 1.0);
        };
        Vec2 lx{0.0, 0.5};
        ConvolveReport r1 = verdict(line, lx, 0.5);
        ConvolveReport r2 = verdict(line, lx, 1.0);
        ConvolveReport r3 = verdict(koch, kKochStart, 0.3);
        ConvolveReport r4 = verdict(koch, kKochStart, 0.8);
        bool p1 = r1.verdict == ConvolveVerdict::finite;
        bool p2 = r2.verdict == ConvolveVerdict::diverging;
        bool p3 = r3.verdict == ConvolveVerdict::finite;
        bool p4 = r4.verdict == ConvolveVerdict::diverging;
        auto vs = [](const ConvolveReport& r) {
            return std::string(r.verdict == ConvolveVerdict::finite ? "finite" : "diverging") +
                   " (rel change " + fmt(r.last_rel_change) + ", growth " +
                   fmt(r.growth_ratio) + ")";
        };
        rep.line(p1 && p2 && p3 && p4, "convolution finiteness verdicts",
                 "line beta=0.5: " + vs(r1) + (p1 ? "" : " VIOLATED") +
                     "; line beta=1.0: " + vs(r2) + (p2 ? "" : " VIOLATED") +
                     "; snowflake beta=0.3: " + vs(r3) + (p3 ? "" : " VIOLATED") +
                     "; snowflake beta=0.8: " + vs(r4) + (p4 ? "" : " VIOLATED"));
    } catch (const std::exception& ex) {
        rep.line(false, "convolution finiteness verdicts", ex.what());
    }

    // [10] Hitting exponents via walk-on-spheres.
    try {
        RngKey key = root.child("hitting");
        const std::vector<double> dists{0.04, 0.08, 0.16, 0.32};
        std::string detail;
        bool pass = true;

        PrefractalBoundary half = line_boundary(50.0);
        DomainSpec dom1{&half, Orientation::upper_half, Ball{{0.0, 2.0}, 0.5}};
        HarmonicReport h1 = harmonic_exponent_fit(key.child("half"), dom1, {0.0, 0.0},
                                                  {0.0, 1.0}, dists, 5e-5, sz.wos_walks);
        bool p1 = std::abs(h1.gamma_hat - 1.0) <= kGammaTol &&
                  h1.timeout_fraction <= kTimeoutMaxFrac;
        pass = pass && p1;
        detail += "half-plane gamma = " + fmt(h1.gamma_hat) + " (target 1 +- 0.1)" +
                  (p1 ? "" : " VIOLATED");

        PrefractalBoundary slit = line_boundary(5.0);
        DomainSpec dom2{&slit, Orientation::complement, Ball{{0.0, 3.0}, 0.5}};
        HarmonicReport h2 = harmonic_exponent_fit(key.child("slit"), dom2, {-5.0, 0.0},
                                                  {-1.0, 0.0}, dists, 5e-5, sz.wos_walks);
        bool p2 = std::abs(h2.gamma_hat - 0.5) <= kGammaTol &&
                  h2.timeout_fraction <= kTimeoutMaxFrac;
        pass = pass && p2;
        detail += "; slit tip gamma = " + fmt(h2.gamma_hat) + " (target 0.5 +- 0.1)" +
                  (p2 ? "" : " VIOLATED");

        PrefractalBoundary koch = koch_prefractal(6);
        Vec2 dir{-0.5, -std::sqrt(3.0) / 6.0};  // from the centroid through (0,0)
        double dn = norm(dir);
        dir = (1.0 / dn) * dir;
        DomainSpec dom3{&koch, Orientation::exterior, Ball{2.0 * dir, 0.4}};
        HarmonicReport h3 = harmonic_exponent_fit(key.child("koch"), dom3, {0.0, 0.0},
                                                  dir, {0.03125, 0.0625, 0.125, 0.25},
                                                  5e-5, sz.wos_walks);
        bool p3 = h3.gamma_hat >= kKochGammaMin && h3.timeout_fraction <= kTimeoutMaxFrac;
        pass = pass && p3;
        detail += "; snowflake exterior gamma = " + fmt(h3.gamma_hat) + " (need >= 0.4)" +
                  (p3 ? "" : " VIOLATED");

        rep.line(pass, "hitting exponents via walk-on-spheres", detail);
        std::string csv = "case,dist,hit,hit_stderr\n";
        auto add = [&](const char* tag, const HarmonicReport& h) {
            for (const auto& p : h.points)
                csv += std::string(tag) + "," + fmt(p.dist) + "," + fmt(p.hit.value) +
                       "," + fmt(p.hit.stderr_) + "\n";
        };
        add("half-plane", h1);
        add("slit", h2);
        add("koch-exterior", h3);
        rep.artifact("c10_hitting_exponents.csv", csv);
    } catch (const std::exception& ex) {
        rep.line(false, "hitting exponents via walk-on-spheres", ex.what());
    }

    // [11] Byte-level determinism of experiment outputs.
    try {
        auto run_once = [&](int workers) {
            int saved = worker_count();
            set_worker_count(workers);
            std::string all;
            ExperimentConfig cfg = ExperimentConfig::from_string(
                "boundary=line\nhalf_width=8\nx0_x=0\nx0_y=1\n"
                "target_x=0\ntarget_y=-2.2\ntarget_r=0.25\n"
                "beta=1.5\nc_v=1\ntrunc_levels=16\nt=1\nn_paths=" +
                std::to_string(sz.det_paths) + "\n");
            all += run_experiment("crossing", cfg, opts.seed).csv;
            ExperimentConfig occ = ExperimentConfig::from_string(
                "boundary=line\nhalf_width=8\nx0_x=0\nx0_y=0\ndelta=1\n"
                "n_lo=1\nn_hi=3\nn_paths=3000\n");
            all += run_experiment("occupation", occ, opts.seed).csv;
            ExperimentConfig ker = ExperimentConfig::from_string(
                "boundary=line\nhalf_width=2\nx0_x=0.1\nx0_y=0.4\n"
                "x1_x=-0.3\nx1_y=-0.2\nt=0.7\nconstant=1\nn_paths=4096\n");
            all += run_experiment("kernel", ker, opts.seed).csv;
            ExperimentConfig har = ExperimentConfig::from_string(
                "boundary=line\nhalf_width=50\norientation=upper_half\n"
                "target_x=0\ntarget_y=2\ntarget_r=0.5\nray_origin_x=0\nray_origin_y=0\n"
                "ray_dir_x=0\nray_dir_y=1\ndists=0.1,0.2,0.4\neps=0.0001\nn_walks=2000\n");
            all += run_experiment("harmonic", har, opts.seed).csv;
            set_worker_count(saved);
            return all;
        };
        std::string a = run_once(1);
        std::string b = run_once(1);
        std::string c = run_once(2);
        bool same_seed = (a == b);
        bool same_workers = (a == c);
        rep.line(same_seed && same_workers, "byte-level determinism of outputs",
                 std::string("repeat run identical: ") + (same_seed ? "yes" : "NO") +
                     ", worker-count independent: " + (same_workers ? "yes" : "NO") +
                     " (" + std::to_string(a.size()) + " bytes compared)");
        rep.artifact("c11_determinism.csv", a);
    } catch (const std::exception& ex) {
        rep.line(false, "byte-level determinism of outputs", ex.what());
    }

    log << (rep.failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << " ("
        << (11 - rep.failures) << "/11)\n";
    return rep.failures;
}

}  // namespace fkmc
