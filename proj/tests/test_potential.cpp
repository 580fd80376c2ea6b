#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fkmc/geometry.hpp"
#include "fkmc/potential.hpp"
#include "fkmc/rng.hpp"

using namespace fkmc;

namespace {

// Exponential integral E1(z) by series (z <= 1) or modified Lentz continued
// fraction (z > 1); independent oracle for the planar sojourn kernel.
double expint_e1(double z) {
    if (z <= 1.0) {
        const double euler = 0.57721566490153286;
        double sum = -euler - std::log(z);
        double term = 1.0;
        for (int k = 1; k <= 60; ++k) {
            term *= -z / k;
            sum -= term / k;
            if (std::abs(term / k) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    double b = z + 1.0, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 200; ++i) {
        double a = -double(i) * double(i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-z);
}

Path horizontal_path(double y, double x_lo, double x_hi, int n, double horizon) {
    Path p;
    for (int i = 0; i <= n; ++i) {
        p.t.push_back(horizon * i / n);
        p.x.push_back({x_lo + (x_hi - x_lo) * i / n, y});
    }
    return p;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("spec validation") {
    PotentialSpec ok;
    ok.beta = 1.2;
    ok.c_v = 0.5;
    CHECK_NOTHROW(validate(ok));

    PotentialSpec bad = ok;
    bad.beta = 0.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = ok;
    bad.c_v = -1.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = ok;
    bad.trunc_A = 0.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = ok;
    bad.constant_override = -0.1;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("distance potential shapes") {
    PotentialSpec spec;
    spec.beta = 1.5;
    spec.c_v = 2.0;
    CHECK(potential_from_distance(spec, 0.25) ==
          doctest::Approx(2.0 * std::pow(0.25, -1.5)).epsilon(1e-14));
    CHECK(std::isinf(potential_from_distance(spec, 0.0)));

    // truncation: constant plateau c_v A^beta on dist <= 1/A, zero beyond
    PotentialSpec trunc = spec;
    trunc.trunc_A = 8.0;
    double plateau = 2.0 * std::pow(8.0, 1.5);
    CHECK(potential_from_distance(trunc, 0.0) == doctest::Approx(plateau));
    CHECK(potential_from_distance(trunc, 1.0 / 8.0) == doctest::Approx(plateau));
    CHECK(potential_from_distance(trunc, 1.0 / 8.0 + 1e-12) == doctest::Approx(0.0));
    CHECK(potential_from_distance(trunc, 5.0) == doctest::Approx(0.0));
    // the plateau dominates the untruncated potential on the support
    CHECK(plateau <= potential_from_distance(spec, 1.0 / 8.0) + 1e-9);

    PotentialSpec cst;
    cst.constant_override = 3.25;
    CHECK(potential_from_distance(cst, 0.0) == doctest::Approx(3.25));
    CHECK(potential_from_distance(cst, 100.0) == doctest::Approx(3.25));

    PrefractalBoundary line = line_boundary(4.0);
    CHECK(potential_eval(spec, line, {0.0, 0.5}) ==
          doctest::Approx(2.0 * std::pow(0.5, -1.5)).epsilon(1e-12));
}

TEST_CASE("functional is exact for constant potentials") {
    PotentialSpec cst;
    cst.constant_override = 1.7;
    PrefractalBoundary line = line_boundary(4.0);
    Path p = horizontal_path(0.3, -1.0, 1.0, 7, 0.9);
    FunctionalValue f = fk_functional(p, cst, line);
    CHECK(f.value == doctest::Approx(1.7 * 0.9).epsilon(1e-14));
    CHECK(f.refinement_delta == doctest::Approx(0.0));
    CHECK(fk_weight(p, cst, line) == doctest::Approx(std::exp(-1.7 * 0.9)).epsilon(1e-13));
}

TEST_CASE("functional reproduces a constant-distance integrand") {
    // a horizontal path above the line keeps V constant, so the midpoint
    // rule is exact at any skeleton resolution
    PotentialSpec spec;
    spec.beta = 0.8;
    spec.c_v = 1.3;
    PrefractalBoundary line = line_boundary(6.0);
    double y = 0.4, horizon = 1.5;
    double v = 1.3 * std::pow(y, -0.8);
    for (int n : {4, 9, 64}) {
        Path p = horizontal_path(y, -2.0, 2.0, n, horizon);
        FunctionalValue f = fk_functional(p, spec, line);
        CHECK(f.value == doctest::Approx(v * horizon).epsilon(1e-12));
        CHECK(f.refinement_delta < 1e-12 * f.value + 1e-15);
    }
}

TEST_CASE("functional refinement delta reflects skeleton error") {
    // a path sloping toward the boundary has a varying integrand; the
    // coarse/fine discrepancy must shrink as the skeleton refines
    PotentialSpec spec;
    spec.beta = 1.0;
    spec.c_v = 1.0;
    PrefractalBoundary line = line_boundary(6.0);
    auto slope_path = [&](int n) {
        Path p;
        for (int i = 0; i <= n; ++i) {
            double s = double(i) / n;
            p.t.push_back(s);
            p.x.push_back({s, 1.0 - 0.8 * s});
        }
        return p;
    };
    // exact integral of 1/(1 - 0.8 s) over [0,1] is -ln(0.2)/0.8
    double exact = -std::log(0.2) / 0.8;
    FunctionalValue coarse = fk_functional(slope_path(16), spec, line);
    FunctionalValue fine = fk_functional(slope_path(512), spec, line);
    CHECK(fine.refinement_delta < coarse.refinement_delta);
    CHECK(std::abs(fine.value - exact) < 1e-4);
}

TEST_CASE("truncated functional rejects skeletons coarser than the support") {
    PotentialSpec trunc;
    trunc.beta = 1.0;
    trunc.c_v = 1.0;
    trunc.trunc_A = 8.0;
    PrefractalBoundary line = line_boundary(6.0);
    // dt = 0.025 near the support violates dt <= 1/(200 A^2) = 7.8e-5
    Path close = horizontal_path(0.05, -0.2, 0.2, 4, 0.1);
    CHECK_THROWS_AS(fk_functional(close, trunc, line), std::runtime_error);
    // far from the support the same dt is fine
    Path far = horizontal_path(3.0, -0.2, 0.2, 4, 0.1);
    CHECK_NOTHROW(fk_functional(far, trunc, line));
    // a compliant fine skeleton passes and sees the plateau
    Path fine = horizontal_path(0.05, -0.2, 0.2, 2000, 0.1);
    FunctionalValue f = fk_functional(fine, trunc, line);
    CHECK(f.value == doctest::Approx(8.0 * 0.1).epsilon(1e-9));  // c_v A^beta * T
}

TEST_CASE("sojourn kernel against independent special functions") {
    // d=2: Gamma_t(r) = E1(r^2/4t) / (4 pi)
    for (double r : {0.05, 0.3, 1.0, 2.5}) {
        for (double t : {0.2, 1.0, 5.0}) {
            double z = r * r / (4 * t);
            double want = expint_e1(z) / (4 * M_PI);
            CHECK(gamma_t(r, t, 2) == doctest::Approx(want).epsilon(1e-8));
        }
    }
    // d=3: Gamma_t(r) = erfc(r / (2 sqrt(t))) / (4 pi r)
    for (double r : {0.1, 0.7, 2.0}) {
        for (double t : {0.5, 2.0}) {
            double want = std::erfc(r / (2 * std::sqrt(t))) / (4 * M_PI * r);
            CHECK(gamma_t(r, t, 3) == doctest::Approx(want).epsilon(1e-8));
        }
    }
    // limits: infinite-time 3d kernel is the Newtonian 1/(4 pi r)
    CHECK(gamma_t(1.0, 1e8, 3) == doctest::Approx(1.0 / (4 * M_PI)).epsilon(1e-3));
    // monotone decreasing in r
    CHECK(gamma_t(0.1, 1.0, 2) > gamma_t(0.2, 1.0, 2));
    CHECK(gamma_t(0.2, 1.0, 2) > gamma_t(1.0, 1.0, 2));
    // domain errors
    CHECK_THROWS_AS(gamma_t(0.0, 1.0, 2), std::domain_error);
    CHECK_THROWS_AS(gamma_t(1.0, 0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(gamma_t(1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("convolution criterion separates decay regimes on the line") {
    PrefractalBoundary line = line_boundary(8.0);
    ConvolveOptions opts;

    // the source point sits off the boundary; shell masses then scale like
    // gamma^{2-alpha-beta} regardless of where it sits
    Vec2 x{0.0, 0.5};

    PotentialSpec finite;  // alpha + beta = 1.5 < 2
    finite.beta = 0.5;
    ConvolveReport rf = convolve_potential_gamma(finite, line, x, 1.0, opts);
    CHECK(rf.verdict == ConvolveVerdict::finite);
    CHECK(rf.value > 0.0);
    CHECK(rf.growth_ratio < 0.97);
    // shell masses decrease geometrically toward the boundary
    REQUIRE(rf.shell_values.size() >= 4);
    CHECK(rf.shell_values.back() < rf.shell_values.front());

    PotentialSpec diverging;  // alpha + beta = 2.2 > 2
    diverging.beta = 1.2;
    ConvolveReport rd = convolve_potential_gamma(diverging, line, x, 1.0, opts);
    CHECK(rd.verdict == ConvolveVerdict::diverging);
    CHECK(rd.growth_ratio > 0.97);
}

TEST_CASE("convolution criterion rejects unsupported inputs") {
    PrefractalBoundary line = line_boundary(8.0);
    PotentialSpec trunc;
    trunc.trunc_A = 4.0;
    CHECK_THROWS_AS(convolve_potential_gamma(trunc, line, {0.0, 0.5}, 1.0),
                    std::invalid_argument);
    PotentialSpec cst;
    cst.constant_override = 1.0;
    CHECK_THROWS_AS(convolve_potential_gamma(cst, line, {0.0, 0.5}, 1.0),
                    std::invalid_argument);
    PotentialSpec ok;
    ok.beta = 0.5;
    // the source point may not sit on the boundary itself
    CHECK_THROWS_AS(convolve_potential_gamma(ok, line, {0.0, 0.0}, 1.0),
                    std::invalid_argument);
    // prefractal resolution must resolve the innermost shell
    PrefractalBoundary coarse = koch_prefractal(2);
    ConvolveOptions deep;
    deep.mesh_levels = 5;
    CHECK_THROWS_AS(
        convolve_potential_gamma(ok, coarse, {0.5, 0.2886751345948129}, 1.0, deep),
        std::runtime_error);
}

}  // TEST_SUITE
