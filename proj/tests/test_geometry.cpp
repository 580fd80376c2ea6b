#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkmc/geometry.hpp"
#include "fkmc/rng.hpp"

using namespace fkmc;

namespace {

double brute_distance(const PrefractalBoundary& b, Vec2 p) {
    double best = 1e300;
    for (const Segment& s : b.segments)
        best = std::min(best, std::sqrt(point_segment_dist2(p, s)));
    return best;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("vector and segment primitives") {
    Vec2 a{1.0, 2.0}, b{-0.5, 4.0};
    CHECK((a + b).x == doctest::Approx(0.5));
    CHECK((a - b).y == doctest::Approx(-2.0));
    CHECK(dot(a, b) == doctest::Approx(7.5));
    CHECK(cross(a, b) == doctest::Approx(5.0));
    CHECK(norm(Vec2{3.0, 4.0}) == doctest::Approx(5.0));

    Segment s{{0, 0}, {2, 0}};
    CHECK(point_segment_dist2({1, 1}, s) == doctest::Approx(1.0));
    CHECK(point_segment_dist2({-1, 0}, s) == doctest::Approx(1.0));
    CHECK(point_segment_dist2({3, 4}, s) == doctest::Approx(17.0));
    CHECK(point_segment_dist2({0.7, 0}, s) == doctest::Approx(0.0));
}

TEST_CASE("snowflake construction counts and lengths") {
    for (int level : {0, 1, 2, 4}) {
        PrefractalBoundary b = koch_prefractal(level);
        size_t expect = size_t(3) * size_t(std::pow(4.0, level));
        CHECK(b.segments.size() == expect);
        CHECK(b.closed);
        CHECK(b.level == level);
        double seg_len = std::pow(3.0, -level);
        for (size_t i = 0; i < b.segments.size(); i += 13) {
            const Segment& s = b.segments[i];
            CHECK(norm(s.b - s.a) == doctest::Approx(seg_len).epsilon(1e-12));
        }
        CHECK(b.total_length() ==
              doctest::Approx(3.0 * std::pow(4.0 / 3.0, level)).epsilon(1e-12));
        CHECK(b.resolution == doctest::Approx(seg_len));
        // base vertices survive every refinement
        CHECK(b.distance({0, 0}) < 1e-12);
        CHECK(b.distance({1, 0}) < 1e-12);
    }
    CHECK(koch_prefractal(2).nominal_alpha ==
          doctest::Approx(std::log(4.0) / std::log(3.0)));
}

TEST_CASE("snowflake refinement stays within one segment length") {
    // each refinement step moves points by at most the parent segment length
    PrefractalBoundary coarse = koch_prefractal(3);
    PrefractalBoundary fine = koch_prefractal(4);
    RandomStream rng(RngKey::root(5).child("haus"));
    for (int i = 0; i < 300; ++i) {
        Vec2 p = coarse.sample_point(rng);
        CHECK(fine.distance(p) <= std::pow(3.0, -3) + 1e-12);
        Vec2 q = fine.sample_point(rng);
        CHECK(coarse.distance(q) <= std::pow(3.0, -3) + 1e-12);
    }
}

TEST_CASE("line boundary") {
    PrefractalBoundary b = line_boundary(8.0);
    REQUIRE(b.segments.size() == 1);
    CHECK(!b.closed);
    CHECK(b.nominal_alpha == doctest::Approx(1.0));
    CHECK(b.total_length() == doctest::Approx(16.0));
    CHECK(b.distance({0.0, 0.5}) == doctest::Approx(0.5));
    CHECK(b.distance({9.0, 0.0}) == doctest::Approx(1.0));
    CHECK(!contains_interior(b, {0.0, 0.1}));
}

TEST_CASE("grid-accelerated distance agrees with brute force") {
    PrefractalBoundary b = koch_prefractal(5);
    RandomStream rng(RngKey::root(17).child("probe"));
    for (int i = 0; i < 500; ++i) {
        // mixture of near-boundary and far points
        Vec2 p{-0.8 + 2.6 * rng.uniform(), -1.2 + 2.4 * rng.uniform()};
        double got = b.distance(p);
        double want = brute_distance(b, p);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
        auto [d, idx] = b.nearest(p);
        CHECK(d == doctest::Approx(want).epsilon(1e-12));
        REQUIRE(idx >= 0);
        REQUIRE(idx < int(b.segments.size()));
        CHECK(std::sqrt(point_segment_dist2(p, b.segments[idx])) ==
              doctest::Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("far-field distance queries agree with brute force") {
    // points well outside the gridded area take the box-hierarchy path
    PrefractalBoundary b = koch_prefractal(5);
    RandomStream rng(RngKey::root(18).child("far"));
    for (int i = 0; i < 300; ++i) {
        double r = 2.0 + 28.0 * rng.uniform();
        double th = 2.0 * M_PI * rng.uniform();
        Vec2 p{0.5 + r * std::cos(th), 0.29 + r * std::sin(th)};
        auto [d, idx] = b.nearest(p);
        double want = brute_distance(b, p);
        CHECK(d == doctest::Approx(want).epsilon(1e-12));
        REQUIRE(idx >= 0);
        CHECK(std::sqrt(point_segment_dist2(p, b.segments[idx])) ==
              doctest::Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("warm-started distance queries match cold ones") {
    // simulated path locality: each query hints with the previous answer,
    // good or bad, and must still return the exact distance
    PrefractalBoundary b = koch_prefractal(6);
    RandomStream rng(RngKey::root(19).child("warm"));
    Vec2 p{0.5, 0.3};
    int hint = -1;
    for (int i = 0; i < 2000; ++i) {
        p.x += 0.02 * rng.normal();
        p.y += 0.02 * rng.normal();
        auto [d, idx] = b.nearest(p, hint);
        CHECK(d == doctest::Approx(b.distance(p)).epsilon(1e-12));
        REQUIRE(idx >= 0);
        CHECK(std::sqrt(point_segment_dist2(p, b.segments[idx])) ==
              doctest::Approx(d).epsilon(1e-12));
        hint = idx;
        if (i % 97 == 0) hint = int(rng.uniform() * b.segments.size());  // stale
        if (i % 193 == 0) hint = -7;  // invalid falls back to the cold path
    }
}

TEST_CASE("interior test against winding number") {
    PrefractalBoundary b = koch_prefractal(4);
    RandomStream rng(RngKey::root(23).child("wind"));
    // winding number around p from the closed polyline, as an independent
    // inside test away from the boundary
    auto winding_inside = [&](Vec2 p) {
        double angle = 0.0;
        for (const Segment& s : b.segments) {
            Vec2 u = s.a - p, v = s.b - p;
            angle += std::atan2(cross(u, v), dot(u, v));
        }
        return std::abs(angle) > M_PI;
    };
    int tested = 0;
    for (int i = 0; i < 2000 && tested < 400; ++i) {
        Vec2 p{-0.8 + 2.6 * rng.uniform(), -1.2 + 2.4 * rng.uniform()};
        if (b.distance(p) < 0.02) continue;  // resolve containment away from edges
        ++tested;
        CHECK(contains_interior(b, p) == winding_inside(p));
    }
    CHECK(tested >= 300);
    CHECK(contains_interior(b, {0.5, 0.2886751345948129}));  // centroid
    CHECK(!contains_interior(b, {5.0, 5.0}));
}

TEST_CASE("shell indexing edges") {
    const double a = 1.0 / 3.0;
    // shell n is (a^{n+1}, a^n]: outer edge in, inner edge out
    CHECK(shell_of(1.0 / 3.0, a) == 1);
    CHECK(shell_of(1.0 / 3.0 + 1e-12, a) == 0);
    CHECK(shell_of(1.0 / 9.0, a) == 2);
    CHECK(shell_of(0.2, a) == 1);
    CHECK(shell_of(2.0, a) == -1);
    CHECK_THROWS_AS(shell_of(0.0, a), std::invalid_argument);
    CHECK_THROWS_AS(shell_of(0.5, 1.5), std::invalid_argument);

    PrefractalBoundary line = line_boundary(4.0);
    CHECK(shell_indicator(line, {0.0, 0.2}, 1, a));
    CHECK(!shell_indicator(line, {0.0, 0.2}, 2, a));
    CHECK(shell_indicator(line, {0.0, -1.0 / 3.0}, 1, a));
    CHECK(!shell_indicator(line, {0.0, 1.0 / 3.0}, 0, a));
}

TEST_CASE("boundary csv round trip") {
    PrefractalBoundary b = koch_prefractal(3);
    std::string path = "/tmp/fkmc_test_boundary.csv";
    save_boundary_csv(b, path);
    PrefractalBoundary r = load_boundary_csv(path);
    REQUIRE(r.segments.size() == b.segments.size());
    CHECK(r.closed == b.closed);
    CHECK(r.level == b.level);
    CHECK(r.nominal_alpha == doctest::Approx(b.nominal_alpha));
    for (size_t i = 0; i < b.segments.size(); ++i) {
        CHECK(r.segments[i].a.x == b.segments[i].a.x);
        CHECK(r.segments[i].a.y == b.segments[i].a.y);
        CHECK(r.segments[i].b.x == b.segments[i].b.x);
        CHECK(r.segments[i].b.y == b.segments[i].b.y);
    }
    // loaded copy answers queries identically
    CHECK(r.distance({0.3, 0.4}) == doctest::Approx(b.distance({0.3, 0.4})));
    std::remove(path.c_str());
}

TEST_CASE("box-count fit recovers dimension one for a line") {
    PrefractalBoundary b = line_boundary(8.0);
    RegularityReport rep = minkowski_fit(b, 1e-3, 1e-1);
    CHECK(std::abs(rep.alpha_hat - 1.0) < 0.03);
    CHECK(rep.alpha_ci_lo <= rep.alpha_hat);
    CHECK(rep.alpha_ci_hi >= rep.alpha_hat);
}

TEST_CASE("box-count fit approaches the snowflake dimension") {
    PrefractalBoundary b = koch_prefractal(6);
    double lo = 1.1 * std::pow(3.0, -5), hi = 0.9 * std::pow(3.0, -1);
    RegularityReport rep = minkowski_fit(b, lo, hi);
    CHECK(std::abs(rep.alpha_hat - std::log(4.0) / std::log(3.0)) < 0.08);
}

TEST_CASE("volume probe brackets the nominal scaling") {
    PrefractalBoundary b = koch_prefractal(7);  // resolves gamma = 3^-4 tenfold
    RandomStream rng(RngKey::root(31).child("reg"));
    RegularityReport rep =
        regularity_probe(b, 6, std::pow(3.0, -4), std::pow(3.0, -1), rng, 20000);
    CHECK(rep.c2_hat > 0.0);
    CHECK(rep.c1_hat >= rep.c2_hat);
    CHECK(rep.c1_hat / rep.c2_hat < 50.0);  // bounded ratio over probed scales
}

TEST_CASE("distance field lower bound is conservative") {
    PrefractalBoundary b = koch_prefractal(5);
    DistanceField df;
    df.build(b, b.bbox, 0.5, 256);
    REQUIRE(!df.empty());
    RandomStream rng(RngKey::root(41).child("field"));
    for (int i = 0; i < 2000; ++i) {
        Vec2 p{-1.0 + 3.0 * rng.uniform(), -1.5 + 3.0 * rng.uniform()};
        double lb = df.lower_bound(p);
        CHECK(lb <= b.distance(p) + 1e-12);
    }
}

TEST_CASE("domain orientation") {
    PrefractalBoundary koch = koch_prefractal(3);
    DomainSpec interior{&koch, Orientation::interior, {}};
    DomainSpec exterior{&koch, Orientation::exterior, {}};
    Vec2 centroid{0.5, 0.2886751345948129};
    CHECK(interior.in_domain(centroid));
    CHECK(!exterior.in_domain(centroid));
    CHECK(!interior.in_domain({4.0, 4.0}));
    CHECK(exterior.in_domain({4.0, 4.0}));

    PrefractalBoundary line = line_boundary(5.0);
    DomainSpec upper{&line, Orientation::upper_half, {}};
    DomainSpec comp{&line, Orientation::complement, {}};
    CHECK(upper.in_domain({0.0, 0.3}));
    CHECK(!upper.in_domain({0.0, -0.3}));
    CHECK(comp.in_domain({0.0, -0.3}));
}

}  // TEST_SUITE
