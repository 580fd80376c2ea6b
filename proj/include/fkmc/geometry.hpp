// Planar prefractal boundaries: Koch snowflake prefractals and straight
// segments, with fast distance queries (bucketed uniform grid), point
// classification, shell membership, box-counting dimension fits, and a
// Monte Carlo probe of the two-sided neighbourhood volume bounds
//   c2 r^alpha gamma^(d-alpha) <= |K_gamma ∩ B(x,r)| <= c1 r^alpha gamma^(d-alpha).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fkmc/rng.hpp"
#include "fkmc/stats.hpp"

namespace fkmc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
double norm(Vec2 a);

struct Segment {
    Vec2 a, b;
};

struct Ball {
    Vec2 center;
    double radius = 0.0;
};

struct Bbox {
    Vec2 lo{1e300, 1e300};
    Vec2 hi{-1e300, -1e300};
    void expand(Vec2 p);
    double diag() const;
};

double point_segment_dist2(Vec2 p, const Segment& s);

// Uniform bucket grid over the segments (CSR layout).  Cell size is the
// larger of the longest segment and diag/1024, so high prefractal levels
// stay within memory while queries scan only a handful of segments.
class SegmentGrid {
  public:
    SegmentGrid() = default;
    void build(const std::vector<Segment>& segments, const Bbox& box);
    // Nearest segment: returns {distance, segment index}.  Ring expansion is
    // capped at max_rings; a capped search that cannot prove optimality by
    // then returns {-1, -1} so the caller can switch to the box hierarchy
    // (rings cost O(k^2) per query, so distant points must not use them).
    std::pair<double, int> nearest(Vec2 p, const std::vector<Segment>& segments,
                                   int max_rings = 1 << 30) const;
    bool empty() const { return nx_ == 0; }
    // Whether ring expansion from p can terminate early: true iff p lies
    // within the gridded area (plus a small margin).
    bool covers(Vec2 p) const;

  private:
    double ox_ = 0, oy_ = 0, cell_ = 1;
    int nx_ = 0, ny_ = 0;
    std::vector<uint32_t> offsets_;
    std::vector<uint32_t> ids_;
};

// Bounding-volume hierarchy over the segments.  The bucket grid cannot prune
// laterally for query points outside its footprint (every ring must be
// scanned), so far-field queries go through box bounds instead, which keeps
// them logarithmic at any distance.
class SegmentBvh {
  public:
    SegmentBvh() = default;
    void build(const std::vector<Segment>& segments);
    std::pair<double, int> nearest(Vec2 p, const std::vector<Segment>& segments) const;
    // Warm-start search: `best2`/`best` seed the pruning bound (squared
    // distance and segment index of a known candidate).
    std::pair<double, int> nearest(Vec2 p, const std::vector<Segment>& segments,
                                   double best2, int best) const;
    bool empty() const { return nodes_.empty(); }

  private:
    struct Node {
        Vec2 lo, hi;
        int32_t left = -1, right = -1;  // -1 marks a leaf
        uint32_t start = 0, count = 0;  // leaf range in order_
    };
    int32_t build_range(const std::vector<Segment>& segments,
                        const std::vector<Vec2>& mids, uint32_t lo, uint32_t hi);
    std::vector<Node> nodes_;
    std::vector<uint32_t> order_;
};

enum class BoundaryKind { koch_snowflake, segment_line, custom };

// A prefractal boundary: ordered segments, the construction level, the
// nominal similarity dimension of the limit set, and whether the polyline
// closes into a polygon.  `resolution` is the smallest honest feature scale
// (segment length for Koch, 0 for exact lines): experiments that probe a
// neighbourhood K_gamma must keep resolution <= gamma/10.
struct PrefractalBoundary {
    BoundaryKind kind = BoundaryKind::custom;
    int level = 0;
    double nominal_alpha = 1.0;
    bool closed = false;
    std::vector<Segment> segments;
    double resolution = 0.0;
    Bbox bbox;
    double diameter = 0.0;
    SegmentGrid grid;
    SegmentBvh bvh;

    void finalize();  // computes bbox/diameter and builds the spatial indexes

    double distance(Vec2 p) const;
    std::pair<double, int> nearest(Vec2 p) const;
    // Warm-start variant for callers whose successive queries are spatially
    // close (path loops): `hint` is a segment index whose distance to p
    // bounds the search from above — typically the previous step's answer.
    // Negative or out-of-range hints fall back to the cold query.
    std::pair<double, int> nearest(Vec2 p, int hint) const;
    double total_length() const;
    // Point uniformly distributed (by arc length) on the polyline.
    Vec2 sample_point(RandomStream& rng) const;
};

// Koch snowflake prefractal of the given level over a unit-side equilateral
// triangle, counter-clockwise, bumps outward: 3*4^level segments of length
// 3^-level.  Levels above 14 are refused (memory).
PrefractalBoundary koch_prefractal(int level);

// Horizontal segment from (-half_width,0) to (half_width,0).
PrefractalBoundary line_boundary(double half_width);

double distance_to_boundary(const PrefractalBoundary& b, Vec2 p);

// Even-odd test for closed boundaries; points on the boundary (distance
// below 1e-12 * diameter) and all points of open boundaries report false.
bool contains_interior(const PrefractalBoundary& b, Vec2 p);

// Shell K'_n = {a^{n+1} < dist <= a^n}: outer edge closed, inner edge open.
bool shell_indicator(const PrefractalBoundary& b, Vec2 p, int n, double a);
// Index n of the shell containing distance d (requires d > 0), such that
// a^{n+1} < d <= a^n.
int shell_of(double d, double a);

struct RegularityReport {
    double alpha_hat = 0.0;
    double alpha_ci_lo = 0.0;
    double alpha_ci_hi = 0.0;
    double c1_hat = 0.0;  // sup of the probed volume ratio
    double c2_hat = 0.0;  // inf of the probed volume ratio
    double scale_lo = 0.0;
    double scale_hi = 0.0;
    int64_t sample_count = 0;
    FitResult fit;  // box-count fit (minkowski_fit only)
};

// Box-counting (Minkowski) dimension: least-squares slope of log N(eps)
// against log(1/eps) over the scales 3^-j inside [scale_lo, scale_hi].
// Requires at least 3 usable scales, all above the prefractal resolution.
RegularityReport minkowski_fit(const PrefractalBoundary& b, double scale_lo,
                               double scale_hi);

// Monte Carlo neighbourhood-volume probe: for random centers x within
// K_{r/2}, estimates |K_gamma ∩ B(x,r)| by rejection sampling and reports
// the sup/inf of the ratio against r^alpha gamma^(d-alpha) with the nominal
// alpha.  points_per_ball controls the sampling effort per (center, scale).
RegularityReport regularity_probe(const PrefractalBoundary& b, int n_centers,
                                  double scale_lo, double scale_hi,
                                  RandomStream& rng,
                                  int64_t points_per_ball = 1000000);

enum class Orientation { interior, exterior, upper_half, lower_half, complement };

// Which side of the boundary an experiment lives on, plus an optional
// target ball (used by walk-on-spheres and the crossing experiments).
struct DomainSpec {
    const PrefractalBoundary* boundary = nullptr;
    Orientation orientation = Orientation::complement;
    std::optional<Ball> target;

    bool in_domain(Vec2 p) const;
};

// CSV round trip: first line "level,alpha,closed", second line the values,
// then one "ax,ay,bx,by" row per segment (full double precision).
void save_boundary_csv(const PrefractalBoundary& b, const std::string& path);
PrefractalBoundary load_boundary_csv(const std::string& path);

// Conservative distance lower bounds on a coarse grid, used to let path
// samplers skip exact distance queries when far from the boundary.
class DistanceField {
  public:
    DistanceField() = default;
    // Covers `box` inflated by `pad` with an n x n grid.
    void build(const PrefractalBoundary& b, const Bbox& box, double pad, int n);
    // A value <= true distance (0 if unknown/near).
    double lower_bound(Vec2 p) const;
    bool empty() const { return n_ == 0; }

  private:
    double ox_ = 0, oy_ = 0, cell_ = 1, half_diag_ = 0;
    int n_ = 0;
    std::vector<float> dist_;
    Bbox kbox_;
};

}  // namespace fkmc
