#include "fkmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace fkmc {

double norm(Vec2 a) { return std::sqrt(norm2(a)); }

void Bbox::expand(Vec2 p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
}

double Bbox::diag() const { return norm(hi - lo); }

double point_segment_dist2(Vec2 p, const Segment& s) {
    Vec2 d = s.b - s.a;
    Vec2 w = p - s.a;
    double len2 = norm2(d);
    double t = len2 > 0 ? dot(w, d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    Vec2 q = s.a + t * d;
    return norm2(p - q);
}

// ---------------------------------------------------------------------------
// SegmentGrid

void SegmentGrid::build(const std::vector<Segment>& segments, const Bbox& box) {
    double max_len = 0;
    for (const auto& s : segments) max_len = std::max(max_len, norm(s.b - s.a));
    double diag = box.diag();
    cell_ = std::max(max_len, diag / 1024.0);
    if (cell_ <= 0) cell_ = 1.0;
    ox_ = box.lo.x - 0.5 * cell_;
    oy_ = box.lo.y - 0.5 * cell_;
    nx_ = int((box.hi.x - ox_) / cell_) + 2;
    ny_ = int((box.hi.y - oy_) / cell_) + 2;

    auto cell_of = [&](Vec2 p, int& i, int& j) {
        i = std::clamp(int(std::floor((p.x - ox_) / cell_)), 0, nx_ - 1);
        j = std::clamp(int(std::floor((p.y - oy_) / cell_)), 0, ny_ - 1);
    };

    // Two passes: count, then fill (CSR).
    offsets_.assign(size_t(nx_) * ny_ + 1, 0);
    auto for_cells = [&](const Segment& s, auto&& fn) {
        int i0, j0, i1, j1;
        cell_of(s.a, i0, j0);
        cell_of(s.b, i1, j1);
        if (i0 > i1) std::swap(i0, i1);
        if (j0 > j1) std::swap(j0, j1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) fn(i, j);
    };
    for (const auto& s : segments)
        for_cells(s, [&](int i, int j) { ++offsets_[size_t(j) * nx_ + i + 1]; });
    for (size_t c = 1; c < offsets_.size(); ++c) offsets_[c] += offsets_[c - 1];
    ids_.resize(offsets_.back());
    std::vector<uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (uint32_t id = 0; id < segments.size(); ++id)
        for_cells(segments[id], [&](int i, int j) {
            ids_[cursor[size_t(j) * nx_ + i]++] = id;
        });
}

bool SegmentGrid::covers(Vec2 p) const {
    double pad = 2.0 * cell_;
    return p.x >= ox_ - pad && p.x <= ox_ + nx_ * cell_ + pad &&
           p.y >= oy_ - pad && p.y <= oy_ + ny_ * cell_ + pad;
}

std::pair<double, int> SegmentGrid::nearest(
    Vec2 p, const std::vector<Segment>& segments, int max_rings) const {
    int ci = std::clamp(int(std::floor((p.x - ox_) / cell_)), 0, nx_ - 1);
    int cj = std::clamp(int(std::floor((p.y - oy_) / cell_)), 0, ny_ - 1);
    double best2 = std::numeric_limits<double>::infinity();
    int best_id = -1;
    int max_k = std::min(max_rings, std::max(nx_, ny_));
    bool proven = false;
    auto scan = [&](int i, int j) {
        if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return;
        size_t c = size_t(j) * nx_ + i;
        for (uint32_t t = offsets_[c]; t < offsets_[c + 1]; ++t) {
            double d2 = point_segment_dist2(p, segments[ids_[t]]);
            if (d2 < best2) {
                best2 = d2;
                best_id = int(ids_[t]);
            }
        }
    };
    for (int k = 0; k <= max_k; ++k) {
        if (best_id >= 0 && k >= 1) {
            // Inner box of ring k; if p lies inside it, no cell of ring k or
            // beyond can beat a hit closer than the box boundary.
            double bx0 = ox_ + (ci - k + 1) * cell_;
            double bx1 = ox_ + (ci + k) * cell_;
            double by0 = oy_ + (cj - k + 1) * cell_;
            double by1 = oy_ + (cj + k) * cell_;
            if (p.x >= bx0 && p.x <= bx1 && p.y >= by0 && p.y <= by1) {
                double m = std::min(std::min(p.x - bx0, bx1 - p.x),
                                    std::min(p.y - by0, by1 - p.y));
                if (m > 0 && m * m >= best2) {
                    proven = true;
                    break;
                }
            }
        }
        if (k == 0) {
            scan(ci, cj);
            continue;
        }
        for (int i = ci - k; i <= ci + k; ++i) {
            scan(i, cj - k);
            scan(i, cj + k);
        }
        for (int j = cj - k + 1; j <= cj + k - 1; ++j) {
            scan(ci - k, j);
            scan(ci + k, j);
        }
    }
    // An uncapped search that exhausted the grid is optimal by construction;
    // a capped one is only trusted when the inner-box proof fired.
    if (!proven && max_rings < std::max(nx_, ny_)) return {-1.0, -1};
    return {std::sqrt(best2), best_id};
}

// ---------------------------------------------------------------------------
// SegmentBvh

int32_t SegmentBvh::build_range(const std::vector<Segment>& segments,
                                const std::vector<Vec2>& mids, uint32_t lo,
                                uint32_t hi) {
    Node node;
    node.lo = {1e300, 1e300};
    node.hi = {-1e300, -1e300};
    for (uint32_t k = lo; k < hi; ++k) {
        const Segment& s = segments[order_[k]];
        node.lo.x = std::min({node.lo.x, s.a.x, s.b.x});
        node.lo.y = std::min({node.lo.y, s.a.y, s.b.y});
        node.hi.x = std::max({node.hi.x, s.a.x, s.b.x});
        node.hi.y = std::max({node.hi.y, s.a.y, s.b.y});
    }
    int32_t idx = int32_t(nodes_.size());
    nodes_.push_back(node);
    if (hi - lo <= 8) {
        nodes_[idx].start = lo;
        nodes_[idx].count = hi - lo;
        return idx;
    }
    int axis = (node.hi.x - node.lo.x >= node.hi.y - node.lo.y) ? 0 : 1;
    uint32_t mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid,
                     order_.begin() + hi, [&](uint32_t a, uint32_t b) {
                         return axis == 0 ? mids[a].x < mids[b].x
                                          : mids[a].y < mids[b].y;
                     });
    int32_t l = build_range(segments, mids, lo, mid);
    int32_t r = build_range(segments, mids, mid, hi);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
}

void SegmentBvh::build(const std::vector<Segment>& segments) {
    nodes_.clear();
    order_.resize(segments.size());
    for (uint32_t i = 0; i < segments.size(); ++i) order_[i] = i;
    std::vector<Vec2> mids(segments.size());
    for (size_t i = 0; i < segments.size(); ++i)
        mids[i] = 0.5 * (segments[i].a + segments[i].b);
    nodes_.reserve(2 * segments.size() / 8 + 2);
    build_range(segments, mids, 0, uint32_t(segments.size()));
}

std::pair<double, int> SegmentBvh::nearest(
    Vec2 p, const std::vector<Segment>& segments) const {
    return nearest(p, segments, std::numeric_limits<double>::infinity(), -1);
}

std::pair<double, int> SegmentBvh::nearest(
    Vec2 p, const std::vector<Segment>& segments, double best2, int best) const {
    auto box_d2 = [&](const Node& n) {
        double dx = std::max({n.lo.x - p.x, 0.0, p.x - n.hi.x});
        double dy = std::max({n.lo.y - p.y, 0.0, p.y - n.hi.y});
        return dx * dx + dy * dy;
    };
    // median splits keep the tree balanced, so depth stays well under this
    int32_t stack[96];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& n = nodes_[stack[--top]];
        if (box_d2(n) >= best2) continue;
        if (n.left < 0) {
            for (uint32_t k = n.start; k < n.start + n.count; ++k) {
                double d2 = point_segment_dist2(p, segments[order_[k]]);
                if (d2 < best2) {
                    best2 = d2;
                    best = int(order_[k]);
                }
            }
            continue;
        }
        double dl = box_d2(nodes_[n.left]), dr = box_d2(nodes_[n.right]);
        // nearer child on top of the stack so it is explored first
        if (dl <= dr) {
            if (dr < best2) stack[top++] = n.right;
            if (dl < best2) stack[top++] = n.left;
        } else {
            if (dl < best2) stack[top++] = n.left;
            if (dr < best2) stack[top++] = n.right;
        }
    }
    return {std::sqrt(best2), best};
}

// ---------------------------------------------------------------------------
// PrefractalBoundary

void PrefractalBoundary::finalize() {
    if (segments.empty())
        throw std::invalid_argument("boundary: no segments");
    bbox = Bbox{};
    for (const auto& s : segments) {
        bbox.expand(s.a);
        bbox.expand(s.b);
    }
    diameter = bbox.diag();
    if (segments.size() >= 64) {
        grid.build(segments, bbox);
        bvh.build(segments);
    }
}

std::pair<double, int> PrefractalBoundary::nearest(Vec2 p) const {
    if (!grid.empty()) {
        // Grid rings win when p is within a few cells of a segment (the hot
        // case in path loops); everything farther goes to the box hierarchy.
        if (grid.covers(p)) {
            auto hit = grid.nearest(p, segments, 6);
            if (hit.second >= 0) return hit;
        }
        return bvh.nearest(p, segments);
    }
    double best2 = std::numeric_limits<double>::infinity();
    int best = -1;
    for (size_t i = 0; i < segments.size(); ++i) {
        double d2 = point_segment_dist2(p, segments[i]);
        if (d2 < best2) {
            best2 = d2;
            best = int(i);
        }
    }
    return {std::sqrt(best2), best};
}

std::pair<double, int> PrefractalBoundary::nearest(Vec2 p, int hint) const {
    if (hint < 0 || hint >= int(segments.size())) return nearest(p);
    if (grid.empty()) return nearest(p);  // brute force is already cheap
    // A good hint makes the box pruning collapse to one root-to-leaf walk.
    double h2 = point_segment_dist2(p, segments[size_t(hint)]);
    return bvh.nearest(p, segments, h2, hint);
}

double PrefractalBoundary::distance(Vec2 p) const { return nearest(p).first; }

double PrefractalBoundary::total_length() const {
    double len = 0;
    for (const auto& s : segments) len += norm(s.b - s.a);
    return len;
}

Vec2 PrefractalBoundary::sample_point(RandomStream& rng) const {
    // All segments of a prefractal have equal length, so a uniform segment
    // pick plus a uniform position is uniform by arc length.  (Holds for
    // every boundary this library constructs.)
    size_t i = size_t(rng.uniform() * double(segments.size()));
    if (i >= segments.size()) i = segments.size() - 1;
    double t = rng.uniform();
    return segments[i].a + t * (segments[i].b - segments[i].a);
}

PrefractalBoundary koch_prefractal(int level) {
    if (level < 0 || level > 14)
        throw std::invalid_argument(
            "koch_prefractal: level must be in [0,14], got " +
            std::to_string(level));
    const double s3 = std::sqrt(3.0);
    std::vector<Vec2> v = {{0, 0}, {1, 0}, {0.5, 0.5 * s3}};
    for (int l = 0; l < level; ++l) {
        std::vector<Vec2> next;
        next.reserve(v.size() * 4);
        for (size_t i = 0; i < v.size(); ++i) {
            Vec2 a = v[i], b = v[(i + 1) % v.size()];
            Vec2 d = (1.0 / 3.0) * (b - a);
            Vec2 p1 = a + d;
            Vec2 p2 = a + 2.0 * d;
            // Rotate the middle third by -60 degrees: the polygon is
            // counter-clockwise, so this bumps outward.
            Vec2 apex = {p1.x + 0.5 * d.x + 0.5 * s3 * d.y,
                         p1.y - 0.5 * s3 * d.x + 0.5 * d.y};
            next.push_back(a);
            next.push_back(p1);
            next.push_back(apex);
            next.push_back(p2);
        }
        v = std::move(next);
    }
    PrefractalBoundary b;
    b.kind = BoundaryKind::koch_snowflake;
    b.level = level;
    b.nominal_alpha = std::log(4.0) / std::log(3.0);
    b.closed = true;
    b.resolution = std::pow(3.0, -level);
    b.segments.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i)
        b.segments.push_back({v[i], v[(i + 1) % v.size()]});
    b.finalize();
    return b;
}

PrefractalBoundary line_boundary(double half_width) {
    if (!(half_width > 0))
        throw std::invalid_argument("line_boundary: half_width must be > 0");
    PrefractalBoundary b;
    b.kind = BoundaryKind::segment_line;
    b.level = 0;
    b.nominal_alpha = 1.0;
    b.closed = false;
    b.resolution = 0.0;
    b.segments.push_back({{-half_width, 0}, {half_width, 0}});
    b.finalize();
    return b;
}

double distance_to_boundary(const PrefractalBoundary& b, Vec2 p) {
    return b.distance(p);
}

bool contains_interior(const PrefractalBoundary& b, Vec2 p) {
    if (!b.closed) return false;
    if (p.x < b.bbox.lo.x || p.x > b.bbox.hi.x || p.y < b.bbox.lo.y ||
        p.y > b.bbox.hi.y)
        return false;
    if (b.distance(p) < 1e-12 * std::max(b.diameter, 1.0)) return false;
    bool inside = false;
    for (const auto& s : b.segments) {
        if ((s.a.y > p.y) != (s.b.y > p.y)) {
            double xint =
                s.a.x + (p.y - s.a.y) * (s.b.x - s.a.x) / (s.b.y - s.a.y);
            if (xint > p.x) inside = !inside;
        }
    }
    return inside;
}

int shell_of(double d, double a) {
    if (!(d > 0)) throw std::invalid_argument("shell_of: need distance > 0");
    if (!(a > 0 && a < 1)) throw std::invalid_argument("shell_of: a in (0,1)");
    int n = int(std::floor(std::log(d) / std::log(a)));
    // Settle floating point fuzz so that a^{n+1} < d <= a^n exactly.
    while (d <= std::pow(a, n + 1)) ++n;
    while (d > std::pow(a, n)) --n;
    return n;
}

bool shell_indicator(const PrefractalBoundary& b, Vec2 p, int n, double a) {
    if (!(a > 0 && a < 1))
        throw std::invalid_argument("shell_indicator: a in (0,1)");
    double d = b.distance(p);
    if (!(d > 0)) return false;
    return d > std::pow(a, n + 1) && d <= std::pow(a, n);
}

// ---------------------------------------------------------------------------
// Box counting

namespace {

// Cells of a uniform eps-grid crossed by segment s, inserted into `out`.
// The anchor is shifted by an irrational-ish sub-cell offset so segments of
// the snowflake never run exactly along grid lines.
void raster_segment(const Segment& s, double eps, double ax, double ay,
                    std::unordered_set<uint64_t>& out) {
    auto key = [](int i, int j) {
        return (uint64_t(uint32_t(i)) << 32) | uint64_t(uint32_t(j));
    };
    int i = int(std::floor((s.a.x - ax) / eps));
    int j = int(std::floor((s.a.y - ay) / eps));
    int ei = int(std::floor((s.b.x - ax) / eps));
    int ej = int(std::floor((s.b.y - ay) / eps));
    out.insert(key(i, j));
    double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    int stepi = dx > 0 ? 1 : -1, stepj = dy > 0 ? 1 : -1;
    double tmax_x, tmax_y, tdx, tdy;
    if (dx != 0) {
        double next = ax + (i + (stepi > 0 ? 1 : 0)) * eps;
        tmax_x = (next - s.a.x) / dx;
        tdx = eps / std::abs(dx);
    } else {
        tmax_x = std::numeric_limits<double>::infinity();
        tdx = 0;
    }
    if (dy != 0) {
        double next = ay + (j + (stepj > 0 ? 1 : 0)) * eps;
        tmax_y = (next - s.a.y) / dy;
        tdy = eps / std::abs(dy);
    } else {
        tmax_y = std::numeric_limits<double>::infinity();
        tdy = 0;
    }
    int guard = std::abs(ei - i) + std::abs(ej - j) + 4;
    while ((i != ei || j != ej) && guard-- > 0) {
        if (tmax_x < tmax_y) {
            i += stepi;
            tmax_x += tdx;
        } else {
            j += stepj;
            tmax_y += tdy;
        }
        out.insert(key(i, j));
    }
}

}  // namespace

RegularityReport minkowski_fit(const PrefractalBoundary& b, double scale_lo,
                               double scale_hi) {
    if (!(scale_lo > 0 && scale_lo < scale_hi))
        throw std::invalid_argument("minkowski_fit: need 0 < scale_lo < scale_hi");
    if (scale_lo <= b.resolution)
        throw std::invalid_argument(
            "minkowski_fit: scale_lo " + std::to_string(scale_lo) +
            " does not resolve the prefractal; need > " +
            std::to_string(b.resolution) + " (raise the level)");
    if (scale_hi >= b.diameter)
        throw std::invalid_argument(
            "minkowski_fit: scale_hi must stay below the diameter " +
            std::to_string(b.diameter));
    int j_lo = int(std::ceil(std::log(1.0 / scale_hi) / std::log(3.0) - 1e-9));
    int j_hi = int(std::floor(std::log(1.0 / scale_lo) / std::log(3.0) + 1e-9));
    std::vector<double> scales;
    for (int j = j_lo; j <= j_hi; ++j) scales.push_back(std::pow(3.0, -j));
    if (scales.size() < 3)
        throw std::invalid_argument(
            "minkowski_fit: only " + std::to_string(scales.size()) +
            " usable scales 3^-j in range; need at least 3");
    std::vector<FitPoint> pts;
    int64_t total = 0;
    for (double eps : scales) {
        double ax = b.bbox.lo.x - eps * 0.3515625891;
        double ay = b.bbox.lo.y - eps * 0.2734371097;
        std::unordered_set<uint64_t> cells;
        cells.reserve(size_t(4 * b.total_length() / eps) + 16);
        for (const auto& s : b.segments) raster_segment(s, eps, ax, ay, cells);
        total += int64_t(cells.size());
        pts.push_back({std::log(1.0 / eps), std::log(double(cells.size())), 1.0});
    }
    RegularityReport rep;
    rep.fit = weighted_linear_fit(pts);
    rep.alpha_hat = rep.fit.slope;
    rep.alpha_ci_lo = rep.fit.slope_ci95_lo;
    rep.alpha_ci_hi = rep.fit.slope_ci95_hi;
    rep.scale_lo = scale_lo;
    rep.scale_hi = scale_hi;
    rep.sample_count = total;
    return rep;
}

RegularityReport regularity_probe(const PrefractalBoundary& b, int n_centers,
                                  double scale_lo, double scale_hi,
                                  RandomStream& rng, int64_t points_per_ball) {
    if (n_centers < 1)
        throw std::invalid_argument("regularity_probe: n_centers >= 1");
    if (!(scale_lo > 0 && 3.0 * scale_lo <= scale_hi))
        throw std::invalid_argument(
            "regularity_probe: need scale_lo > 0 and scale_hi >= 3*scale_lo");
    if (b.resolution > scale_lo / 10.0)
        throw std::invalid_argument(
            "regularity_probe: prefractal resolution " +
            std::to_string(b.resolution) + " too coarse for gamma = " +
            std::to_string(scale_lo) + "; need resolution <= gamma/10");
    if (points_per_ball < 1000)
        throw std::invalid_argument("regularity_probe: points_per_ball >= 1000");
    const double alpha = b.nominal_alpha;
    const double pi = 3.14159265358979323846;
    double c1 = -std::numeric_limits<double>::infinity();
    double c2 = std::numeric_limits<double>::infinity();
    int64_t total = 0;
    std::vector<double> radii = {scale_hi, scale_hi / 3.0};
    for (int ic = 0; ic < n_centers; ++ic) {
        Vec2 base = b.sample_point(rng);
        for (double r : radii) {
            if (r < 3.0 * scale_lo) continue;
            Vec2 c = base;
            if (ic % 2 == 1) {
                // Off-curve centers, still within K_{r/2}.
                double ang = 2.0 * pi * rng.uniform();
                double rad = 0.5 * r * std::sqrt(rng.uniform());
                c = base + Vec2{rad * std::cos(ang), rad * std::sin(ang)};
            }
            for (double gamma = r; gamma >= scale_lo; gamma /= 3.0) {
                int64_t hits = 0;
                for (int64_t k = 0; k < points_per_ball; ++k) {
                    double ang = 2.0 * pi * rng.uniform();
                    double rad = r * std::sqrt(rng.uniform());
                    Vec2 q = c + Vec2{rad * std::cos(ang), rad * std::sin(ang)};
                    if (b.distance(q) <= gamma) ++hits;
                }
                total += points_per_ball;
                double area = double(hits) / double(points_per_ball) * pi * r * r;
                double ratio =
                    area / (std::pow(r, alpha) * std::pow(gamma, 2.0 - alpha));
                c1 = std::max(c1, ratio);
                c2 = std::min(c2, ratio);
            }
        }
    }
    RegularityReport rep;
    rep.alpha_hat = alpha;
    rep.alpha_ci_lo = alpha;
    rep.alpha_ci_hi = alpha;
    rep.c1_hat = c1;
    rep.c2_hat = c2;
    rep.scale_lo = scale_lo;
    rep.scale_hi = scale_hi;
    rep.sample_count = total;
    return rep;
}

// ---------------------------------------------------------------------------
// DomainSpec

bool DomainSpec::in_domain(Vec2 p) const {
    if (!boundary) throw std::logic_error("DomainSpec: no boundary");
    switch (orientation) {
        case Orientation::interior:
            return contains_interior(*boundary, p);
        case Orientation::exterior:
            return !contains_interior(*boundary, p) && boundary->distance(p) > 0;
        case Orientation::upper_half:
        case Orientation::lower_half: {
            const Segment& s = boundary->segments.front();
            double side = cross(s.b - s.a, p - s.a);
            return orientation == Orientation::upper_half ? side > 0 : side < 0;
        }
        case Orientation::complement:
            return boundary->distance(p) > 0;
    }
    return false;
}

// ---------------------------------------------------------------------------
// CSV round trip

void save_boundary_csv(const PrefractalBoundary& b, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_boundary_csv: cannot open " + path);
    std::fprintf(f, "level,alpha,closed\n%d,%.17g,%d\n", b.level,
                 b.nominal_alpha, b.closed ? 1 : 0);
    for (const auto& s : b.segments)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", s.a.x, s.a.y, s.b.x, s.b.y);
    std::fclose(f);
}

PrefractalBoundary load_boundary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_boundary_csv: cannot open " + path);
    std::string header, meta;
    if (!std::getline(in, header) || header != "level,alpha,closed")
        throw std::runtime_error("load_boundary_csv: bad header in " + path);
    if (!std::getline(in, meta))
        throw std::runtime_error("load_boundary_csv: missing metadata row");
    PrefractalBoundary b;
    int closed_flag = 0;
    if (std::sscanf(meta.c_str(), "%d,%lf,%d", &b.level, &b.nominal_alpha,
                    &closed_flag) != 3)
        throw std::runtime_error("load_boundary_csv: bad metadata row");
    b.closed = closed_flag != 0;
    b.kind = BoundaryKind::custom;
    std::string row;
    while (std::getline(in, row)) {
        if (row.empty()) continue;
        Segment s;
        if (std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf", &s.a.x, &s.a.y, &s.b.x,
                        &s.b.y) != 4)
            throw std::runtime_error("load_boundary_csv: bad segment row: " + row);
        b.segments.push_back(s);
    }
    double min_len = std::numeric_limits<double>::infinity();
    for (const auto& s : b.segments) min_len = std::min(min_len, norm(s.b - s.a));
    b.resolution = b.level > 0 ? min_len : 0.0;
    b.finalize();
    return b;
}

// ---------------------------------------------------------------------------
// DistanceField

void DistanceField::build(const PrefractalBoundary& b, const Bbox& box,
                          double pad, int n) {
    n_ = n;
    ox_ = box.lo.x - pad;
    oy_ = box.lo.y - pad;
    double w = std::max(box.hi.x - box.lo.x, box.hi.y - box.lo.y) + 2 * pad;
    cell_ = w / n;
    half_diag_ = 0.5 * cell_ * std::sqrt(2.0);
    kbox_ = b.bbox;
    dist_.resize(size_t(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            Vec2 c{ox_ + (i + 0.5) * cell_, oy_ + (j + 0.5) * cell_};
            dist_[size_t(j) * n + i] = float(b.distance(c));
        }
}

double DistanceField::lower_bound(Vec2 p) const {
    int i = int(std::floor((p.x - ox_) / cell_));
    int j = int(std::floor((p.y - oy_) / cell_));
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
        // Outside the field: the boundary sits inside its bounding box.
        double dx = std::max({kbox_.lo.x - p.x, 0.0, p.x - kbox_.hi.x});
        double dy = std::max({kbox_.lo.y - p.y, 0.0, p.y - kbox_.hi.y});
        return std::sqrt(dx * dx + dy * dy);
    }
    return std::max(0.0, double(dist_[size_t(j) * n_ + i]) - half_diag_);
}

}  // namespace fkmc
