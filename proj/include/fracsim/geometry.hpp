// Copyright 2026 The Fracsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Planar geometry kit: vectors, angles, oriented boxes (separating-axis
// tests with penetration/normal/overlap-polygon), polylines parameterized
// by arc length, and corridor regions built from box lists.

#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace fracsim {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
    double x{0};
    double y{0};

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    [[nodiscard]] double norm() const { return std::hypot(x, y); }
    [[nodiscard]] double squared_norm() const { return x * x + y * y; }
    /// Counter-clockwise quarter turn.
    [[nodiscard]] Vec2 perp() const { return {-y, x}; }
};

[[nodiscard]] inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
[[nodiscard]] inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
[[nodiscard]] inline Vec2 unit_from_angle(double rad) { return {std::cos(rad), std::sin(rad)}; }

/// Normalize an angle to (-pi, pi].
[[nodiscard]] inline double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * kPi);  // in [-pi, pi]
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

/// Signed shortest-arc difference a - b, in (-pi, pi].
[[nodiscard]] inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// Shortest-arc interpolation between two angles; u in [0, 1].
[[nodiscard]] inline double lerp_angle(double a, double b, double u) {
    return wrap_angle(a + u * angle_diff(b, a));
}

// ── Oriented box ────────────────────────────────────────────────────────────

/// Rectangle with center, heading of the long axis, and half extents.
struct OrientedBox {
    Vec2 center;
    double heading{0};
    double half_length{0};
    double half_width{0};

    [[nodiscard]] Vec2 axis_long() const { return unit_from_angle(heading); }
    [[nodiscard]] Vec2 axis_lat() const { return unit_from_angle(heading).perp(); }

    [[nodiscard]] std::array<Vec2, 4> corners() const {
        const Vec2 u = half_length * axis_long();
        const Vec2 w = half_width * axis_lat();
        return {center + u + w, center - u + w, center - u - w, center + u - w};
    }

    /// Radius of the circumscribed circle; cheap broad-phase reject.
    [[nodiscard]] double bounding_radius() const {
        return std::hypot(half_length, half_width);
    }

    [[nodiscard]] bool contains(Vec2 p) const {
        const Vec2 d = p - center;
        return std::abs(dot(d, axis_long())) <= half_length &&
               std::abs(dot(d, axis_lat())) <= half_width;
    }
};

struct Penetration {
    double depth{0};  // overlap along the least-overlapping axis
    Vec2 normal;      // unit, oriented from box a toward box b
};

namespace detail {

inline double projected_radius(const OrientedBox& b, Vec2 axis) {
    return b.half_length * std::abs(dot(b.axis_long(), axis)) +
           b.half_width * std::abs(dot(b.axis_lat(), axis));
}

}  // namespace detail

/// Separating-axis test. Returns the minimum-penetration axis when the
/// boxes overlap, nullopt when any axis separates them.
[[nodiscard]] inline std::optional<Penetration> obb_penetration(const OrientedBox& a,
                                                                const OrientedBox& b) {
    const Vec2 d = b.center - a.center;
    const std::array<Vec2, 4> axes = {a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()};
    Penetration best{std::numeric_limits<double>::infinity(), {1, 0}};
    for (const Vec2& axis : axes) {
        const double gap = std::abs(dot(d, axis));
        const double depth = detail::projected_radius(a, axis) +
                             detail::projected_radius(b, axis) - gap;
        if (depth < 0) return std::nullopt;
        if (depth < best.depth) {
            const double sign = dot(d, axis) >= 0 ? 1.0 : -1.0;
            best = Penetration{depth, sign * axis};
        }
    }
    return best;
}

[[nodiscard]] inline bool obb_overlap(const OrientedBox& a, const OrientedBox& b) {
    const double r = a.bounding_radius() + b.bounding_radius();
    if ((b.center - a.center).squared_norm() > r * r) return false;
    return obb_penetration(a, b).has_value();
}

/// Intersection polygon of two boxes (Sutherland–Hodgman clip of a by b).
[[nodiscard]] inline std::vector<Vec2> obb_overlap_polygon(const OrientedBox& a,
                                                           const OrientedBox& b) {
    const auto ac = a.corners();
    std::vector<Vec2> poly(ac.begin(), ac.end());
    const auto bc = b.corners();
    for (int e = 0; e < 4 && !poly.empty(); ++e) {
        const Vec2 p0 = bc[static_cast<std::size_t>(e)];
        const Vec2 p1 = bc[static_cast<std::size_t>((e + 1) % 4)];
        const Vec2 edge = p1 - p0;
        std::vector<Vec2> out;
        out.reserve(poly.size() + 2);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Vec2 cur = poly[i];
            const Vec2 nxt = poly[(i + 1) % poly.size()];
            const double side_cur = cross(edge, cur - p0);
            const double side_nxt = cross(edge, nxt - p0);
            const bool in_cur = side_cur >= 0;  // interior is left of CCW edges
            const bool in_nxt = side_nxt >= 0;
            if (in_cur) out.push_back(cur);
            if (in_cur != in_nxt) {
                const double t = side_cur / (side_cur - side_nxt);
                out.push_back(cur + t * (nxt - cur));
            }
        }
        poly = std::move(out);
    }
    return poly;
}

/// Area centroid; falls back to the vertex mean for degenerate slivers.
[[nodiscard]] inline Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
    if (poly.empty()) return {};
    double area2 = 0;
    Vec2 acc{};
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 p = poly[i];
        const Vec2 q = poly[(i + 1) % poly.size()];
        const double c = cross(p, q);
        area2 += c;
        acc += c * (p + q);
    }
    if (std::abs(area2) < 1e-12) {
        Vec2 mean{};
        for (const Vec2& p : poly) mean += p;
        return (1.0 / static_cast<double>(poly.size())) * mean;
    }
    return (1.0 / (3.0 * area2)) * acc;
}

// ── Segments ────────────────────────────────────────────────────────────────

[[nodiscard]] inline bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
    const Vec2 r = p1 - p0;
    const Vec2 s = q1 - q0;
    const double denom = cross(r, s);
    const Vec2 pq = q0 - p0;
    if (std::abs(denom) < 1e-15) {
        // Parallel: overlapping-collinear counts as intersecting.
        if (std::abs(cross(pq, r)) > 1e-12) return false;
        const double rr = dot(r, r);
        if (rr < 1e-18) return (q0 - p0).norm() < 1e-9;
        const double t0 = dot(pq, r) / rr;
        const double t1 = dot(q1 - p0, r) / rr;
        return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
    }
    const double t = cross(pq, s) / denom;
    const double u = cross(pq, r) / denom;
    return t >= 0 && t <= 1 && u >= 0 && u <= 1;
}

// ── Polyline by arc length ──────────────────────────────────────────────────

/// Piecewise-linear path with cumulative arc length. Queries beyond the end
/// extrapolate along the final tangent; queries before 0 clamp to the start.
class PathPolyline {
  public:
    PathPolyline() = default;

    /// `headings` supplies the tangent for zero-length segments (stopped
    /// vehicles); must match `points` in size when given.
    PathPolyline(std::vector<Vec2> points, std::vector<double> headings)
        : pts_(std::move(points)), headings_(std::move(headings)) {
        assert(pts_.size() >= 1);
        assert(headings_.empty() || headings_.size() == pts_.size());
        cum_.resize(pts_.size(), 0.0);
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
        }
    }

    [[nodiscard]] double total_length() const { return cum_.empty() ? 0.0 : cum_.back(); }
    [[nodiscard]] const std::vector<Vec2>& points() const { return pts_; }

    [[nodiscard]] Vec2 point_at(double s) const {
        if (pts_.size() == 1) return pts_.front();
        if (s <= 0) return pts_.front();
        if (s >= total_length()) {
            return pts_.back() + (s - total_length()) * tangent_at_end();
        }
        const std::size_t i = segment_index(s);
        const double seg = cum_[i + 1] - cum_[i];
        const double u = seg > 0 ? (s - cum_[i]) / seg : 0.0;
        return pts_[i] + u * (pts_[i + 1] - pts_[i]);
    }

    [[nodiscard]] double heading_at(double s) const {
        if (pts_.size() == 1) return fallback_heading(0);
        if (s >= total_length()) return end_heading();
        const std::size_t i = segment_index(std::max(s, 0.0));
        return segment_heading(i);
    }

  private:
    [[nodiscard]] std::size_t segment_index(double s) const {
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
        std::size_t i = static_cast<std::size_t>(std::distance(cum_.begin(), it));
        i = i == 0 ? 0 : i - 1;
        return std::min(i, pts_.size() - 2);
    }

    [[nodiscard]] double segment_heading(std::size_t i) const {
        // Walk outward past zero-length segments.
        for (std::size_t k = i; k + 1 < pts_.size(); ++k) {
            const Vec2 d = pts_[k + 1] - pts_[k];
            if (d.squared_norm() > 1e-18) return std::atan2(d.y, d.x);
        }
        for (std::size_t k = i + 1; k-- > 0;) {
            const Vec2 d = pts_[k + 1] - pts_[k];
            if (d.squared_norm() > 1e-18) return std::atan2(d.y, d.x);
        }
        return fallback_heading(i);
    }

    [[nodiscard]] double end_heading() const {
        if (pts_.size() < 2) return fallback_heading(pts_.size() - 1);
        return segment_heading(pts_.size() - 2);
    }

    [[nodiscard]] Vec2 tangent_at_end() const { return unit_from_angle(end_heading()); }

    [[nodiscard]] double fallback_heading(std::size_t i) const {
        return headings_.empty() ? 0.0 : headings_[std::min(i, headings_.size() - 1)];
    }

    std::vector<Vec2> pts_;
    std::vector<double> headings_;
    std::vector<double> cum_;
};

[[nodiscard]] inline bool polylines_intersect(const PathPolyline& a, const PathPolyline& b) {
    const auto& pa = a.points();
    const auto& pb = b.points();
    for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
        for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
            if (segments_intersect(pa[i], pa[i + 1], pb[j], pb[j + 1])) return true;
        }
    }
    return false;
}

// ── Corridor ────────────────────────────────────────────────────────────────

/// Union of oriented boxes approximating the region swept by a footprint.
struct Corridor {
    std::vector<OrientedBox> boxes;

    [[nodiscard]] bool contains(Vec2 p) const {
        for (const auto& b : boxes) {
            if (b.contains(p)) return true;
        }
        return false;
    }

    [[nodiscard]] bool intersects(const OrientedBox& other) const {
        for (const auto& b : boxes) {
            if (obb_overlap(b, other)) return true;
        }
        return false;
    }
};

}  // namespace fracsim
