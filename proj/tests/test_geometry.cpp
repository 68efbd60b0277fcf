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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fracsim/geometry.hpp"

using namespace fracsim;
using Catch::Approx;

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(kPi) == Approx(kPi));
    CHECK(wrap_angle(-kPi) == Approx(kPi));  // -pi maps to +pi
    CHECK(wrap_angle(3 * kPi) == Approx(kPi));
    CHECK(wrap_angle(2 * kPi + 0.25) == Approx(0.25));
    CHECK(wrap_angle(-2 * kPi - 0.25) == Approx(-0.25));
}

TEST_CASE("lerp_angle takes the shortest arc through the pi seam") {
    // {3.1, -3.1}: midpoint wraps through pi, not through 0.
    const double mid = lerp_angle(3.1, -3.1, 0.5);
    CHECK(std::abs(mid) == Approx(kPi).margin(1e-12));
    CHECK(lerp_angle(0.1, 0.3, 0.5) == Approx(0.2));
}

TEST_CASE("obb overlap and penetration") {
    const OrientedBox a{{0, 0}, 0.0, 2.0, 1.0};
    SECTION("separated boxes") {
        const OrientedBox b{{10, 0}, 0.0, 2.0, 1.0};
        CHECK_FALSE(obb_overlap(a, b));
        CHECK_FALSE(obb_penetration(a, b).has_value());
    }
    SECTION("touching head-to-head") {
        const OrientedBox b{{3.9, 0}, 0.0, 2.0, 1.0};
        const auto pen = obb_penetration(a, b);
        REQUIRE(pen.has_value());
        CHECK(pen->depth == Approx(0.1));
        CHECK(pen->normal.x == Approx(1.0));
        CHECK(pen->normal.y == Approx(0.0).margin(1e-12));
    }
    SECTION("rotated crossing pair overlaps") {
        const OrientedBox b{{0, 0}, kPi / 2, 2.0, 1.0};
        CHECK(obb_overlap(a, b));
        const auto poly = obb_overlap_polygon(a, b);
        REQUIRE(poly.size() >= 4);
        const Vec2 c = polygon_centroid(poly);
        CHECK(c.x == Approx(0.0).margin(1e-12));
        CHECK(c.y == Approx(0.0).margin(1e-12));
    }
    SECTION("rotation leaves the overlap decision unchanged") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-4, 4);
        std::uniform_real_distribution<double> ang(-kPi, kPi);
        for (int k = 0; k < 200; ++k) {
            const OrientedBox p{{u(rng), u(rng)}, ang(rng), 2.0, 0.9};
            const OrientedBox q{{u(rng), u(rng)}, ang(rng), 1.5, 0.8};
            const double rot = ang(rng);
            const auto rotate = [&](const OrientedBox& b) {
                const double c = std::cos(rot);
                const double s = std::sin(rot);
                return OrientedBox{{c * b.center.x - s * b.center.y,
                                    s * b.center.x + c * b.center.y},
                                   wrap_angle(b.heading + rot), b.half_length, b.half_width};
            };
            CHECK(obb_overlap(p, q) == obb_overlap(rotate(p), rotate(q)));
        }
    }
}

TEST_CASE("polyline arc-length queries") {
    PathPolyline path({{0, 0}, {10, 0}, {10, 5}}, {0.0, 0.0, kPi / 2});
    CHECK(path.total_length() == Approx(15.0));
    CHECK(path.point_at(5.0).x == Approx(5.0));
    CHECK(path.point_at(5.0).y == Approx(0.0));
    CHECK(path.point_at(12.0).x == Approx(10.0));
    CHECK(path.point_at(12.0).y == Approx(2.0));
    CHECK(path.heading_at(2.0) == Approx(0.0));
    CHECK(path.heading_at(12.0) == Approx(kPi / 2));
    SECTION("beyond the end extends along the final tangent") {
        CHECK(path.point_at(20.0).x == Approx(10.0));
        CHECK(path.point_at(20.0).y == Approx(10.0));
        CHECK(path.heading_at(20.0) == Approx(kPi / 2));
    }
    SECTION("before the start clamps") {
        CHECK(path.point_at(-3.0).x == Approx(0.0));
        CHECK(path.point_at(-3.0).y == Approx(0.0));
    }
}

TEST_CASE("segment intersection") {
    CHECK(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
    CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    CHECK(segments_intersect({0, 0}, {2, 0}, {1, 0}, {3, 0}));  // collinear overlap
}
