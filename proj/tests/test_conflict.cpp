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
#include <functional>

#include "fracsim/conflict.hpp"
#include "fracsim/crash.hpp"
#include "fracsim/scene.hpp"

using namespace fracsim;
using Catch::Approx;

namespace {

constexpr double kDt = 0.05;

AgentTrack track_from(const std::string& id, Vec2 start, double heading, double t_end,
                      const std::function<double(double)>& speed,
                      AgentClass cls = AgentClass::PassengerVehicle, double length = 4.6,
                      double width = 1.8) {
    AgentTrack tr;
    tr.agent_id = id;
    tr.agent_class = cls;
    tr.length = length;
    tr.width = width;
    const Vec2 dir = unit_from_angle(heading);
    const auto n = static_cast<std::size_t>(std::llround(t_end / kDt));
    double s = 0;
    double v_prev = speed(0.0);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * kDt;
        const double v = std::max(0.0, speed(t));
        if (i > 0) s += 0.5 * (v_prev + v) * kDt;
        tr.samples.push_back({t, start.x + s * dir.x, start.y + s * dir.y, wrap_angle(heading),
                              v, std::nullopt});
        v_prev = v;
    }
    detail::derive_accel(tr.samples, kDefaultMaxAccel);
    return tr;
}

/// Same-lane pair: lead ahead braking at -4 m/s^2 from t = 1 s.
ConflictScene rear_end_scene() {
    ConflictScene scene;
    scene.scene_id = "rear";
    const auto lead_speed = [](double t) {
        return t < 1.0 ? 15.0 : std::max(4.0, 15.0 - 4.0 * (t - 1.0));
    };
    scene.track_a = track_from("lead", {25.0, 0.0}, 0.0, 10.0, lead_speed);
    scene.track_b = track_from("follow", {0.0, 0.0}, 0.0, 10.0, [](double) { return 15.0; });
    return scene;
}

/// Perpendicular straight paths crossing at the origin; "cross" arrives first.
ConflictScene crossing_scene(AgentClass crosser_class = AgentClass::PassengerVehicle) {
    ConflictScene scene;
    scene.scene_id = "cross";
    const bool vru = is_vru(crosser_class);
    scene.track_a = track_from("cross", {0.0, vru ? -12.0 : -38.0}, kPi / 2, 10.0,
                               [=](double) { return vru ? 3.0 : 10.0; }, crosser_class,
                               vru ? 1.8 : 4.6, vru ? 0.6 : 1.8);
    scene.track_b = track_from("through", {-40.0, 0.0}, 0.0, 10.0, [](double) { return 10.0; });
    return scene;
}

/// Adjacent-lane pair: "cutter" changes into the other lane ahead.
ConflictScene cut_in_scene(double initiator_speed = 12.0) {
    ConflictScene scene;
    scene.scene_id = "cut";
    AgentTrack cutter;
    cutter.agent_id = "cutter";
    cutter.agent_class = AgentClass::PassengerVehicle;
    cutter.length = 4.6;
    cutter.width = 1.8;
    const double t_lc = 1.0;
    const double dur = 2.0;
    const double lane = 3.5;
    const auto n = static_cast<std::size_t>(std::llround(10.0 / kDt));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * kDt;
        double y = lane;
        double vy = 0;
        if (t > t_lc && t < t_lc + dur) {
            const double u = (t - t_lc) / dur;
            const double q = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
            y = lane * (1.0 - q);
            vy = -lane * 30.0 * u * u * (1.0 - u) * (1.0 - u) / dur;
        } else if (t >= t_lc + dur) {
            y = 0;
        }
        cutter.samples.push_back({t, 18.0 + initiator_speed * t, y,
                                  wrap_angle(std::atan2(vy, initiator_speed)),
                                  std::hypot(initiator_speed, vy), std::nullopt});
    }
    detail::derive_accel(cutter.samples, kDefaultMaxAccel);
    scene.track_a = cutter;
    scene.track_b = track_from("keeper", {0.0, 0.0}, 0.0, 10.0, [](double) { return 17.0; });
    return scene;
}

ConflictScene head_on_scene() {
    ConflictScene scene;
    scene.scene_id = "headon";
    scene.track_a = track_from("east", {0.0, 0.0}, 0.0, 8.0, [](double) { return 9.0; });
    scene.track_b = track_from("west", {80.0, 0.4}, kPi, 8.0, [](double) { return 9.0; });
    return scene;
}

ConflictScene transform(const ConflictScene& scene, double rot, Vec2 shift, double dt_shift) {
    const double c = std::cos(rot);
    const double s = std::sin(rot);
    ConflictScene out = scene;
    for (AgentTrack* tr : {&out.track_a, &out.track_b}) {
        for (auto& smp : tr->samples) {
            const double x = c * smp.x - s * smp.y + shift.x;
            const double y = s * smp.x + c * smp.y + shift.y;
            smp.x = x;
            smp.y = y;
            smp.heading = wrap_angle(smp.heading + rot);
            smp.t += dt_shift;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("classifier: in-lane braking lead is a rear-end conflict") {
    const Classification cls = classify_conflict(rear_end_scene());
    REQUIRE(cls.type.has_value());
    CHECK(*cls.type == ConflictType::RearEndLeadBrake);
    CHECK(cls.provenance == Provenance::Heuristic);
}

TEST_CASE("classifier: perpendicular corridors crossing ahead") {
    const Classification cls = classify_conflict(crossing_scene());
    REQUIRE(cls.type.has_value());
    CHECK(*cls.type == ConflictType::CrossingStraight);
}

TEST_CASE("classifier: annotation overrides geometry") {
    ConflictScene scene = crossing_scene();
    scene.annotations.conflict_type = ConflictType::CutIn;
    const Classification cls = classify_conflict(scene);
    REQUIRE(cls.type.has_value());
    CHECK(*cls.type == ConflictType::CutIn);
    CHECK(cls.provenance == Provenance::Annotated);
}

TEST_CASE("classifier: VRU crossing and lane change variants") {
    SECTION("cyclist crossing") {
        const Classification cls = classify_conflict(crossing_scene(AgentClass::Cyclist));
        REQUIRE(cls.type.has_value());
        CHECK(*cls.type == ConflictType::VruCrossing);
    }
    SECTION("cut-in at speed") {
        const Classification cls = classify_conflict(cut_in_scene(12.0));
        REQUIRE(cls.type.has_value());
        CHECK(*cls.type == ConflictType::CutIn);
    }
    SECTION("pullout from near standstill") {
        // A slow merge from the shoulder: lateral closing with onset speed
        // below the pullout threshold.
        ConflictScene scene = cut_in_scene(1.0);
        const Classification cls = classify_conflict(scene);
        REQUIRE(cls.type.has_value());
        CHECK(*cls.type == ConflictType::Pullout);
    }
    SECTION("head-on") {
        const Classification cls = classify_conflict(head_on_scene());
        REQUIRE(cls.type.has_value());
        CHECK(*cls.type == ConflictType::HeadOn);
    }
    SECTION("parallel non-conflicting traffic is unclassifiable with a reason") {
        ConflictScene scene;
        scene.scene_id = "parallel";
        scene.track_a = track_from("a", {0.0, 0.0}, 0.0, 6.0, [](double) { return 10.0; });
        scene.track_b = track_from("b", {0.0, 30.0}, 0.0, 6.0, [](double) { return 10.0; });
        const Classification cls = classify_conflict(scene);
        CHECK_FALSE(cls.type.has_value());
        CHECK_FALSE(cls.reason.empty());
    }
}

TEST_CASE("classifier: turning initiator splits merge from crossing-path turns") {
    const auto turning_track = [&](double total_turn, double t_end) {
        AgentTrack tr;
        tr.agent_id = "turner";
        tr.agent_class = AgentClass::PassengerVehicle;
        tr.length = 4.6;
        tr.width = 1.8;
        const double speed = 8.0;
        double x = 0;
        double y = -20;
        double heading = kPi / 2;  // northbound, then turning
        const auto n = static_cast<std::size_t>(std::llround(t_end / kDt));
        const double turn_start = 1.5;
        const double turn_dur = 3.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) * kDt;
            tr.samples.push_back({t, x, y, wrap_angle(heading), speed, std::nullopt});
            double rate = 0;
            if (t >= turn_start && t < turn_start + turn_dur) rate = total_turn / turn_dur;
            heading += rate * kDt;
            x += speed * std::cos(heading) * kDt;
            y += speed * std::sin(heading) * kDt;
        }
        detail::derive_accel(tr.samples, kDefaultMaxAccel);
        return tr;
    };
    SECTION("right turn that ends aligned with the other lane is a merge") {
        ConflictScene scene;
        scene.scene_id = "merge";
        scene.track_a = turning_track(-kPi / 2, 8.0);  // north -> east
        scene.track_b = track_from("through", {-55.0, 0.0}, 0.0, 8.0,
                                   [](double) { return 11.0; });
        const Classification cls = classify_conflict(scene);
        REQUIRE(cls.type.has_value());
        CHECK(*cls.type == ConflictType::RightTurnMerge);
    }
    SECTION("left turn across an oncoming lane") {
        ConflictScene scene;
        scene.scene_id = "ltap";
        scene.track_a = turning_track(kPi / 2, 8.0);  // north -> west, across eastbound
        scene.track_b = track_from("oncoming", {-55.0, 6.0}, 0.0, 8.0,
                                   [](double) { return 11.0; });
        const Classification cls = classify_conflict(scene);
        REQUIRE(cls.type.has_value());
        CHECK(*cls.type == ConflictType::LeftTurnAcrossPath);
    }
}

TEST_CASE("roles: braking lead initiates, follower responds") {
    const ConflictScene scene = rear_end_scene();
    const RoleAssignment roles = assign_roles(scene, ConflictType::RearEndLeadBrake);
    CHECK(roles.initiator_id == "lead");
    CHECK(roles.responder_id == "follow");
    CHECK(roles.provenance == Provenance::Heuristic);
}

TEST_CASE("roles: the agent crossing into the other's corridor initiates") {
    const ConflictScene scene = cut_in_scene();
    const RoleAssignment roles = assign_roles(scene, ConflictType::CutIn);
    CHECK(roles.initiator_id == "cutter");
    CHECK(roles.responder_id == "keeper");
}

TEST_CASE("roles: annotations override geometry") {
    ConflictScene scene = cut_in_scene();
    scene.annotations.initiator_id = "keeper";
    scene.annotations.responder_id = "cutter";
    const RoleAssignment roles = assign_roles(scene, ConflictType::CutIn);
    CHECK(roles.initiator_id == "keeper");
    CHECK(roles.provenance == Provenance::Annotated);
}

TEST_CASE("roles: no encroachment is an explicit ambiguity error") {
    ConflictScene scene;
    scene.scene_id = "parallel";
    scene.track_a = track_from("a", {0.0, 0.0}, 0.0, 6.0, [](double) { return 10.0; });
    scene.track_b = track_from("b", {0.0, 30.0}, 0.0, 6.0, [](double) { return 10.0; });
    CHECK_THROWS_WITH(assign_roles(scene, ConflictType::CrossingStraight),
                      Catch::Matchers::ContainsSubstring("ambiguous"));
}

TEST_CASE("PoR: rear-end braking trigger fires at the sustained-decel onset") {
    // Piecewise-constant deceleration placed on the grid by construction:
    // accel steps to -2 m/s^2 at exactly t = 2.0 and is sustained.
    ConflictScene scene;
    scene.scene_id = "por_rear";
    AgentTrack lead;
    lead.agent_id = "lead";
    lead.agent_class = AgentClass::PassengerVehicle;
    lead.length = 4.6;
    lead.width = 1.8;
    double x = 30.0;
    for (int i = 0; i <= 160; ++i) {
        const double t = kDt * i;
        const double v = t < 2.0 ? 20.0 : std::max(0.0, 20.0 - 2.0 * (t - 2.0));
        lead.samples.push_back({t, x, 0.0, 0.0, v, t < 2.0 ? 0.0 : -2.0});
        x += v * kDt;
    }
    scene.track_a = lead;
    scene.track_b = track_from("follow", {0.0, 0.0}, 0.0, 8.0, [](double) { return 20.0; });
    const RoleAssignment roles{"lead", "follow", Provenance::Heuristic};
    const PorResult por = detect_por(scene, ConflictType::RearEndLeadBrake, roles);
    CHECK(por.t == Approx(2.0));
    CHECK(por.provenance == Provenance::Heuristic);
}

TEST_CASE("PoR: lateral-closing trigger for cut-ins") {
    // The cut-in helper starts its lane change at t = 1.0; the quintic ramp
    // crosses the 0.3 m/s lateral-closing threshold a moment later.
    const ConflictScene scene = cut_in_scene();
    const RoleAssignment roles{"cutter", "keeper", Provenance::Heuristic};
    const PorResult por = detect_por(scene, ConflictType::CutIn, roles);
    CHECK(por.t > 1.0);
    CHECK(por.t < 1.5);
}

TEST_CASE("PoR: corridor-entry trigger for crossings precedes first contact") {
    const ConflictScene scene = crossing_scene();
    const RoleAssignment roles{"cross", "through", Provenance::Heuristic};
    const PorResult por = detect_por(scene, ConflictType::CrossingStraight, roles);
    const auto contact = detect_collision(scene.track_a, scene.track_b);
    REQUIRE(contact.has_value());
    CHECK(por.t < contact->t);
}

TEST_CASE("PoR: annotated value wins") {
    ConflictScene scene = crossing_scene();
    scene.annotations.por_t = 3.2;
    const RoleAssignment roles{"cross", "through", Provenance::Heuristic};
    const PorResult por = detect_por(scene, ConflictType::CrossingStraight, roles);
    CHECK(por.t == 3.2);
    CHECK(por.provenance == Provenance::Annotated);
}

TEST_CASE("PoR: a trigger that never fires is an error") {
    ConflictScene scene = rear_end_scene();
    // Remove the braking: constant-speed lead never crosses the decel gate.
    scene.track_a = track_from("lead", {25.0, 0.0}, 0.0, 10.0, [](double) { return 15.0; });
    const RoleAssignment roles{"lead", "follow", Provenance::Heuristic};
    CHECK_THROWS_WITH(detect_por(scene, ConflictType::RearEndLeadBrake, roles),
                      Catch::Matchers::ContainsSubstring("no PoR found"));
}

TEST_CASE("conflict analysis is deterministic and transform-equivariant") {
    for (const ConflictScene& base :
         {rear_end_scene(), crossing_scene(), cut_in_scene(), head_on_scene()}) {
        const Classification c1 = classify_conflict(base);
        const Classification c2 = classify_conflict(base);
        REQUIRE(c1.type.has_value());
        REQUIRE(c1.type == c2.type);  // determinism
        const RoleAssignment r1 = assign_roles(base, *c1.type);
        const PorResult p1 = detect_por(base, *c1.type, r1);

        // Time shift: por shifts by exactly delta; nothing else changes.
        const double delta = 100.0;
        const ConflictScene shifted = transform(base, 0.0, {0, 0}, delta);
        const Classification cs = classify_conflict(shifted);
        REQUIRE(cs.type == c1.type);
        const RoleAssignment rs = assign_roles(shifted, *cs.type);
        CHECK(rs.initiator_id == r1.initiator_id);
        CHECK(detect_por(shifted, *cs.type, rs).t == Approx(p1.t + delta).margin(1e-9));

        // Rigid motion: everything unchanged.
        const ConflictScene moved = transform(base, 0.83, {250.0, -90.0}, 0.0);
        const Classification cm = classify_conflict(moved);
        REQUIRE(cm.type == c1.type);
        const RoleAssignment rm = assign_roles(moved, *cm.type);
        CHECK(rm.initiator_id == r1.initiator_id);
        CHECK(detect_por(moved, *cm.type, rm).t == Approx(p1.t).margin(1e-9));
    }
}

TEST_CASE("PoR precedes the ground-truth contact on colliding scenes") {
    for (const ConflictScene& scene :
         {rear_end_scene(), crossing_scene(), crossing_scene(AgentClass::Cyclist)}) {
        const auto contact = detect_collision(scene.track_a, scene.track_b);
        if (!contact) continue;
        const Classification cls = classify_conflict(scene);
        REQUIRE(cls.type.has_value());
        const RoleAssignment roles = assign_roles(scene, *cls.type);
        const PorResult por = detect_por(scene, *cls.type, roles);
        CHECK(por.t < contact->t);
    }
}
