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
#include <fstream>
#include <numeric>
#include <sstream>

#include "fracsim/behavior.hpp"
#include "fracsim/scene.hpp"

using namespace fracsim;
using Catch::Approx;

namespace {

AgentTrack straight_const(double speed, double t_end, double dt, double heading = 0.0) {
    AgentTrack tr;
    tr.agent_id = "r";
    tr.agent_class = AgentClass::PassengerVehicle;
    tr.length = 4.6;
    tr.width = 1.8;
    const Vec2 dir = unit_from_angle(heading);
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * dt;
        tr.samples.push_back({t, speed * t * dir.x, speed * t * dir.y, wrap_angle(heading),
                              speed, 0.0});
    }
    return tr;
}

/// Independent closed-form travel distance of the two-phase profile
/// (jerk ramp from zero accel, then constant a_ss) from speed v0 to rest.
double two_phase_stop_distance(double v0, double jerk, double a_ss) {
    const double tau1 = a_ss / jerk;
    const double v1 = v0 + 0.5 * jerk * tau1 * tau1;
    if (v1 <= 0) {
        const double t_stop = std::sqrt(-2.0 * v0 / jerk);
        return v0 * t_stop + jerk * t_stop * t_stop * t_stop / 6.0;
    }
    const double s1 = v0 * tau1 + jerk * tau1 * tau1 * tau1 / 6.0;
    return s1 + v1 * v1 / (-2.0 * a_ss);
}

BehaviorModel single_cell_model(double hrt, double jerk, double a_ss, double p_nonreact = 0.0) {
    BehaviorModel m;
    m.default_entry.hrt_values = {hrt};
    m.default_entry.hrt_weights = {1.0};
    m.default_entry.jerk_values = {jerk};
    m.default_entry.jerk_weights = {1.0};
    m.default_entry.a_ss_values = {a_ss};
    m.default_entry.a_ss_weights = {1.0};
    m.default_entry.p_nonreact = p_nonreact;
    return m;
}

}  // namespace

TEST_CASE("behavior model config loading") {
    SECTION("single-cell config") {
        const std::string doc = R"({
          "default": {"hrt_values_s": [1.0], "hrt_weights": [1.0],
                      "jerk_mps3": [-10.0], "jerk_weights": [1.0],
                      "a_ss_mps2": [-5.0], "a_ss_weights": [1.0], "p_nonreact": 0.0}
        })";
        std::istringstream in(doc);
        const BehaviorModel model = load_behavior_model(in);
        const auto cells = enumerate_cells(model, ConflictType::CutIn,
                                           AgentClass::PassengerVehicle);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].weight == 1.0);
        CHECK(cells[0].params->hrt == 1.0);
    }
    SECTION("weights summing to 0.9 are rejected") {
        const std::string doc = R"({
          "default": {"hrt_values_s": [0.5, 1.0], "hrt_weights": [0.5, 0.4],
                      "jerk_mps3": [-10.0], "jerk_weights": [1.0],
                      "a_ss_mps2": [-5.0], "a_ss_weights": [1.0]}
        })";
        std::istringstream in(doc);
        CHECK_THROWS_WITH(load_behavior_model(in),
                          Catch::Matchers::ContainsSubstring("marginal not normalized"));
    }
    SECTION("negative weight is rejected") {
        const std::string doc = R"({
          "default": {"hrt_values_s": [0.5, 1.0], "hrt_weights": [1.2, -0.2],
                      "jerk_mps3": [-10.0], "jerk_weights": [1.0],
                      "a_ss_mps2": [-5.0], "a_ss_weights": [1.0]}
        })";
        std::istringstream in(doc);
        CHECK_THROWS_WITH(load_behavior_model(in),
                          Catch::Matchers::ContainsSubstring("negative weight"));
    }
    SECTION("hrt bin edges must increase") {
        const std::string doc = R"({
          "default": {"hrt_bin_edges_s": [0.0, 0.5, 0.5], "hrt_weights": [0.5, 0.5],
                      "jerk_mps3": [-10.0], "jerk_weights": [1.0],
                      "a_ss_mps2": [-5.0], "a_ss_weights": [1.0]}
        })";
        std::istringstream in(doc);
        CHECK_THROWS_WITH(load_behavior_model(in),
                          Catch::Matchers::ContainsSubstring("hrt bin edges not increasing"));
    }
    SECTION("bin edges become point masses at bin centers") {
        const std::string doc = R"({
          "default": {"hrt_bin_edges_s": [0.0, 0.4, 1.0], "hrt_weights": [0.25, 0.75],
                      "jerk_mps3": [-10.0], "jerk_weights": [1.0],
                      "a_ss_mps2": [-5.0], "a_ss_weights": [1.0]}
        })";
        std::istringstream in(doc);
        const BehaviorModel model = load_behavior_model(in);
        CHECK(model.default_entry.hrt_values[0] == Approx(0.2));
        CHECK(model.default_entry.hrt_values[1] == Approx(0.7));
    }
    SECTION("missing default entry is rejected") {
        std::istringstream in(std::string("{}"));
        CHECK_THROWS_WITH(load_behavior_model(in),
                          Catch::Matchers::ContainsSubstring("default"));
    }
    SECTION("p_nonreact mixes with one reactive cell") {
        const std::string doc = R"({
          "default": {"hrt_values_s": [1.0], "hrt_weights": [1.0],
                      "jerk_mps3": [-10.0], "jerk_weights": [1.0],
                      "a_ss_mps2": [-5.0], "a_ss_weights": [1.0], "p_nonreact": 0.1}
        })";
        std::istringstream in(doc);
        const BehaviorModel model = load_behavior_model(in);
        const auto cells = enumerate_cells(model, ConflictType::CutIn,
                                           AgentClass::PassengerVehicle);
        REQUIRE(cells.size() == 2);
        CHECK(cells[0].weight == Approx(0.9));
        CHECK(cells[1].weight == Approx(0.1));
        CHECK(cells[1].nonreactive());
    }
}

TEST_CASE("enumerate_cells expands the lattice deterministically") {
    BehaviorModel model;
    model.default_entry.hrt_values = {0.5, 1.0, 1.5};
    model.default_entry.hrt_weights = {0.2, 0.5, 0.3};
    model.default_entry.jerk_values = {-12.0, -6.0};
    model.default_entry.jerk_weights = {0.6, 0.4};
    model.default_entry.a_ss_values = {-6.0, -4.0};
    model.default_entry.a_ss_weights = {0.7, 0.3};

    SECTION("3 x 2 x 2 product with weights summing to 1") {
        const auto cells = enumerate_cells(model, ConflictType::RearEndLeadBrake,
                                           AgentClass::PassengerVehicle);
        REQUIRE(cells.size() == 12);
        double sum = 0;
        for (const auto& c : cells) sum += c.weight;
        CHECK(sum == Approx(1.0).margin(1e-12));
        // hrt-major, then jerk, then a_ss.
        CHECK(cells[0].params->hrt == 0.5);
        CHECK(cells[0].params->jerk == -12.0);
        CHECK(cells[0].params->a_ss == -6.0);
        CHECK(cells[1].params->a_ss == -4.0);
        CHECK(cells[2].params->jerk == -6.0);
        CHECK(cells[4].params->hrt == 1.0);
        CHECK(cells[0].weight == Approx(0.2 * 0.6 * 0.7));
    }
    SECTION("nonreact atom scales the reactive mass") {
        model.default_entry.p_nonreact = 0.05;
        const auto cells = enumerate_cells(model, ConflictType::RearEndLeadBrake,
                                           AgentClass::PassengerVehicle);
        REQUIRE(cells.size() == 13);
        double sum = 0;
        for (const auto& c : cells) sum += c.weight;
        CHECK(sum == Approx(1.0).margin(1e-12));
        CHECK(cells.back().nonreactive());
        CHECK(cells.back().weight == Approx(0.05));
        CHECK(cells[0].weight == Approx(0.95 * 0.2 * 0.6 * 0.7));
    }
    SECTION("truck capability cap of -6.5 keeps both a_ss values") {
        const auto cells =
            enumerate_cells(model, ConflictType::RearEndLeadBrake, AgentClass::Truck);
        REQUIRE(cells.size() == 12);
    }
    SECTION("cap that removes every a_ss value is an error") {
        // Cyclist cap -3.5 drops both -6 and -4.
        CHECK_THROWS_AS(
            enumerate_cells(model, ConflictType::VruCrossing, AgentClass::Cyclist),
            ConfigError);
    }
    SECTION("cap renormalization keeps the sum at one") {
        model.decel_caps.truck = -5.0;  // drops the -6 value
        const auto cells =
            enumerate_cells(model, ConflictType::RearEndLeadBrake, AgentClass::Truck);
        REQUIRE(cells.size() == 6);
        double sum = 0;
        for (const auto& c : cells) {
            CHECK(c.params->a_ss == -4.0);
            sum += c.weight;
        }
        CHECK(sum == Approx(1.0).margin(1e-12));
    }
    SECTION("explicit joint table is used in row order") {
        BehaviorModel joint;
        joint.default_entry.joint_table = true;
        for (int i = 0; i < 5; ++i) {
            joint.default_entry.joint_rows.emplace_back(
                ReactionParams{0.2 * (i + 1), -10.0, -5.0}, 0.2);
        }
        const auto cells = enumerate_cells(joint, ConflictType::CutIn,
                                           AgentClass::PassengerVehicle);
        REQUIRE(cells.size() == 5);
        for (int i = 0; i < 5; ++i) {
            CHECK(cells[static_cast<std::size_t>(i)].params->hrt == Approx(0.2 * (i + 1)));
        }
    }
}

TEST_CASE("shipped default config matches the built-in model") {
    std::ifstream in(std::string(FRACSIM_SOURCE_DIR) + "/configs/behavior_default.json");
    REQUIRE(in.good());
    const BehaviorModel from_file = load_behavior_model(in);
    const BehaviorModel built_in = default_behavior_model();
    REQUIRE(from_file.default_entry.hrt_values.size() ==
            built_in.default_entry.hrt_values.size());
    for (std::size_t i = 0; i < built_in.default_entry.hrt_values.size(); ++i) {
        CHECK(from_file.default_entry.hrt_values[i] == built_in.default_entry.hrt_values[i]);
        CHECK(from_file.default_entry.hrt_weights[i] == built_in.default_entry.hrt_weights[i]);
    }
    CHECK(from_file.default_entry.jerk_values == built_in.default_entry.jerk_values);
    CHECK(from_file.default_entry.a_ss_values == built_in.default_entry.a_ss_values);
    CHECK(from_file.decel_caps.truck == built_in.decel_caps.truck);
}

TEST_CASE("default model is normalized and capability-consistent") {
    const BehaviorModel model = default_behavior_model();
    for (AgentClass cls : {AgentClass::PassengerVehicle, AgentClass::Truck,
                           AgentClass::Cyclist}) {
        const auto cells = enumerate_cells(model, ConflictType::RearEndLeadBrake, cls);
        double sum = 0;
        for (const auto& c : cells) {
            sum += c.weight;
            if (c.params) CHECK(c.params->a_ss >= model.decel_caps.for_class(cls));
        }
        CHECK(sum == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("synthesized stopping distance matches the closed-form oracle") {
    // Straight 20 m/s track, jerk -10, a_ss -5, dt 0.001.
    const double v0 = 20.0;
    const AgentTrack track = straight_const(v0, 6.0, 0.001);
    const double por = 1.0;
    const ReactionParams params{0.0, -10.0, -5.0};
    const AgentTrack out = synthesize_response(track, por, params);

    // Stop time: por + 0.5 + (20 - 1.25) / 5.
    const double t_stop = por + 0.5 + (v0 - 1.25) / 5.0;
    const double expected = two_phase_stop_distance(v0, -10.0, -5.0);
    const Vec2 onset = track.state_at(por).position();
    const Vec2 rest = out.samples.back().position();
    CHECK(out.samples.back().speed == 0.0);
    CHECK((rest - onset).norm() == Approx(expected).margin(1e-4));
    // Speed reaches zero at the predicted instant.
    for (const auto& s : out.samples) {
        if (s.t < t_stop - 1e-6) {
            CHECK(s.speed > 0.0);
        } else {
            CHECK(s.speed == 0.0);
        }
    }
}

TEST_CASE("hard instant braking approaches v^2/2a") {
    const AgentTrack track = straight_const(10.0, 4.0, 0.01);
    const ReactionParams params{0.0, -1e6, -5.0};  // jerk cap: near-instant ramp
    const AgentTrack out = synthesize_response(track, 0.5, params);
    const Vec2 onset = track.state_at(0.5).position();
    const Vec2 rest = out.samples.back().position();
    CHECK((rest - onset).norm() == Approx(10.0 * 10.0 / (2.0 * 5.0)).margin(0.02));
}

TEST_CASE("reaction beyond the track end degenerates to the NRM rollout") {
    const AgentTrack track = straight_const(15.0, 3.0, 0.05);
    const ReactionParams params{10.0, -10.0, -5.0};  // onset at por + 10 > end
    const AgentTrack out = synthesize_response(track, 1.0, params);
    const AgentTrack nrm = nrm_response(track, 1.0);
    REQUIRE(out.samples.size() == nrm.samples.size());
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        CHECK(out.samples[i].x == Approx(nrm.samples[i].x).margin(1e-12));
        CHECK(out.samples[i].speed == Approx(nrm.samples[i].speed).margin(1e-12));
    }
}

TEST_CASE("synthesis preserves the logged prefix and follows the logged path") {
    // Curved path: constant speed around a quarter arc.
    AgentTrack track;
    track.agent_id = "r";
    track.agent_class = AgentClass::PassengerVehicle;
    track.length = 4.6;
    track.width = 1.8;
    const double radius = 40.0;
    const double speed = 12.0;
    for (int i = 0; i <= 160; ++i) {
        const double t = 0.05 * i;
        const double theta = speed * t / radius;
        track.samples.push_back({t, radius * std::sin(theta), radius * (1 - std::cos(theta)),
                                 wrap_angle(theta), speed, 0.0});
    }
    const double por = 2.0;
    const ReactionParams params{0.4, -8.0, -4.0};
    const AgentTrack out = synthesize_response(track, por, params);

    const PathPolyline path = track.path();
    double prev_speed = out.samples.front().speed;
    bool after_onset = false;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto& s = out.samples[i];
        if (s.t <= por) {
            // Logged prefix bitwise.
            CHECK(s.x == track.samples[i].x);
            CHECK(s.speed == track.samples[i].speed);
        } else {
            CHECK(s.speed >= 0.0);
            REQUIRE(s.accel_long.has_value());
            CHECK(*s.accel_long >= params.a_ss - 1e-9);
            CHECK(*s.accel_long <= 1e-9);
        }
        if (s.t > por + params.hrt + 1e-9) {
            if (after_onset) CHECK(s.speed <= prev_speed + 1e-12);
            after_onset = true;
        }
        prev_speed = s.speed;
    }
    // Path fidelity: every synthesized point sits on the logged polyline
    // (exact point-to-segment distance) while the polyline lasts.
    const auto& pts = path.points();
    const auto dist_to_polyline = [&](Vec2 p) {
        double best = 1e9;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const Vec2 d = pts[k + 1] - pts[k];
            const double len2 = d.squared_norm();
            const double u = len2 > 0 ? std::clamp(dot(p - pts[k], d) / len2, 0.0, 1.0) : 0.0;
            best = std::min(best, (pts[k] + u * d - p).norm());
        }
        return best;
    };
    for (const auto& s : out.samples) {
        CHECK(dist_to_polyline({s.x, s.y}) <= 1e-9);
    }
}

TEST_CASE("NRM holds the PoR speed along the logged path") {
    SECTION("constant-speed track is reproduced identically") {
        const AgentTrack track = straight_const(9.0, 3.0, 0.05);
        const AgentTrack out = nrm_response(track, 1.0);
        REQUIRE(out.samples.size() == track.samples.size());
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
            CHECK(out.samples[i].x == Approx(track.samples[i].x).margin(1e-9));
            CHECK(out.samples[i].speed == Approx(track.samples[i].speed));
        }
    }
    SECTION("decelerating log: NRM leads the logged position") {
        AgentTrack track = straight_const(10.0, 3.0, 0.05);
        for (auto& s : track.samples) {
            if (s.t > 1.0) {
                const double dt = s.t - 1.0;
                s.speed = std::max(0.0, 10.0 - 4.0 * dt);
                s.x = 10.0 + 10.0 * dt - 2.0 * dt * dt;
                if (s.speed == 0.0) s.x = 10.0 + 12.5;
            }
        }
        const AgentTrack out = nrm_response(track, 1.0);
        CHECK(out.samples.back().x > track.samples.back().x);
        CHECK(out.samples.back().speed == Approx(10.0));
    }
    SECTION("accelerating log: speed frozen, not floor-clamped") {
        AgentTrack track = straight_const(10.0, 3.0, 0.05);
        for (auto& s : track.samples) {
            if (s.t > 1.0) {
                const double dt = s.t - 1.0;
                s.speed = 10.0 + 2.0 * dt;
                s.x = 10.0 + 10.0 * dt + 1.0 * dt * dt;
            }
        }
        const AgentTrack out = nrm_response(track, 1.0);
        for (const auto& s : out.samples) {
            if (s.t > 1.0) CHECK(s.speed == Approx(10.0));
        }
        CHECK(out.samples.back().x < track.samples.back().x);
    }
}

TEST_CASE("synthesize_response rejects malformed parameters") {
    const AgentTrack track = straight_const(10.0, 2.0, 0.05);
    CHECK_THROWS_AS(synthesize_response(track, 0.5, {-0.1, -10, -5}), EvalError);
    CHECK_THROWS_AS(synthesize_response(track, 0.5, {0.5, 10, -5}), EvalError);
    CHECK_THROWS_AS(synthesize_response(track, 0.5, {0.5, -10, 5}), EvalError);
}

TEST_CASE("single-cell model synthesis is idempotent") {
    // Applying the same reaction to an already-synthesized track reproduces
    // it: the hold phase sees the same PoR state and the same path.
    const AgentTrack nominal = straight_const(18.0, 8.0, 0.05);
    const ReactionParams params{0.8, -10.0, -5.0};
    const AgentTrack once = synthesize_response(nominal, 1.0, params);
    const AgentTrack twice = synthesize_response(once, 1.0, params);
    REQUIRE(once.samples.size() == twice.samples.size());
    for (std::size_t i = 0; i < once.samples.size(); ++i) {
        CHECK(twice.samples[i].x == Approx(once.samples[i].x).margin(1e-9));
        CHECK(twice.samples[i].speed == Approx(once.samples[i].speed).margin(1e-12));
    }
}
