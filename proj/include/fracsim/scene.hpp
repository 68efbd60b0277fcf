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
// Trajectory and scene value types, validation, interpolation, and uniform
// resampling. Everything is immutable after construction; all functions are
// pure and safe to call concurrently.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracsim/geometry.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

inline constexpr double kMinTrackDuration = 0.5;   // seconds
inline constexpr double kMinCommonOverlap = 0.5;   // seconds
inline constexpr double kDefaultMaxAccel = 12.0;   // |m/s^2| clamp for derived accel

struct TrajectorySample {
    double t{0};        // seconds, strictly increasing within a track
    double x{0};        // meters, planar world frame
    double y{0};
    double heading{0};  // radians in (-pi, pi]
    double speed{0};    // m/s, >= 0
    std::optional<double> accel_long;  // m/s^2 along heading; derived when absent

    [[nodiscard]] Vec2 position() const { return {x, y}; }
    [[nodiscard]] Vec2 velocity() const { return speed * unit_from_angle(heading); }
    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct AgentTrack {
    std::string agent_id;
    AgentClass agent_class{AgentClass::PassengerVehicle};
    double length{0};  // meters, > 0
    double width{0};   // meters, > 0
    std::optional<double> mass_kg;
    std::vector<TrajectorySample> samples;

    [[nodiscard]] double start_time() const { return samples.front().t; }
    [[nodiscard]] double end_time() const { return samples.back().t; }
    [[nodiscard]] double duration() const { return end_time() - start_time(); }

    [[nodiscard]] OrientedBox footprint(const TrajectorySample& s) const {
        return OrientedBox{{s.x, s.y}, s.heading, length / 2.0, width / 2.0};
    }

    [[nodiscard]] PathPolyline path() const {
        std::vector<Vec2> pts;
        std::vector<double> headings;
        pts.reserve(samples.size());
        headings.reserve(samples.size());
        for (const auto& s : samples) {
            pts.push_back({s.x, s.y});
            headings.push_back(s.heading);
        }
        return PathPolyline{std::move(pts), std::move(headings)};
    }

    /// Linear interpolation at time t (heading on the shortest arc);
    /// clamps outside the sampled span.
    [[nodiscard]] TrajectorySample state_at(double t) const {
        if (t <= samples.front().t) return samples.front();
        if (t >= samples.back().t) return samples.back();
        const auto it = std::upper_bound(
            samples.begin(), samples.end(), t,
            [](double v, const TrajectorySample& s) { return v < s.t; });
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double u = (t - a.t) / (b.t - a.t);
        TrajectorySample out;
        out.t = t;
        out.x = a.x + u * (b.x - a.x);
        out.y = a.y + u * (b.y - a.y);
        out.heading = lerp_angle(a.heading, b.heading, u);
        out.speed = a.speed + u * (b.speed - a.speed);
        if (a.accel_long && b.accel_long) {
            out.accel_long = *a.accel_long + u * (*b.accel_long - *a.accel_long);
        }
        return out;
    }

    /// Discrete yaw rate of the grid segment containing t.
    [[nodiscard]] double yaw_rate_at(double t) const {
        if (samples.size() < 2) return 0.0;
        auto it = std::upper_bound(
            samples.begin(), samples.end(), t,
            [](double v, const TrajectorySample& s) { return v < s.t; });
        if (it == samples.begin()) ++it;
        if (it == samples.end()) --it;
        const auto& b = *it;
        const auto& a = *(it - 1);
        const double dt = b.t - a.t;
        return dt > 0 ? angle_diff(b.heading, a.heading) / dt : 0.0;
    }
};

/// Optional ground-truth annotations carried by a scene document.
/// When present they override the corresponding heuristic.
struct SceneAnnotations {
    std::optional<ConflictType> conflict_type;
    std::optional<std::string> initiator_id;
    std::optional<std::string> responder_id;
    std::optional<double> por_t;
    std::optional<SeverityLevel> gt_severity;

    [[nodiscard]] bool empty() const {
        return !conflict_type && !initiator_id && !responder_id && !por_t && !gt_severity;
    }
    friend bool operator==(const SceneAnnotations&, const SceneAnnotations&) = default;
};

struct ConflictScene {
    std::string scene_id;
    AgentTrack track_a;
    AgentTrack track_b;
    SceneAnnotations annotations;

    /// Overlapping time window of the two tracks, when one exists.
    [[nodiscard]] std::optional<std::pair<double, double>> common_span() const {
        const double lo = std::max(track_a.start_time(), track_b.start_time());
        const double hi = std::min(track_a.end_time(), track_b.end_time());
        if (hi <= lo) return std::nullopt;
        return std::make_pair(lo, hi);
    }

    [[nodiscard]] const AgentTrack* track_by_id(std::string_view id) const {
        if (track_a.agent_id == id) return &track_a;
        if (track_b.agent_id == id) return &track_b;
        return nullptr;
    }

    [[nodiscard]] const AgentTrack& other_track(std::string_view id) const {
        return track_a.agent_id == id ? track_b : track_a;
    }
};

// ── Validation ──────────────────────────────────────────────────────────────

namespace detail {

inline void validate_track_into(const AgentTrack& tr, const std::string& prefix,
                                std::vector<Violation>& out) {
    if (tr.agent_id.empty()) out.push_back({prefix + ".agent_id", "must not be empty"});
    if (!(tr.length > 0)) out.push_back({prefix + ".length_m", "footprint length must be > 0"});
    if (!(tr.width > 0)) out.push_back({prefix + ".width_m", "footprint width must be > 0"});
    if (tr.mass_kg && !(*tr.mass_kg > 0)) {
        out.push_back({prefix + ".mass_kg", "mass, when given, must be > 0"});
    }
    if (tr.samples.size() < 2) {
        out.push_back({prefix + ".samples", "track needs at least 2 samples"});
        return;
    }
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const auto& s = tr.samples[i];
        const std::string sp = prefix + ".samples[" + std::to_string(i) + "]";
        if (i > 0 && !(s.t > tr.samples[i - 1].t)) {
            out.push_back({sp + ".t_s", "timestamps must be strictly increasing"});
        }
        if (!(s.speed >= 0)) out.push_back({sp + ".speed_mps", "speed must be >= 0"});
        if (!(s.heading > -kPi - 1e-12 && s.heading <= kPi + 1e-12)) {
            out.push_back({sp + ".heading_rad", "heading must be normalized to (-pi, pi]"});
        }
        if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y) ||
            !std::isfinite(s.heading) || !std::isfinite(s.speed)) {
            out.push_back({sp, "non-finite value"});
        }
    }
    if (tr.duration() < kMinTrackDuration) {
        out.push_back({prefix + ".samples",
                       "track duration must be >= " + std::to_string(kMinTrackDuration) + " s"});
    }
}

}  // namespace detail

/// Checks every type invariant; an empty result means the scene is valid.
[[nodiscard]] inline std::vector<Violation> validate_scene(const ConflictScene& scene) {
    std::vector<Violation> out;
    if (scene.scene_id.empty()) out.push_back({"scene_id", "must not be empty"});
    detail::validate_track_into(scene.track_a, "tracks[0]", out);
    detail::validate_track_into(scene.track_b, "tracks[1]", out);
    if (scene.track_a.agent_id == scene.track_b.agent_id && !scene.track_a.agent_id.empty()) {
        out.push_back({"tracks", "agent ids must differ"});
    }
    if (scene.track_a.samples.size() >= 2 && scene.track_b.samples.size() >= 2) {
        const auto span = scene.common_span();
        if (!span || span->second - span->first < kMinCommonOverlap) {
            out.push_back({"tracks", "insufficient temporal overlap (need >= " +
                                         std::to_string(kMinCommonOverlap) + " s)"});
        }
    }
    const auto check_role_id = [&](const std::optional<std::string>& id, const char* key) {
        if (id && !scene.track_by_id(*id)) {
            out.push_back({std::string("annotations.") + key, "does not match either track"});
        }
    };
    check_role_id(scene.annotations.initiator_id, "initiator_id");
    check_role_id(scene.annotations.responder_id, "responder_id");
    if (scene.annotations.initiator_id && scene.annotations.responder_id &&
        *scene.annotations.initiator_id == *scene.annotations.responder_id) {
        out.push_back({"annotations", "initiator_id and responder_id must differ"});
    }
    return out;
}

// ── Resampling ──────────────────────────────────────────────────────────────

namespace detail {

/// Recompute accel_long from speed by central differences (one-sided at the
/// ends), clamped to +/- max_accel against reconstruction spikes.
inline void derive_accel(std::vector<TrajectorySample>& samples, double max_accel) {
    const std::size_t n = samples.size();
    if (n < 2) return;
    for (std::size_t i = 0; i < n; ++i) {
        double a;
        if (i == 0) {
            a = (samples[1].speed - samples[0].speed) / (samples[1].t - samples[0].t);
        } else if (i == n - 1) {
            a = (samples[n - 1].speed - samples[n - 2].speed) /
                (samples[n - 1].t - samples[n - 2].t);
        } else {
            a = (samples[i + 1].speed - samples[i - 1].speed) /
                (samples[i + 1].t - samples[i - 1].t);
        }
        samples[i].accel_long = std::clamp(a, -max_accel, max_accel);
    }
}

inline AgentTrack resample_on_grid(const AgentTrack& track, double t0, double dt,
                                   std::size_t n, double max_accel) {
    AgentTrack out = track;
    out.samples.clear();
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) * dt;
        TrajectorySample s = track.state_at(t);
        s.t = t;
        out.samples.push_back(s);
    }
    derive_accel(out.samples, max_accel);
    return out;
}

}  // namespace detail

/// Uniform resampling at step dt over the track's own span. Positions and
/// speed interpolate linearly, heading on the shortest arc; accel_long is
/// recomputed from the resampled speeds. Idempotent at a matching dt.
[[nodiscard]] inline AgentTrack resample_track(const AgentTrack& track, double dt,
                                               double max_accel = kDefaultMaxAccel) {
    if (!(dt > 0)) throw EvalError("resample_track: dt must be > 0");
    if (track.samples.size() < 2 || dt > track.duration()) {
        throw EvalError("resample_track: dt larger than track duration");
    }
    const double t0 = track.start_time();
    const auto n = static_cast<std::size_t>(
                       std::floor(track.duration() / dt + 1e-9)) + 1;
    return detail::resample_on_grid(track, t0, dt, n, max_accel);
}

/// Resamples both tracks of a scene onto one shared grid covering their
/// common time span, as required by the collision sweep and the rollout.
[[nodiscard]] inline ConflictScene resample_scene(const ConflictScene& scene, double dt,
                                                  double max_accel = kDefaultMaxAccel) {
    const auto span = scene.common_span();
    if (!span) throw EvalError("resample_scene: tracks do not overlap in time");
    const double lo = span->first;
    const double hi = span->second;
    if (!(dt > 0) || hi - lo < dt) {
        throw EvalError("resample_scene: dt larger than the common time span");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / dt + 1e-9)) + 1;
    ConflictScene out = scene;
    out.track_a = detail::resample_on_grid(scene.track_a, lo, dt, n, max_accel);
    out.track_b = detail::resample_on_grid(scene.track_b, lo, dt, n, max_accel);
    return out;
}

}  // namespace fracsim
