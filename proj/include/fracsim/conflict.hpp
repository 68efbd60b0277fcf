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
// Conflict analysis heuristics: conflict-type classification from relative
// headings and path geometry, initiator/responder role assignment by
// corridor encroachment, and per-type point-of-reaction triggers. Scene
// annotations, when present, always override the heuristics.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fracsim/geometry.hpp"
#include "fracsim/scene.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

/// Tunable thresholds for the conflict-analysis heuristics. Angles are
/// stored in radians; config files carry degrees.
struct ConflictThresholds {
    double corridor_inflation = 0.2;            // m, swept-footprint margin
    double rear_end_decel = -1.5;               // m/s^2, initiator braking trigger
    double rear_end_sustain = 0.2;              // s, braking must persist this long
    double lateral_closing_speed = 0.3;         // m/s, cut-in/merge trigger
    double same_direction_max = 40.0 * kPi / 180.0;
    double head_on_min = 140.0 * kPi / 180.0;
    double turn_total_min = 40.0 * kPi / 180.0;  // total heading change marking a turner
    double pullout_speed_max = 2.0;             // m/s, initiator speed separating pullout/cut-in
};

enum class Provenance { Annotated, Heuristic };

[[nodiscard]] inline std::string_view to_string(Provenance p) {
    return p == Provenance::Annotated ? "annotated" : "heuristic";
}

/// Classification result; `type` empty means unclassifiable, with `reason`
/// stating why. Unclassifiable scenes are never silently defaulted.
struct Classification {
    std::optional<ConflictType> type;
    Provenance provenance{Provenance::Heuristic};
    std::string reason;
};

struct RoleAssignment {
    std::string initiator_id;
    std::string responder_id;
    Provenance provenance{Provenance::Heuristic};
};

struct PorResult {
    double t{0};
    Provenance provenance{Provenance::Heuristic};
};

// ── Corridors ───────────────────────────────────────────────────────────────

/// Rectangle swept by the agent's footprint along its logged path, one box
/// per path segment, inflated on every side.
[[nodiscard]] inline Corridor swept_corridor(const AgentTrack& track, double inflation) {
    Corridor c;
    const auto& s = track.samples;
    c.boxes.reserve(s.size());
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const Vec2 p0 = s[i].position();
        const Vec2 p1 = s[i + 1].position();
        const Vec2 d = p1 - p0;
        const double seg = d.norm();
        const double heading = seg > 1e-9 ? std::atan2(d.y, d.x) : s[i].heading;
        c.boxes.push_back(OrientedBox{0.5 * (p0 + p1), heading,
                                      (seg + track.length) / 2.0 + inflation,
                                      track.width / 2.0 + inflation});
    }
    if (c.boxes.empty()) {
        c.boxes.push_back(OrientedBox{s.front().position(), s.front().heading,
                                      track.length / 2.0 + inflation,
                                      track.width / 2.0 + inflation});
    }
    return c;
}

/// Corridor swept by the agent's constant-velocity projection from its
/// state at time t0 over the given horizon.
[[nodiscard]] inline Corridor projected_corridor(const AgentTrack& track, double t0,
                                                 double horizon, double inflation) {
    const TrajectorySample s = track.state_at(t0);
    const double travel = std::max(s.speed, 0.0) * horizon;
    Corridor c;
    c.boxes.push_back(OrientedBox{
        s.position() + 0.5 * travel * unit_from_angle(s.heading), s.heading,
        (travel + track.length) / 2.0 + inflation, track.width / 2.0 + inflation});
    return c;
}

// ── Classification ──────────────────────────────────────────────────────────

namespace detail {

/// Total signed heading change over the common span.
inline double total_heading_change(const AgentTrack& tr, double lo, double hi) {
    double total = 0;
    const auto& s = tr.samples;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i].t < lo || s[i - 1].t > hi) continue;
        total += angle_diff(s[i].heading, s[i - 1].heading);
    }
    return total;
}

/// First grid time at which the track's footprint intersects the corridor,
/// or nullopt.
inline std::optional<double> first_entry_time(const AgentTrack& tr, const Corridor& corridor,
                                              double lo, double hi) {
    for (const auto& s : tr.samples) {
        if (s.t < lo || s.t > hi) continue;
        if (corridor.intersects(tr.footprint(s))) return s.t;
    }
    return std::nullopt;
}

/// Longitudinal position of p along q's heading axis (ahead is positive).
inline double longitudinal_offset(const TrajectorySample& p, const TrajectorySample& q) {
    return dot(p.position() - q.position(), unit_from_angle(q.heading));
}

/// Max lateral closing speed of `mover` toward the line the other agent
/// occupied at the start of the window (its lane proxy), with the gap
/// required to shrink across the window. Measuring against the fixed
/// initial line keeps a turning mover from masquerading as stationary and
/// a stationary agent from "closing" on a rotating mover.
struct LateralClosing {
    double max_rate = 0;
    double onset_speed = 0;    // mover speed when closing first exceeds the threshold
    std::optional<double> onset_t;
};

inline LateralClosing lateral_closing(const AgentTrack& mover, const AgentTrack& other,
                                      double threshold) {
    LateralClosing out;
    const auto& ms = mover.samples;
    if (other.samples.empty() || ms.size() < 3) return out;
    const TrajectorySample line = other.samples.front();
    const Vec2 dir = unit_from_angle(line.heading);
    const auto offset = [&](const TrajectorySample& s) {
        return std::abs(cross(dir, s.position() - line.position()));
    };
    for (std::size_t i = 1; i + 1 < ms.size(); ++i) {
        const double d_prev = offset(ms[i - 1]);
        const double d_next = offset(ms[i + 1]);
        const double dt = ms[i + 1].t - ms[i - 1].t;
        const double rate = dt > 0 ? (d_prev - d_next) / dt : 0.0;
        if (rate > out.max_rate) out.max_rate = rate;
        if (!out.onset_t && rate >= threshold && d_next < d_prev) {
            out.onset_t = ms[i].t;
            out.onset_speed = ms[i].speed;
        }
    }
    return out;
}

/// True when the initiator sustains decel <= threshold for `sustain`
/// seconds starting at some sample; returns the window start.
inline std::optional<double> sustained_decel_start(const AgentTrack& tr, double threshold,
                                                   double sustain) {
    const auto& s = tr.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i].accel_long || *s[i].accel_long > threshold) continue;
        const double window_end = s[i].t + sustain;
        bool ok = true;
        for (std::size_t j = i; j < s.size() && s[j].t <= window_end + 1e-9; ++j) {
            if (!s[j].accel_long || *s[j].accel_long > threshold) {
                ok = false;
                break;
            }
        }
        if (ok && s.back().t + 1e-9 >= window_end) return s[i].t;
    }
    return std::nullopt;
}

}  // namespace detail

/// Heuristic conflict-type classification; the scene annotation wins when
/// present. The scene must be validated and resampled onto a common grid.
[[nodiscard]] inline Classification classify_conflict(const ConflictScene& scene,
                                                      const ConflictThresholds& th = {}) {
    if (scene.annotations.conflict_type) {
        return {*scene.annotations.conflict_type, Provenance::Annotated, "annotated"};
    }
    const auto span = scene.common_span();
    if (!span) return {std::nullopt, Provenance::Heuristic, "tracks do not overlap in time"};
    const auto [lo, hi] = *span;
    const AgentTrack& a = scene.track_a;
    const AgentTrack& b = scene.track_b;

    const Corridor corr_a = swept_corridor(a, th.corridor_inflation);
    const Corridor corr_b = swept_corridor(b, th.corridor_inflation);
    const bool paths_conflict = detail::first_entry_time(a, corr_b, lo, hi).has_value() ||
                                detail::first_entry_time(b, corr_a, lo, hi).has_value() ||
                                polylines_intersect(a.path(), b.path());

    if (is_vru(a.agent_class) || is_vru(b.agent_class)) {
        if (paths_conflict) return {ConflictType::VruCrossing, Provenance::Heuristic, ""};
        return {std::nullopt, Provenance::Heuristic,
                "vulnerable road user present but paths never conflict"};
    }

    const TrajectorySample a0 = a.state_at(lo);
    const TrajectorySample b0 = b.state_at(lo);
    const double delta0 = std::abs(angle_diff(a0.heading, b0.heading));
    const double turn_a = detail::total_heading_change(a, lo, hi);
    const double turn_b = detail::total_heading_change(b, lo, hi);
    const bool a_turns = std::abs(turn_a) >= th.turn_total_min;
    const bool b_turns = std::abs(turn_b) >= th.turn_total_min;

    if (a_turns != b_turns) {
        if (!paths_conflict) {
            return {std::nullopt, Provenance::Heuristic, "turning agent but paths never conflict"};
        }
        const TrajectorySample a1 = a.state_at(hi);
        const TrajectorySample b1 = b.state_at(hi);
        const double delta_end = std::abs(angle_diff(a1.heading, b1.heading));
        if (delta_end <= th.same_direction_max) {
            return {ConflictType::RightTurnMerge, Provenance::Heuristic, ""};
        }
        return {ConflictType::LeftTurnAcrossPath, Provenance::Heuristic, ""};
    }
    if (a_turns && b_turns) {
        return {std::nullopt, Provenance::Heuristic, "both agents turning"};
    }

    if (delta0 >= th.head_on_min) {
        if (paths_conflict) return {ConflictType::HeadOn, Provenance::Heuristic, ""};
        return {std::nullopt, Provenance::Heuristic, "opposite headings but paths never conflict"};
    }

    if (delta0 <= th.same_direction_max) {
        // Same direction: in-lane lead braking vs. lateral intrusion.
        const double horizon = hi - lo;
        const bool a_ahead = detail::longitudinal_offset(a0, b0) > 0;
        const AgentTrack& lead = a_ahead ? a : b;
        const AgentTrack& follow = a_ahead ? b : a;
        const Corridor follow_proj =
            projected_corridor(follow, lo, horizon, th.corridor_inflation);
        const TrajectorySample lead0 = lead.state_at(lo);
        if (follow_proj.intersects(lead.footprint(lead0))) {
            if (detail::sustained_decel_start(lead, th.rear_end_decel, th.rear_end_sustain)) {
                return {ConflictType::RearEndLeadBrake, Provenance::Heuristic, ""};
            }
            return {std::nullopt, Provenance::Heuristic,
                    "in-lane same-direction pair without initiating deceleration"};
        }
        const auto close_a = detail::lateral_closing(a, b, th.lateral_closing_speed);
        const auto close_b = detail::lateral_closing(b, a, th.lateral_closing_speed);
        const bool a_closes = close_a.onset_t.has_value();
        const bool b_closes = close_b.onset_t.has_value();
        if (a_closes || b_closes) {
            const auto& closing =
                (a_closes && (!b_closes || *close_a.onset_t <= *close_b.onset_t)) ? close_a
                                                                                  : close_b;
            if (closing.onset_speed < th.pullout_speed_max) {
                return {ConflictType::Pullout, Provenance::Heuristic, ""};
            }
            return {ConflictType::CutIn, Provenance::Heuristic, ""};
        }
        return {std::nullopt, Provenance::Heuristic,
                "same-direction pair with no lateral closing"};
    }

    // Oblique band: straight crossing paths.
    if (paths_conflict || polylines_intersect(a.path(), b.path())) {
        return {ConflictType::CrossingStraight, Provenance::Heuristic, ""};
    }
    return {std::nullopt, Provenance::Heuristic, "crossing headings but paths never conflict"};
}

// ── Role assignment ─────────────────────────────────────────────────────────

/// Initiator = the agent whose logged footprint first enters the corridor
/// swept by the other agent's constant-velocity projection from the start
/// of the common span. Annotated roles win. Throws EvalError when neither
/// agent ever encroaches.
[[nodiscard]] inline RoleAssignment assign_roles(const ConflictScene& scene, ConflictType,
                                                 const ConflictThresholds& th = {}) {
    const auto& ann = scene.annotations;
    if (ann.initiator_id || ann.responder_id) {
        RoleAssignment r;
        r.provenance = Provenance::Annotated;
        if (ann.initiator_id) {
            r.initiator_id = *ann.initiator_id;
            r.responder_id = ann.responder_id ? *ann.responder_id
                                              : scene.other_track(*ann.initiator_id).agent_id;
        } else {
            r.responder_id = *ann.responder_id;
            r.initiator_id = scene.other_track(*ann.responder_id).agent_id;
        }
        return r;
    }
    const auto span = scene.common_span();
    if (!span) throw EvalError("assign_roles: tracks do not overlap in time");
    const auto [lo, hi] = *span;
    const double horizon = hi - lo;
    const AgentTrack& a = scene.track_a;
    const AgentTrack& b = scene.track_b;
    const Corridor proj_a = projected_corridor(a, lo, horizon, th.corridor_inflation);
    const Corridor proj_b = projected_corridor(b, lo, horizon, th.corridor_inflation);
    const auto t_a = detail::first_entry_time(a, proj_b, lo, hi);  // a invades b's projection
    const auto t_b = detail::first_entry_time(b, proj_a, lo, hi);

    const auto make = [&](const AgentTrack& init, const AgentTrack& resp) {
        return RoleAssignment{init.agent_id, resp.agent_id, Provenance::Heuristic};
    };
    if (t_a && (!t_b || *t_a < *t_b)) return make(a, b);
    if (t_b && (!t_a || *t_b < *t_a)) return make(b, a);
    if (t_a && t_b) {
        // Simultaneous entry: the deeper intruder initiates.
        const auto depth_into = [&](const AgentTrack& tr, const Corridor& c, double t) {
            double best = 0;
            const OrientedBox fp = tr.footprint(tr.state_at(t));
            for (const auto& box : c.boxes) {
                if (const auto pen = obb_penetration(box, fp)) best = std::max(best, pen->depth);
            }
            return best;
        };
        return depth_into(a, proj_b, *t_a) >= depth_into(b, proj_a, *t_b) ? make(a, b)
                                                                          : make(b, a);
    }
    throw EvalError("assign_roles: ambiguous roles, neither agent encroaches on the other's "
                    "projected corridor");
}

// ── Point of reaction ───────────────────────────────────────────────────────

/// Earliest time the responder could have identified the impending
/// conflict, by the per-type trigger. The annotated por_t wins. Throws
/// EvalError when the trigger never fires.
[[nodiscard]] inline PorResult detect_por(const ConflictScene& scene, ConflictType ctype,
                                          const RoleAssignment& roles,
                                          const ConflictThresholds& th = {}) {
    if (scene.annotations.por_t) return {*scene.annotations.por_t, Provenance::Annotated};
    const auto span = scene.common_span();
    if (!span) throw EvalError("detect_por: tracks do not overlap in time");
    const auto [lo, hi] = *span;
    const AgentTrack* initiator = scene.track_by_id(roles.initiator_id);
    const AgentTrack* responder = scene.track_by_id(roles.responder_id);
    if (!initiator || !responder) throw EvalError("detect_por: role ids do not match tracks");

    std::optional<double> por;
    switch (ctype) {
        case ConflictType::RearEndLeadBrake: {
            const Corridor resp_proj =
                projected_corridor(*responder, lo, hi - lo, th.corridor_inflation);
            // Braking onset while inside the responder's projected corridor.
            const auto& s = initiator->samples;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s[i].t < lo || s[i].t > hi) continue;
                if (!s[i].accel_long || *s[i].accel_long > th.rear_end_decel) continue;
                const double window_end = s[i].t + th.rear_end_sustain;
                bool sustained = s.back().t + 1e-9 >= window_end;
                for (std::size_t j = i; sustained && j < s.size() && s[j].t <= window_end + 1e-9;
                     ++j) {
                    if (!s[j].accel_long || *s[j].accel_long > th.rear_end_decel) sustained = false;
                }
                if (sustained && resp_proj.intersects(initiator->footprint(s[i]))) {
                    por = s[i].t;
                    break;
                }
            }
            break;
        }
        case ConflictType::CutIn:
        case ConflictType::Pullout:
        case ConflictType::RightTurnMerge: {
            const auto closing =
                detail::lateral_closing(*initiator, *responder, th.lateral_closing_speed);
            por = closing.onset_t;
            break;
        }
        case ConflictType::CrossingStraight:
        case ConflictType::LeftTurnAcrossPath:
        case ConflictType::VruCrossing: {
            const Corridor resp_corr = swept_corridor(*responder, th.corridor_inflation);
            por = detail::first_entry_time(*initiator, resp_corr, lo, hi);
            break;
        }
        case ConflictType::HeadOn: {
            const Corridor ca = swept_corridor(*initiator, th.corridor_inflation);
            const Corridor cb = swept_corridor(*responder, th.corridor_inflation);
            bool overlapping = false;
            for (const auto& box : ca.boxes) {
                if (cb.intersects(box)) {
                    overlapping = true;
                    break;
                }
            }
            if (overlapping) {
                const auto& si = initiator->samples;
                const auto& sr = responder->samples;
                const std::size_t n = std::min(si.size(), sr.size());
                for (std::size_t i = 1; i < n; ++i) {
                    const double d_prev = (si[i - 1].position() - sr[i - 1].position()).norm();
                    const double d_cur = (si[i].position() - sr[i].position()).norm();
                    if (d_cur < d_prev) {
                        por = si[i - 1].t;
                        break;
                    }
                }
            }
            break;
        }
    }
    if (!por) throw EvalError("no PoR found: the " + std::string(to_string(ctype)) +
                              " trigger never fires; scene is not a conflict under this model");
    return {std::clamp(*por, lo, hi), Provenance::Heuristic};
}

}  // namespace fracsim
