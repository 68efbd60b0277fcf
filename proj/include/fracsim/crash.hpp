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
// Crash mechanics: swept oriented-footprint contact detection, planar
// impulse-momentum resolution at the contact point, footprint-based inertia
// estimation, and the delta-v / contact-speed severity bands.

#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "fracsim/geometry.hpp"
#include "fracsim/scene.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

/// Crash-model parameters. Severity thresholds are stored in mph and
/// converted with the exact factor 0.44704 m/s per mph.
struct CrashParams {
    double restitution = 0.1;           // e, normal coefficient of restitution
    double friction_mu = 0.55;          // tangential impulse cap |Jt| <= mu * Jn
    double mass_per_area = 175.0;       // kg/m^2 fallback for footprint mass
    double cyclist_mass = 90.0;         // kg, class default
    double pedestrian_mass = 75.0;      // kg, class default
    double motorcycle_mass = 240.0;     // kg, class default
    double vehicle_l1_mph = 6.0;        // delta-v at or above -> L1
    double vehicle_l0_mph = 20.0;       // delta-v at or above -> L0
    double vru_l1_mph = 5.0;            // contact speed at or above -> L1
    double vru_l0_mph = 15.0;           // contact speed at or above -> L0
    double penetration_tol = 0.01;      // m, accepted overlap at reported contact
    double contact_time_resolution = 1e-3;  // s, bisection refinement target
};

/// Kinematic state of one body at the contact instant.
struct BodyState {
    Vec2 position;   // CG, world frame
    Vec2 velocity;   // CG velocity vector, m/s
    double yaw_rate{0};  // rad/s
    double heading{0};
};

struct ContactState {
    double t{0};        // seconds; first-overlap time refined to 1 ms
    Vec2 point;         // centroid of the footprint overlap region
    Vec2 normal;        // unit, minimum-penetration axis oriented a -> b
    BodyState a;
    BodyState b;

    [[nodiscard]] double relative_speed() const { return (b.velocity - a.velocity).norm(); }
};

struct Inertia {
    double mass{0};         // kg
    double yaw_inertia{0};  // kg m^2
};

/// Mass precedence: per-track value, then the class default (cyclist,
/// pedestrian, motorcycle), then footprint area x mass_per_area.
/// Yaw inertia uses the rectangular-plate formula m (L^2 + W^2) / 12.
[[nodiscard]] inline Inertia estimate_inertia(const AgentTrack& track,
                                              const CrashParams& params) {
    double mass;
    if (track.mass_kg) {
        mass = *track.mass_kg;
    } else {
        switch (track.agent_class) {
            case AgentClass::Cyclist: mass = params.cyclist_mass; break;
            case AgentClass::Pedestrian: mass = params.pedestrian_mass; break;
            case AgentClass::Motorcycle: mass = params.motorcycle_mass; break;
            default: mass = params.mass_per_area * track.length * track.width; break;
        }
    }
    const double yaw_inertia =
        mass * (track.length * track.length + track.width * track.width) / 12.0;
    return {mass, yaw_inertia};
}

namespace detail {

struct InterpolatedState {
    OrientedBox box;
    TrajectorySample sample;
};

inline InterpolatedState footprint_at_time(const AgentTrack& tr, double t) {
    TrajectorySample s = tr.state_at(t);
    return {tr.footprint(s), s};
}

inline BodyState body_state(const AgentTrack& tr, const TrajectorySample& s) {
    return BodyState{{s.x, s.y}, s.velocity(), tr.yaw_rate_at(s.t), s.heading};
}

inline void require_common_grid(const AgentTrack& a, const AgentTrack& b) {
    if (a.samples.size() != b.samples.size()) {
        throw EvalError("detect_collision: tracks are not on a common grid");
    }
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        if (std::abs(a.samples[i].t - b.samples[i].t) > 1e-9) {
            throw EvalError("detect_collision: tracks are not on a common grid");
        }
    }
}

}  // namespace detail

/// Earliest overlap of the two oriented footprints, refined by bisection
/// between grid steps to 1 ms. Returns nullopt when the footprints never
/// overlap. Both tracks must share one uniform time grid.
[[nodiscard]] inline std::optional<ContactState> detect_collision(
    const AgentTrack& track_a, const AgentTrack& track_b,
    const CrashParams& params = {}) {
    detail::require_common_grid(track_a, track_b);
    const auto& sa = track_a.samples;
    const auto& sb = track_b.samples;

    // Broad phase: circumscribed-circle distance check before SAT.
    const double reach = std::hypot(track_a.length, track_a.width) / 2.0 +
                         std::hypot(track_b.length, track_b.width) / 2.0;
    const double reach2 = reach * reach;

    std::size_t hit = sa.size();
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const Vec2 d = {sb[i].x - sa[i].x, sb[i].y - sa[i].y};
        if (d.squared_norm() > reach2) continue;
        if (obb_overlap(track_a.footprint(sa[i]), track_b.footprint(sb[i]))) {
            hit = i;
            break;
        }
    }
    if (hit == sa.size()) return std::nullopt;

    double t_hit = sa[hit].t;
    if (hit > 0) {
        // Bisect (t_prev, t_hit]: t_lo is overlap-free, t_hit overlaps. Keep
        // halving until the bracket is inside the time resolution and the
        // reported overlap is within the penetration tolerance.
        double t_lo = sa[hit - 1].t;
        while (t_hit - t_lo > 1e-7) {
            if (t_hit - t_lo <= params.contact_time_resolution) {
                const auto fa = detail::footprint_at_time(track_a, t_hit);
                const auto fb = detail::footprint_at_time(track_b, t_hit);
                const auto pen = obb_penetration(fa.box, fb.box);
                if (pen && pen->depth <= params.penetration_tol) break;
            }
            const double mid = 0.5 * (t_lo + t_hit);
            const auto fa = detail::footprint_at_time(track_a, mid);
            const auto fb = detail::footprint_at_time(track_b, mid);
            if (obb_overlap(fa.box, fb.box)) {
                t_hit = mid;
            } else {
                t_lo = mid;
            }
        }
    }

    const auto fa = detail::footprint_at_time(track_a, t_hit);
    const auto fb = detail::footprint_at_time(track_b, t_hit);
    const auto pen = obb_penetration(fa.box, fb.box);
    if (!pen) return std::nullopt;  // unreachable: t_hit is on the overlap side

    ContactState contact;
    contact.t = t_hit;
    contact.normal = pen->normal;
    const auto poly = obb_overlap_polygon(fa.box, fb.box);
    contact.point = poly.empty() ? polygon_centroid({fa.box.center, fb.box.center})
                                 : polygon_centroid(poly);
    contact.a = detail::body_state(track_a, fa.sample);
    contact.b = detail::body_state(track_b, fb.sample);
    return contact;
}

struct ImpulseSolution {
    Vec2 impulse;          // J applied to body b at the contact point (a gets -J)
    double jn{0};          // normal component, >= 0
    double jt{0};          // tangential component, |jt| <= mu * jn
    bool sliding{false};   // friction cone was active
    bool separating{false};  // pre-impact relative normal velocity >= 0
    Vec2 post_velocity_a;
    Vec2 post_velocity_b;
    double post_yaw_rate_a{0};
    double post_yaw_rate_b{0};
    double delta_v_a{0};   // |J| / m_a
    double delta_v_b{0};   // |J| / m_b
};

/// Planar rigid-body impulse at the contact point.
///
/// With n the unit normal (a -> b) and u_rel the relative velocity of the
/// two contact points (b minus a), the solution enforces
///   - restitution:  n . u_rel' = -e (n . u_rel)   whenever jn > 0,
///   - stick:        t . u_rel' = 0, unless that needs |jt| > mu jn, in
///                   which case jt = -sign(t . u_rel) mu jn (sliding),
///   - no tension:   jn >= 0.
/// Linear momentum is conserved identically (a receives -J); angular
/// momentum about the contact point is conserved because the impulse acts
/// through it.
[[nodiscard]] inline ImpulseSolution solve_impulse(const ContactState& contact,
                                                   const Inertia& inertia_a,
                                                   const Inertia& inertia_b,
                                                   const CrashParams& params = {}) {
    ImpulseSolution sol;
    sol.post_velocity_a = contact.a.velocity;
    sol.post_velocity_b = contact.b.velocity;
    sol.post_yaw_rate_a = contact.a.yaw_rate;
    sol.post_yaw_rate_b = contact.b.yaw_rate;

    const Vec2 n = contact.normal;
    const Vec2 tangent = n.perp();
    const Vec2 ra = contact.point - contact.a.position;
    const Vec2 rb = contact.point - contact.b.position;

    const Vec2 u_a = contact.a.velocity + contact.a.yaw_rate * ra.perp();
    const Vec2 u_b = contact.b.velocity + contact.b.yaw_rate * rb.perp();
    const Vec2 u_rel = u_b - u_a;
    const double vn = dot(u_rel, n);
    if (vn >= 0) {
        sol.separating = true;
        return sol;
    }
    const double vt = dot(u_rel, tangent);

    // Contact-space mass matrix: K = sum_i [ I/m_i + perp(r_i) perp(r_i)^T / I_i ].
    const auto k_apply = [&](Vec2 p) {
        Vec2 out = (1.0 / inertia_a.mass + 1.0 / inertia_b.mass) * p;
        const Vec2 pa = ra.perp();
        const Vec2 pb = rb.perp();
        out += (dot(pa, p) / inertia_a.yaw_inertia) * pa;
        out += (dot(pb, p) / inertia_b.yaw_inertia) * pb;
        return out;
    };
    const Vec2 kn = k_apply(n);
    const Vec2 kt = k_apply(tangent);
    const double knn = dot(n, kn);
    const double knt = dot(n, kt);
    const double ktt = dot(tangent, kt);

    const double e = params.restitution;
    const double mu = params.friction_mu;

    // Stick solution of [knn knt; knt ktt] [jn jt] = [-(1+e)vn, -vt].
    // K is positive definite for valid inertias, so det > 0.
    const double det = knn * ktt - knt * knt;
    double jn = 0;
    double jt = 0;
    bool sliding = false;
    bool stick_solved = false;
    if (det > 1e-15) {
        jn = (-(1.0 + e) * vn * ktt + vt * knt) / det;
        jt = (-vt * knn + (1.0 + e) * vn * knt) / det;
        stick_solved = true;
    }
    if (!stick_solved || jn < 0 || std::abs(jt) > mu * jn) {
        sliding = true;
        const double s = vt > 0 ? -1.0 : 1.0;
        const double denom = knn + s * mu * knt;
        jn = denom > 1e-15 ? -(1.0 + e) * vn / denom : -(1.0 + e) * vn / knn;
        if (jn < 0) jn = 0;
        jt = s * mu * jn;
    }

    const Vec2 j = jn * n + jt * tangent;
    sol.impulse = j;
    sol.jn = jn;
    sol.jt = jt;
    sol.sliding = sliding;
    sol.post_velocity_a = contact.a.velocity - (1.0 / inertia_a.mass) * j;
    sol.post_velocity_b = contact.b.velocity + (1.0 / inertia_b.mass) * j;
    sol.post_yaw_rate_a = contact.a.yaw_rate - cross(ra, j) / inertia_a.yaw_inertia;
    sol.post_yaw_rate_b = contact.b.yaw_rate + cross(rb, j) / inertia_b.yaw_inertia;
    const double jmag = j.norm();
    sol.delta_v_a = jmag / inertia_a.mass;
    sol.delta_v_b = jmag / inertia_b.mass;
    return sol;
}

/// Vehicle-vehicle severity from the larger of the two delta-v values.
/// Boundaries belong to the more severe class: >= 6 mph is L1, >= 20 mph L0.
[[nodiscard]] inline SeverityLevel severity_vehicle(double delta_v_a, double delta_v_b,
                                                    const CrashParams& params = {}) {
    const double dv = std::max(delta_v_a, delta_v_b);
    if (dv >= params.vehicle_l0_mph * kMphToMps) return SeverityLevel::L0;
    if (dv >= params.vehicle_l1_mph * kMphToMps) return SeverityLevel::L1;
    return SeverityLevel::L2;
}

/// VRU severity from the relative resultant contact speed:
/// >= 15 mph L0, >= 5 mph L1, below that L2.
[[nodiscard]] inline SeverityLevel severity_vru(double relative_contact_speed,
                                                const CrashParams& params = {}) {
    if (relative_contact_speed >= params.vru_l0_mph * kMphToMps) return SeverityLevel::L0;
    if (relative_contact_speed >= params.vru_l1_mph * kMphToMps) return SeverityLevel::L1;
    return SeverityLevel::L2;
}

/// Severity plus the evidence behind it, for one pair of rolled-out tracks.
struct SceneOutcome {
    SeverityLevel severity{SeverityLevel::None};
    std::optional<ContactState> contact;
    double delta_v_a{0};
    double delta_v_b{0};
    double relative_contact_speed{0};  // populated for VRU contacts

    [[nodiscard]] bool collided() const { return contact.has_value(); }
};

/// Contact detection plus severity mapping for an arbitrary track pair on a
/// common grid. VRU contacts (cyclist, pedestrian) map by relative contact
/// speed and bypass the impulse solver; everything else is vehicle-vehicle.
[[nodiscard]] inline SceneOutcome assess_outcome(const AgentTrack& track_a,
                                                 const AgentTrack& track_b,
                                                 const CrashParams& params = {}) {
    SceneOutcome out;
    out.contact = detect_collision(track_a, track_b, params);
    if (!out.contact) return out;
    const bool vru = is_vru(track_a.agent_class) || is_vru(track_b.agent_class);
    if (vru) {
        out.relative_contact_speed = out.contact->relative_speed();
        out.severity = severity_vru(out.relative_contact_speed, params);
        return out;
    }
    const Inertia ia = estimate_inertia(track_a, params);
    const Inertia ib = estimate_inertia(track_b, params);
    const ImpulseSolution sol = solve_impulse(*out.contact, ia, ib, params);
    out.delta_v_a = sol.delta_v_a;
    out.delta_v_b = sol.delta_v_b;
    out.severity = severity_vehicle(sol.delta_v_a, sol.delta_v_b, params);
    return out;
}

/// Ground-truth outcome: the logged tracks run unmodified through contact
/// detection and severity mapping; Lnone when they never touch.
[[nodiscard]] inline SceneOutcome gt_outcome(const ConflictScene& scene,
                                             const CrashParams& params = {}) {
    return assess_outcome(scene.track_a, scene.track_b, params);
}

}  // namespace fracsim
