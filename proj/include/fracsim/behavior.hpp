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
// Responder behavior: joint reaction-parameter distributions keyed by
// (conflict type, agent class), enumeration of the weighted parameter
// lattice, and synthesis of brake-response counterfactual trajectories.
//
// Counterfactual semantics: the logged trajectory is preserved up to the
// point of reaction; the responder then holds the PoR-time speed along the
// logged path until its reaction time elapses, and finally brakes with a
// jerk-limited ramp to the steady-state deceleration. A non-reactive
// responder is the no-hold-release limit of the same model and equals
// nrm_response.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fracsim/scene.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

/// One reactive brake response: wait hrt seconds after the point of
/// reaction, ramp acceleration down at `jerk` (< 0) until it reaches the
/// steady-state deceleration `a_ss` (< 0), hold until stopped.
struct ReactionParams {
    double hrt{0};    // s, >= 0
    double jerk{0};   // m/s^3, < 0
    double a_ss{0};   // m/s^2, < 0

    friend bool operator==(const ReactionParams&, const ReactionParams&) = default;
};

/// A point of the evaluation lattice: reactive parameters with a weight, or
/// the non-reactive atom (params absent).
struct ParameterCell {
    std::optional<ReactionParams> params;
    double weight{0};

    [[nodiscard]] bool nonreactive() const { return !params.has_value(); }
};

/// Marginals (or an explicit joint table) for one (conflict type, agent
/// class) key. HRT values are point masses, by convention at bin centers
/// when the config gives bin edges.
struct BehaviorEntry {
    std::vector<double> hrt_values;
    std::vector<double> hrt_weights;
    std::vector<double> jerk_values;
    std::vector<double> jerk_weights;
    std::vector<double> a_ss_values;
    std::vector<double> a_ss_weights;
    bool joint_table{false};
    std::vector<std::pair<ReactionParams, double>> joint_rows;
    double p_nonreact{0};
};

/// Per-class steady-state deceleration capability (most negative allowed
/// a_ss). Cells braking harder than the responder class supports are
/// dropped at enumeration and the remaining weights renormalized.
struct DecelCaps {
    double passenger_vehicle = -9.0;
    double truck = -6.5;
    double motorcycle = -7.0;
    double cyclist = -3.5;
    double pedestrian = -3.0;

    [[nodiscard]] double for_class(AgentClass c) const {
        switch (c) {
            case AgentClass::PassengerVehicle: return passenger_vehicle;
            case AgentClass::Truck: return truck;
            case AgentClass::Motorcycle: return motorcycle;
            case AgentClass::Cyclist: return cyclist;
            case AgentClass::Pedestrian: return pedestrian;
        }
        return passenger_vehicle;
    }
};

class BehaviorModel {
  public:
    using Key = std::pair<ConflictType, AgentClass>;

    BehaviorEntry default_entry;
    std::map<Key, BehaviorEntry> entries;
    DecelCaps decel_caps;

    [[nodiscard]] const BehaviorEntry& entry_for(ConflictType t, AgentClass c) const {
        const auto it = entries.find({t, c});
        return it != entries.end() ? it->second : default_entry;
    }
};

// ── Validation and loading ──────────────────────────────────────────────────

namespace detail {

inline constexpr double kWeightTol = 1e-9;

inline void check_marginal(const std::vector<double>& values,
                           const std::vector<double>& weights, const char* name,
                           const std::string& where) {
    if (values.empty() || values.size() != weights.size()) {
        throw ConfigError(where + ": " + name + " values/weights size mismatch");
    }
    double sum = 0;
    for (double w : weights) {
        if (w < 0) throw ConfigError(where + ": negative weight in " + name);
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightTol) {
        throw ConfigError(where + ": marginal not normalized (" + name + ")");
    }
}

inline void validate_entry(const BehaviorEntry& e, const std::string& where) {
    if (e.p_nonreact < 0 || e.p_nonreact > 1) {
        throw ConfigError(where + ": p_nonreact must be in [0, 1]");
    }
    if (e.p_nonreact == 1.0 && e.joint_rows.empty() && e.hrt_values.empty()) {
        return;  // purely non-reactive entry needs no reactive lattice
    }
    if (e.joint_table) {
        if (e.joint_rows.empty()) throw ConfigError(where + ": empty joint table");
        double sum = 0;
        for (const auto& [p, w] : e.joint_rows) {
            if (w < 0) throw ConfigError(where + ": negative weight in joint table");
            if (p.hrt < 0 || p.jerk >= 0 || p.a_ss >= 0) {
                throw ConfigError(where + ": joint row violates hrt >= 0, jerk < 0, a_ss < 0");
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > kWeightTol) {
            throw ConfigError(where + ": marginal not normalized (joint table)");
        }
        return;
    }
    check_marginal(e.hrt_values, e.hrt_weights, "hrt", where);
    check_marginal(e.jerk_values, e.jerk_weights, "jerk", where);
    check_marginal(e.a_ss_values, e.a_ss_weights, "a_ss", where);
    for (double v : e.hrt_values) {
        if (v < 0) throw ConfigError(where + ": hrt values must be >= 0");
    }
    for (std::size_t i = 1; i < e.hrt_values.size(); ++i) {
        if (e.hrt_values[i] <= e.hrt_values[i - 1]) {
            throw ConfigError(where + ": hrt values must be increasing");
        }
    }
    for (double v : e.jerk_values) {
        if (v >= 0) throw ConfigError(where + ": jerk values must be < 0");
    }
    for (double v : e.a_ss_values) {
        if (v >= 0) throw ConfigError(where + ": a_ss values must be < 0");
    }
}

inline std::vector<double> json_doubles(const nlohmann::json& j, const char* key,
                                        const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
        throw ConfigError(where + ": missing array '" + key + "'");
    }
    std::vector<double> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number()) throw ConfigError(where + ": non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

inline BehaviorEntry parse_entry(const nlohmann::json& j, const std::string& where) {
    BehaviorEntry e;
    if (const auto it = j.find("p_nonreact"); it != j.end()) {
        e.p_nonreact = it->get<double>();
    }
    if (e.p_nonreact >= 1.0 && !j.contains("hrt_values_s") && !j.contains("hrt_bin_edges_s") &&
        !j.contains("joint_rows")) {
        return e;  // purely non-reactive entry
    }
    const std::string mode =
        j.value("joint_mode", std::string("independent"));
    if (mode == "joint") {
        e.joint_table = true;
        const auto it = j.find("joint_rows");
        if (it == j.end() || !it->is_array()) {
            throw ConfigError(where + ": joint_mode=joint requires joint_rows");
        }
        for (const auto& row : *it) {
            ReactionParams p{row.at("hrt_s").get<double>(),
                             row.at("jerk_mps3").get<double>(),
                             row.at("a_ss_mps2").get<double>()};
            e.joint_rows.emplace_back(p, row.at("weight").get<double>());
        }
    } else if (mode == "independent") {
        if (j.contains("hrt_values_s")) {
            e.hrt_values = json_doubles(j, "hrt_values_s", where);
        } else {
            // Bin edges: point mass at each bin center.
            const auto edges = json_doubles(j, "hrt_bin_edges_s", where);
            if (edges.size() < 2) throw ConfigError(where + ": need >= 2 hrt bin edges");
            for (std::size_t i = 1; i < edges.size(); ++i) {
                if (edges[i] <= edges[i - 1]) {
                    throw ConfigError(where + ": hrt bin edges not increasing");
                }
                e.hrt_values.push_back(0.5 * (edges[i - 1] + edges[i]));
            }
        }
        e.hrt_weights = json_doubles(j, "hrt_weights", where);
        e.jerk_values = json_doubles(j, "jerk_mps3", where);
        e.jerk_weights = json_doubles(j, "jerk_weights", where);
        e.a_ss_values = json_doubles(j, "a_ss_mps2", where);
        e.a_ss_weights = json_doubles(j, "a_ss_weights", where);
    } else {
        throw ConfigError(where + ": joint_mode must be 'independent' or 'joint'");
    }
    validate_entry(e, where);
    return e;
}

}  // namespace detail

/// Loads a behavior model config (JSON). A "default" entry is required;
/// per-key entries live under "entries" with conflict_type and agent_class.
[[nodiscard]] inline BehaviorModel load_behavior_model(const nlohmann::json& doc) {
    BehaviorModel model;
    if (const auto it = doc.find("class_decel_caps_mps2"); it != doc.end()) {
        const auto& caps = *it;
        const auto get = [&](const char* key, double fallback) {
            return caps.contains(key) ? caps.at(key).get<double>() : fallback;
        };
        model.decel_caps.passenger_vehicle =
            get("passenger_vehicle", model.decel_caps.passenger_vehicle);
        model.decel_caps.truck = get("truck", model.decel_caps.truck);
        model.decel_caps.motorcycle = get("motorcycle", model.decel_caps.motorcycle);
        model.decel_caps.cyclist = get("cyclist", model.decel_caps.cyclist);
        model.decel_caps.pedestrian = get("pedestrian", model.decel_caps.pedestrian);
    }
    const auto def = doc.find("default");
    if (def == doc.end()) throw ConfigError("behavior model: missing required 'default' entry");
    model.default_entry = detail::parse_entry(*def, "default");
    if (const auto it = doc.find("entries"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("behavior model: 'entries' must be an array");
        for (const auto& je : *it) {
            const std::string ct = je.at("conflict_type").get<std::string>();
            const std::string ac = je.at("agent_class").get<std::string>();
            const auto ctype = parse_conflict_type(ct);
            const auto cls = parse_agent_class(ac);
            if (!ctype || !cls) {
                throw ConfigError("behavior model entry: unknown key (" + ct + ", " + ac + ")");
            }
            model.entries[{*ctype, *cls}] =
                detail::parse_entry(je, "entries(" + ct + "," + ac + ")");
        }
    }
    return model;
}

[[nodiscard]] inline BehaviorModel load_behavior_model(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("behavior model: malformed JSON: ") + e.what());
    }
    return load_behavior_model(doc);
}

/// Shipped default model. The numbers are documented placeholders, not
/// fitted data: HRT bins 0..3 s at 0.1 s with a triangular mass peaked
/// near 0.9 s, three jerk levels, three steady-state decelerations.
[[nodiscard]] inline BehaviorModel default_behavior_model() {
    BehaviorModel model;
    BehaviorEntry e;
    const int n_bins = 30;
    std::vector<double> raw(n_bins);
    double sum = 0;
    for (int i = 0; i < n_bins; ++i) {
        // Triangular shape rising to bin 9 (0.85..0.95 s) then falling.
        const double up = static_cast<double>(i) + 1.0;
        const double down = static_cast<double>(n_bins - i);
        raw[static_cast<std::size_t>(i)] = std::min(up * 2.0, down);
        sum += raw[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n_bins; ++i) {
        e.hrt_values.push_back(0.05 + 0.1 * i);
        e.hrt_weights.push_back(raw[static_cast<std::size_t>(i)] / sum);
    }
    e.jerk_values = {-15.0, -10.0, -5.0};
    e.jerk_weights = {0.25, 0.5, 0.25};
    e.a_ss_values = {-7.0, -5.0, -3.0};
    e.a_ss_weights = {0.2, 0.5, 0.3};
    e.p_nonreact = 0.0;
    detail::validate_entry(e, "default");
    model.default_entry = std::move(e);
    return model;
}

// ── Cell enumeration ────────────────────────────────────────────────────────

/// Expands the entry for (ctype, agent_class) into weighted cells:
/// the Cartesian product of the marginals (hrt-major, then jerk, then a_ss)
/// or the rows of the joint table, scaled by (1 - p_nonreact), plus the
/// non-reactive atom. a_ss values beyond the class capability are dropped
/// and the a_ss weights renormalized.
[[nodiscard]] inline std::vector<ParameterCell> enumerate_cells(const BehaviorModel& model,
                                                                ConflictType ctype,
                                                                AgentClass agent_class) {
    const BehaviorEntry& e = model.entry_for(ctype, agent_class);
    const double cap = model.decel_caps.for_class(agent_class);
    const double reactive_mass = 1.0 - e.p_nonreact;
    std::vector<ParameterCell> cells;

    if (reactive_mass <= 0) {
        cells.push_back({std::nullopt, 1.0});
        return cells;
    }
    if (e.joint_table) {
        double kept = 0;
        for (const auto& [p, w] : e.joint_rows) {
            if (p.a_ss >= cap) kept += w;
        }
        if (kept <= 0) {
            throw ConfigError("enumerate_cells: class capability cap removes every joint row");
        }
        for (const auto& [p, w] : e.joint_rows) {
            if (p.a_ss >= cap) cells.push_back({p, reactive_mass * w / kept});
        }
    } else {
        std::vector<double> a_vals;
        std::vector<double> a_wts;
        double kept = 0;
        for (std::size_t i = 0; i < e.a_ss_values.size(); ++i) {
            if (e.a_ss_values[i] >= cap) {
                a_vals.push_back(e.a_ss_values[i]);
                a_wts.push_back(e.a_ss_weights[i]);
                kept += e.a_ss_weights[i];
            }
        }
        if (kept <= 0) {
            throw ConfigError("enumerate_cells: class capability cap removes every a_ss value");
        }
        for (double& w : a_wts) w /= kept;
        cells.reserve(e.hrt_values.size() * e.jerk_values.size() * a_vals.size() + 1);
        for (std::size_t h = 0; h < e.hrt_values.size(); ++h) {
            for (std::size_t k = 0; k < e.jerk_values.size(); ++k) {
                for (std::size_t a = 0; a < a_vals.size(); ++a) {
                    const double w = e.hrt_weights[h] * e.jerk_weights[k] * a_wts[a];
                    cells.push_back({ReactionParams{e.hrt_values[h], e.jerk_values[k], a_vals[a]},
                                     reactive_mass * w});
                }
            }
        }
    }
    if (e.p_nonreact > 0) cells.push_back({std::nullopt, e.p_nonreact});
    return cells;
}

// ── Counterfactual synthesis ────────────────────────────────────────────────

namespace detail {

/// Speed and distance of the jerk-ramp + constant-deceleration profile at
/// time dt after brake onset, starting from speed v0. Closed form; the
/// profile is a(t) = max(a_ss, jerk t) with speed clamped at zero.
struct BrakePoint {
    double speed;
    double distance;
    double accel;
};

inline BrakePoint brake_profile(double v0, double jerk, double a_ss, double dt) {
    if (dt <= 0) return {v0, 0.0, 0.0};
    const double tau1 = a_ss / jerk;  // ramp duration (both negative)
    // Does the speed reach zero during the ramp?
    const double v_ramp_end = v0 + 0.5 * jerk * tau1 * tau1;
    if (v_ramp_end <= 0) {
        const double t_stop = std::sqrt(-2.0 * v0 / jerk);
        if (dt >= t_stop) {
            return {0.0, v0 * t_stop + jerk * t_stop * t_stop * t_stop / 6.0, 0.0};
        }
        return {v0 + 0.5 * jerk * dt * dt, v0 * dt + jerk * dt * dt * dt / 6.0, jerk * dt};
    }
    if (dt <= tau1) {
        return {v0 + 0.5 * jerk * dt * dt, v0 * dt + jerk * dt * dt * dt / 6.0, jerk * dt};
    }
    const double s1 = v0 * tau1 + jerk * tau1 * tau1 * tau1 / 6.0;
    const double t2 = dt - tau1;
    const double tau2 = -v_ramp_end / a_ss;  // time to stop at constant a_ss
    if (t2 >= tau2) {
        return {0.0, s1 + v_ramp_end * v_ramp_end / (-2.0 * a_ss), 0.0};
    }
    return {v_ramp_end + a_ss * t2, s1 + v_ramp_end * t2 + 0.5 * a_ss * t2 * t2, a_ss};
}

/// Arc length accumulated along a track's own polyline at time t
/// (linear between samples, consistent with position interpolation).
inline double arc_length_at(const AgentTrack& tr, double t) {
    double s = 0;
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
        const Vec2 d = {tr.samples[i].x - tr.samples[i - 1].x,
                        tr.samples[i].y - tr.samples[i - 1].y};
        const double seg = d.norm();
        if (t <= tr.samples[i].t) {
            const double dt = tr.samples[i].t - tr.samples[i - 1].t;
            const double u = dt > 0 ? std::clamp((t - tr.samples[i - 1].t) / dt, 0.0, 1.0) : 0.0;
            return s + u * seg;
        }
        s += seg;
    }
    return s;
}

struct ResponseProfile {
    double hold_end;  // reaction onset time (por + hrt); +inf for NRM
    std::optional<ReactionParams> params;
};

inline AgentTrack roll_out_response(const AgentTrack& responder, double por_t,
                                    const ResponseProfile& profile) {
    AgentTrack out = responder;
    if (por_t >= responder.end_time()) return out;  // reaction never begins

    const PathPolyline path = responder.path();
    const TrajectorySample at_por = responder.state_at(por_t);
    const double v_por = at_por.speed;
    const double s_por = arc_length_at(responder, por_t);

    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const double t = out.samples[i].t;
        if (t <= por_t) continue;  // logged prefix preserved verbatim
        double speed;
        double dist;
        double accel;
        if (t <= profile.hold_end || !profile.params) {
            speed = v_por;
            dist = v_por * (t - por_t);
            accel = 0.0;
        } else {
            const double hold = profile.hold_end - por_t;
            const BrakePoint bp = brake_profile(v_por, profile.params->jerk,
                                                profile.params->a_ss, t - profile.hold_end);
            speed = bp.speed;
            dist = v_por * hold + bp.distance;
            accel = bp.accel;
        }
        const double s = s_por + dist;
        const Vec2 p = path.point_at(s);
        TrajectorySample& smp = out.samples[i];
        smp.x = p.x;
        smp.y = p.y;
        smp.heading = path.heading_at(s);
        smp.speed = speed;
        smp.accel_long = accel;
    }
    return out;
}

}  // namespace detail

/// No-reaction baseline: the logged trajectory up to por_t, then constant
/// speed (frozen at the PoR value) along the logged path, extended along
/// the final tangent once the polyline is exhausted.
[[nodiscard]] inline AgentTrack nrm_response(const AgentTrack& responder, double por_t) {
    return detail::roll_out_response(
        responder, por_t,
        {std::numeric_limits<double>::infinity(), std::nullopt});
}

/// Brake-response counterfactual. The logged trajectory is preserved up to
/// por_t; the responder holds the PoR-time speed until por_t + hrt, then
/// ramps its longitudinal acceleration from 0 at rate `jerk` down to a_ss
/// and holds it until stopped (speed clamped at 0; a stopped agent keeps
/// its position). The agent tracks the logged path polyline by arc length;
/// heading follows the path tangent. When por_t + hrt lies beyond the
/// track end the reaction never begins and the result is the NRM rollout.
[[nodiscard]] inline AgentTrack synthesize_response(const AgentTrack& responder, double por_t,
                                                    const ReactionParams& params) {
    if (params.hrt < 0 || params.jerk >= 0 || params.a_ss >= 0) {
        throw EvalError("synthesize_response: params must satisfy hrt >= 0, jerk < 0, a_ss < 0");
    }
    return detail::roll_out_response(responder, por_t, {por_t + params.hrt, params});
}

}  // namespace fracsim
