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
// Synthetic conflict-scene generation for self-verification, plus the
// aggregate-match statistical harness. Four families are supported:
// rear_end_lead_brake, crossing_straight, cut_in, vru_crossing. Every
// emitted scene is fully annotated (conflict type, roles, construction-time
// PoR, and a GT severity computed by running the sampled GT responder
// through the engine's own crash mechanics — never asserted analytically),
// deterministic under the seed, and rejected/resampled until it
//   - validates and classifies heuristically as its family,
//   - assigns the intended initiator heuristically,
//   - fires the PoR trigger,
//   - collides under the no-reaction baseline, and
//   - is avoidable by a prompt reference brake response
// so that the corpus always carries genuine, resolvable conflicts.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fracsim/behavior.hpp"
#include "fracsim/config.hpp"
#include "fracsim/conflict.hpp"
#include "fracsim/crash.hpp"
#include "fracsim/pipeline.hpp"
#include "fracsim/risk.hpp"
#include "fracsim/scene.hpp"

namespace fracsim {

enum class GtMode { FromModel, FixedParams, NonReactive };

[[nodiscard]] inline std::string_view to_string(GtMode m) {
    switch (m) {
        case GtMode::FromModel: return "from-model";
        case GtMode::FixedParams: return "fixed-params";
        case GtMode::NonReactive: return "nonreactive";
    }
    return "from-model";
}

[[nodiscard]] inline std::optional<GtMode> parse_gt_mode(std::string_view s) {
    if (s == "from-model") return GtMode::FromModel;
    if (s == "fixed-params") return GtMode::FixedParams;
    if (s == "nonreactive") return GtMode::NonReactive;
    return std::nullopt;
}

struct Range {
    double lo{0};
    double hi{0};

    [[nodiscard]] double sample(std::mt19937_64& rng) const {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }
};

/// Kinematic ranges for one scenario family. Defaults per family come from
/// `defaults_for`; every range must be non-degenerate (lo <= hi).
struct SyntheticScenarioSpec {
    ConflictType family{ConflictType::RearEndLeadBrake};
    GtMode gt_mode{GtMode::FromModel};
    ReactionParams fixed_params{1.0, -10.0, -5.0};

    // Shared vehicle footprint ranges.
    Range veh_length{4.3, 5.0};
    Range veh_width{1.75, 1.95};

    // rear_end_lead_brake: lead brakes from v0 down to ratio*v0.
    Range rear_initial_speed{12.0, 25.0};
    Range rear_lead_speed_ratio{0.25, 0.5};
    Range rear_lead_decel{-5.0, -2.5};
    Range rear_brake_onset{0.8, 1.5};
    Range rear_gap_margin{2.0, 12.0};

    // crossing_straight / vru_crossing: perpendicular paths meeting at the
    // origin; the initiator arrives slightly before the responder.
    Range cross_responder_speed{7.0, 12.0};
    Range cross_initiator_speed{7.0, 13.0};
    Range cross_meet_time{3.0, 5.0};
    Range cross_arrival_lead{0.1, 0.4};
    Range cross_por_lookahead{2.2, 3.2};
    Range vru_cyclist_speed{2.5, 5.0};
    Range vru_pedestrian_speed{1.0, 2.0};

    // cut_in: slower initiator changes lanes ahead of the responder.
    Range cutin_responder_speed{12.0, 20.0};
    Range cutin_speed_delta{3.0, 7.0};
    Range cutin_gap{6.0, 18.0};
    Range cutin_lane_offset{3.2, 3.8};
    Range cutin_change_start{0.8, 1.5};
    Range cutin_change_duration{1.6, 2.6};

    /// Prompt reference response used by the avoidability check.
    ReactionParams reference_cell{0.1, -10.0, -5.0};
    int max_attempts{1000};

    [[nodiscard]] static SyntheticScenarioSpec defaults_for(ConflictType family) {
        SyntheticScenarioSpec spec;
        spec.family = family;
        return spec;
    }
};

namespace detail {

inline void validate_spec(const SyntheticScenarioSpec& spec) {
    const auto check = [](const Range& r, const char* name) {
        if (!(r.lo <= r.hi)) {
            throw ConfigError(std::string("scenario spec: degenerate range ") + name);
        }
    };
    check(spec.veh_length, "veh_length");
    check(spec.veh_width, "veh_width");
    check(spec.rear_initial_speed, "rear_initial_speed");
    check(spec.rear_lead_speed_ratio, "rear_lead_speed_ratio");
    check(spec.rear_lead_decel, "rear_lead_decel");
    check(spec.rear_brake_onset, "rear_brake_onset");
    check(spec.rear_gap_margin, "rear_gap_margin");
    check(spec.cross_responder_speed, "cross_responder_speed");
    check(spec.cross_initiator_speed, "cross_initiator_speed");
    check(spec.cross_meet_time, "cross_meet_time");
    check(spec.cross_arrival_lead, "cross_arrival_lead");
    check(spec.cross_por_lookahead, "cross_por_lookahead");
    check(spec.cutin_responder_speed, "cutin_responder_speed");
    check(spec.cutin_speed_delta, "cutin_speed_delta");
    check(spec.cutin_gap, "cutin_gap");
    switch (spec.family) {
        case ConflictType::RearEndLeadBrake:
        case ConflictType::CrossingStraight:
        case ConflictType::CutIn:
        case ConflictType::VruCrossing: break;
        default:
            throw ConfigError("scenario spec: unsupported family " +
                              std::string(to_string(spec.family)));
    }
}

/// Straight track along `heading` from `start`, with speed profile v(t)
/// (piecewise linear in t); positions use the exact trapezoid integral.
template <typename SpeedFn>
AgentTrack straight_track(std::string id, AgentClass cls, double length, double width,
                          Vec2 start, double heading, double t_end, double dt,
                          SpeedFn&& speed) {
    AgentTrack tr;
    tr.agent_id = std::move(id);
    tr.agent_class = cls;
    tr.length = length;
    tr.width = width;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    const Vec2 dir = unit_from_angle(heading);
    tr.samples.reserve(n + 1);
    double s = 0;
    double v_prev = std::max(0.0, speed(0.0));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double v = std::max(0.0, speed(t));
        if (i > 0) s += 0.5 * (v_prev + v) * dt;
        tr.samples.push_back({t, start.x + s * dir.x, start.y + s * dir.y,
                              wrap_angle(heading), v, std::nullopt});
        v_prev = v;
    }
    derive_accel(tr.samples, kDefaultMaxAccel);
    return tr;
}

struct Candidate {
    AgentTrack initiator;
    AgentTrack responder;      // nominal, non-reacting
    std::optional<double> por_override;  // construction-time PoR when the
                                         // heuristic trigger fires too late
};

inline Candidate build_rear_end(const SyntheticScenarioSpec& spec, std::mt19937_64& rng,
                                double dt) {
    const double v0 = spec.rear_initial_speed.sample(rng);
    const double v1 = spec.rear_lead_speed_ratio.sample(rng) * v0;
    const double a_l = spec.rear_lead_decel.sample(rng);
    const double t_b = spec.rear_brake_onset.sample(rng);
    const double margin = spec.rear_gap_margin.sample(rng);
    const double ramp = (v1 - v0) / a_l;
    const double ramp_closure = 0.5 * (v0 - v1) * ramp;
    const double gap0 = ramp_closure + margin;
    const double l_lead = spec.veh_length.sample(rng);
    const double w_lead = spec.veh_width.sample(rng);
    const double l_resp = spec.veh_length.sample(rng);
    const double w_resp = spec.veh_width.sample(rng);
    const double t_end = t_b + ramp + margin / (v0 - v1) + 9.0;

    Candidate c;
    c.initiator = straight_track(
        "lead", AgentClass::PassengerVehicle, l_lead, w_lead,
        {gap0 + 0.5 * (l_lead + l_resp), 0.0}, 0.0, t_end, dt,
        [=](double t) { return t < t_b ? v0 : std::max(v1, v0 + a_l * (t - t_b)); });
    c.responder = straight_track("follower", AgentClass::PassengerVehicle, l_resp, w_resp,
                                 {0.0, 0.0}, 0.0, t_end, dt, [=](double) { return v0; });
    return c;
}

inline Candidate build_crossing(const SyntheticScenarioSpec& spec, std::mt19937_64& rng,
                                double dt, AgentClass initiator_class) {
    const double v_r = spec.cross_responder_speed.sample(rng);
    double v_i;
    double l_i;
    double w_i;
    switch (initiator_class) {
        case AgentClass::Cyclist:
            v_i = spec.vru_cyclist_speed.sample(rng);
            l_i = 1.8;
            w_i = 0.6;
            break;
        case AgentClass::Pedestrian:
            v_i = spec.vru_pedestrian_speed.sample(rng);
            l_i = 0.6;
            w_i = 0.6;
            break;
        default:
            v_i = spec.cross_initiator_speed.sample(rng);
            l_i = spec.veh_length.sample(rng);
            w_i = spec.veh_width.sample(rng);
            break;
    }
    const double t_meet = spec.cross_meet_time.sample(rng);
    const double t_arr = t_meet - spec.cross_arrival_lead.sample(rng);
    const double lookahead = spec.cross_por_lookahead.sample(rng);
    const double l_r = spec.veh_length.sample(rng);
    const double w_r = spec.veh_width.sample(rng);
    const double t_end = t_meet + 8.0;

    Candidate c;
    c.initiator = straight_track("crosser", initiator_class, l_i, w_i,
                                 {0.0, -v_i * t_arr}, kPi / 2.0, t_end, dt,
                                 [=](double) { return v_i; });
    c.responder = straight_track("through", AgentClass::PassengerVehicle, l_r, w_r,
                                 {-v_r * t_meet, 0.0}, 0.0, t_end, dt,
                                 [=](double) { return v_r; });
    c.por_override = std::max(0.2, t_arr - lookahead);
    return c;
}

inline Candidate build_cut_in(const SyntheticScenarioSpec& spec, std::mt19937_64& rng,
                              double dt) {
    const double v_r = spec.cutin_responder_speed.sample(rng);
    const double dv = spec.cutin_speed_delta.sample(rng);
    const double v_i = v_r - dv;
    const double gap0 = spec.cutin_gap.sample(rng);
    const double lane = spec.cutin_lane_offset.sample(rng);
    const double t_lc = spec.cutin_change_start.sample(rng);
    const double dur = spec.cutin_change_duration.sample(rng);
    const double l_i = spec.veh_length.sample(rng);
    const double w_i = spec.veh_width.sample(rng);
    const double l_r = spec.veh_length.sample(rng);
    const double w_r = spec.veh_width.sample(rng);
    const double t_end = t_lc + dur + gap0 / dv + 10.0;
    // The responder closes dv * t before coming within gap0 of the lane
    // change's end point.
    const double x0_i = 0.5 * (l_i + l_r) + gap0 + dv * (t_lc + dur);

    AgentTrack init;
    init.agent_id = "cutter";
    init.agent_class = AgentClass::PassengerVehicle;
    init.length = l_i;
    init.width = w_i;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    init.samples.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * dt;
        double y;
        double vy;
        if (t <= t_lc) {
            y = lane;
            vy = 0;
        } else if (t >= t_lc + dur) {
            y = 0;
            vy = 0;
        } else {
            const double u = (t - t_lc) / dur;
            const double q = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));  // quintic step
            const double dq = 30.0 * u * u * (1.0 - u) * (1.0 - u) / dur;
            y = lane * (1.0 - q);
            vy = -lane * dq;
        }
        const double x = x0_i + v_i * t;
        init.samples.push_back({t, x, y, wrap_angle(std::atan2(vy, v_i)),
                                std::hypot(v_i, vy), std::nullopt});
    }
    derive_accel(init.samples, kDefaultMaxAccel);

    Candidate c;
    c.initiator = std::move(init);
    c.responder = straight_track("keeper", AgentClass::PassengerVehicle, l_r, w_r,
                                 {0.0, 0.0}, 0.0, t_end, dt, [=](double) { return v_r; });
    return c;
}

}  // namespace detail

/// Generates one fully annotated scene. Deterministic for a given rng
/// state; throws EvalError after max_attempts rejections.
[[nodiscard]] inline ConflictScene generate_scene(const SyntheticScenarioSpec& spec,
                                                  const BehaviorModel& model,
                                                  const EngineConfig& config,
                                                  std::mt19937_64& rng,
                                                  const std::string& scene_id) {
    detail::validate_spec(spec);
    const bool trace = std::getenv("FRACSIM_TRACE_GENERATE") != nullptr;
    std::string last_reason = "no attempt made";
    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
        if (trace && attempt > 0) {
            std::fprintf(stderr, "[generate %s] attempt %d rejected: %s\n", scene_id.c_str(),
                         attempt, last_reason.c_str());
        }
        detail::Candidate cand;
        switch (spec.family) {
            case ConflictType::RearEndLeadBrake:
                cand = detail::build_rear_end(spec, rng, config.dt);
                break;
            case ConflictType::CrossingStraight:
                cand = detail::build_crossing(spec, rng, config.dt,
                                              AgentClass::PassengerVehicle);
                break;
            case ConflictType::VruCrossing: {
                const AgentClass cls = (rng() & 1u) ? AgentClass::Cyclist
                                                    : AgentClass::Pedestrian;
                cand = detail::build_crossing(spec, rng, config.dt, cls);
                break;
            }
            case ConflictType::CutIn:
                cand = detail::build_cut_in(spec, rng, config.dt);
                break;
            default:
                throw ConfigError("generate_scene: unsupported family");
        }

        ConflictScene nominal;
        nominal.scene_id = scene_id;
        nominal.track_a = cand.initiator;
        nominal.track_b = cand.responder;
        if (!validate_scene(nominal).empty()) {
            last_reason = "candidate failed validation";
            continue;
        }

        const Classification cls = classify_conflict(nominal, config.conflict);
        if (!cls.type || *cls.type != spec.family) {
            last_reason = "heuristic classification mismatch: " +
                          (cls.type ? std::string(to_string(*cls.type)) : cls.reason);
            continue;
        }
        RoleAssignment roles;
        try {
            roles = assign_roles(nominal, spec.family, config.conflict);
        } catch (const EvalError& e) {
            last_reason = e.what();
            continue;
        }
        if (roles.initiator_id != cand.initiator.agent_id) {
            last_reason = "heuristic roles inverted";
            continue;
        }
        double por_t;
        try {
            por_t = detect_por(nominal, spec.family, roles, config.conflict).t;
        } catch (const EvalError& e) {
            last_reason = e.what();
            continue;
        }
        if (cand.por_override) por_t = *cand.por_override;

        // The conflict must propagate without a reaction (the nominal
        // responder holds speed, so the NRM outcome is the nominal outcome)
        // and must be avoidable by the prompt reference response.
        const SceneOutcome nominal_outcome =
            assess_outcome(cand.initiator, cand.responder, config.crash);
        if (!nominal_outcome.collided()) {
            last_reason = "no-reaction rollout does not collide";
            continue;
        }
        const AgentTrack reference =
            synthesize_response(cand.responder, por_t, spec.reference_cell);
        if (assess_outcome(cand.initiator, reference, config.crash).collided()) {
            last_reason = "reference response cannot avoid the collision";
            continue;
        }

        // Ground-truth responder.
        AgentTrack logged = cand.responder;
        std::optional<ReactionParams> gt_params;
        switch (spec.gt_mode) {
            case GtMode::NonReactive: break;
            case GtMode::FixedParams: gt_params = spec.fixed_params; break;
            case GtMode::FromModel: {
                const auto cells =
                    enumerate_cells(model, spec.family, cand.responder.agent_class);
                double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                const ParameterCell* drawn = &cells.back();
                for (const auto& cell : cells) {
                    u -= cell.weight;
                    if (u <= 0) {
                        drawn = &cell;
                        break;
                    }
                }
                gt_params = drawn->params;  // nullopt for the non-reactive atom
                break;
            }
        }
        if (gt_params) {
            logged = synthesize_response(cand.responder, por_t, *gt_params);
            detail::derive_accel(logged.samples, config.max_accel);
        }

        ConflictScene scene;
        scene.scene_id = scene_id;
        scene.track_a = cand.initiator;
        scene.track_b = std::move(logged);
        scene.annotations.conflict_type = spec.family;
        scene.annotations.initiator_id = scene.track_a.agent_id;
        scene.annotations.responder_id = scene.track_b.agent_id;
        scene.annotations.por_t = por_t;
        scene.annotations.gt_severity = gt_outcome(scene, config.crash).severity;
        if (!validate_scene(scene).empty()) {
            last_reason = "final scene failed validation";
            continue;
        }
        return scene;
    }
    throw EvalError("generate_scene: gave up after " + std::to_string(spec.max_attempts) +
                    " attempts (" + last_reason + "); spec ranges cannot produce a conflict");
}

/// Derives one independent RNG stream per scene index so generation is
/// order- and schedule-independent.
[[nodiscard]] inline std::mt19937_64 scene_rng(std::uint64_t seed, std::size_t index) {
    return std::mt19937_64(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1)));
}

[[nodiscard]] inline std::vector<ConflictScene> generate_corpus(
    const std::vector<std::pair<SyntheticScenarioSpec, std::size_t>>& blocks,
    const BehaviorModel& model, const EngineConfig& config, std::uint64_t seed) {
    std::vector<ConflictScene> scenes;
    std::size_t index = 0;
    for (const auto& [spec, count] : blocks) {
        for (std::size_t k = 0; k < count; ++k, ++index) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%05zu", to_string(spec.family).data(), index);
            auto rng = scene_rng(seed, index);
            scenes.push_back(generate_scene(spec, model, config, rng, name));
        }
    }
    return scenes;
}

// ── Aggregate-match harness ─────────────────────────────────────────────────

/// Family proportions for generated verification corpora.
struct FamilyMix {
    double rear_end = 0.4;
    double crossing = 0.2;
    double cut_in = 0.2;
    double vru = 0.2;
};

struct AggregateMatchResult {
    double fractional_total{0};
    double gt_total{0};
    double nrm_total{0};
    std::vector<double> scene_scores;  // per-scene fractional score (the run ledger)
    std::vector<SceneEvaluation> evaluations;
    CorpusReport report;

    /// sqrt(sum p_i (1 - p_i)) from the run's own ledger: the standard
    /// deviation of the GT collision count if each scene were an
    /// independent Bernoulli draw at its fractional score.
    [[nodiscard]] double score_stddev() const {
        double var = 0;
        for (double p : scene_scores) var += p * (1.0 - p);
        return std::sqrt(var);
    }
};

/// Generates n_scenes with GT responders sampled from `model`, evaluates
/// them with the same model, and returns the three framework totals.
[[nodiscard]] inline AggregateMatchResult aggregate_match_test(
    const BehaviorModel& model, const EngineConfig& config, std::uint64_t seed,
    std::size_t n_scenes, const FamilyMix& mix = {}, GtMode gt_mode = GtMode::FromModel,
    std::optional<ReactionParams> fixed_params = std::nullopt) {
    const auto block = [&](ConflictType family, double fraction) {
        SyntheticScenarioSpec spec = SyntheticScenarioSpec::defaults_for(family);
        spec.gt_mode = gt_mode;
        if (fixed_params) spec.fixed_params = *fixed_params;
        return std::make_pair(spec, static_cast<std::size_t>(
                                        std::llround(fraction * static_cast<double>(n_scenes))));
    };
    std::vector<std::pair<SyntheticScenarioSpec, std::size_t>> blocks = {
        block(ConflictType::RearEndLeadBrake, mix.rear_end),
        block(ConflictType::CrossingStraight, mix.crossing),
        block(ConflictType::CutIn, mix.cut_in),
        block(ConflictType::VruCrossing, mix.vru),
    };
    std::size_t planned = 0;
    for (const auto& [spec, count] : blocks) planned += count;
    if (planned < n_scenes) blocks.front().second += n_scenes - planned;

    AggregateMatchResult out;
    const auto scenes = generate_corpus(blocks, model, config, seed);
    out.evaluations.resize(scenes.size());
    parallel_for_index(scenes.size(), config.jobs, [&](std::size_t i) {
        out.evaluations[i] = evaluate_pipeline(scenes[i], model, config);
    });

    std::map<std::string, FractionalCollisionResult> results;
    std::map<std::string, SeverityLevel> gts;
    std::map<std::string, SeverityLevel> nrms;
    out.scene_scores.reserve(out.evaluations.size());
    for (const auto& ev : out.evaluations) {
        out.scene_scores.push_back(ev.fractional.fractional_score);
        out.fractional_total += ev.fractional.fractional_score;
        out.gt_total += is_collision(ev.gt.severity) ? 1.0 : 0.0;
        out.nrm_total += is_collision(ev.nrm.severity) ? 1.0 : 0.0;
        results[ev.fractional.scene_id] = ev.fractional;
        gts[ev.fractional.scene_id] = ev.gt.severity;
        nrms[ev.fractional.scene_id] = ev.nrm.severity;
    }
    if (!results.empty()) out.report = aggregate_corpus(results, gts, nrms);
    return out;
}

}  // namespace fracsim
