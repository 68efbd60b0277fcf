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
// Per-scene evaluation pipeline: validate, resample onto the common grid,
// classify, assign roles, find the point of reaction, evaluate the lattice
// and the GT/NRM baselines, run QA when annotated. Also the per-scene
// result JSON document used by the CLI.

#pragma once

#include <string>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fracsim/behavior.hpp"
#include "fracsim/config.hpp"
#include "fracsim/conflict.hpp"
#include "fracsim/crash.hpp"
#include "fracsim/risk.hpp"
#include "fracsim/scene.hpp"

namespace fracsim {

/// Everything the pipeline derives for one scene.
struct SceneEvaluation {
    ConflictScene scene;  // resampled onto the common grid
    ConflictType ctype{ConflictType::RearEndLeadBrake};
    Provenance ctype_provenance{Provenance::Heuristic};
    RoleAssignment roles;
    PorResult por;
    SceneOutcome gt;
    SceneOutcome nrm;
    FractionalCollisionResult fractional;
    QaVerdicts qa;
};

/// Runs the full pipeline on one scene. Throws EvalError/ParseError on
/// scenes that cannot be evaluated (never silently skips).
[[nodiscard]] inline SceneEvaluation evaluate_pipeline(const ConflictScene& input,
                                                       const BehaviorModel& model,
                                                       const EngineConfig& config) {
    const auto violations = validate_scene(input);
    if (!violations.empty()) {
        std::string msg = "invalid scene '" + input.scene_id + "'";
        for (const auto& v : violations) msg += "; " + v.str();
        throw EvalError(msg);
    }
    SceneEvaluation ev;
    ev.scene = resample_scene(input, config.dt, config.max_accel);

    const Classification cls = classify_conflict(ev.scene, config.conflict);
    if (!cls.type) {
        throw EvalError("scene '" + input.scene_id + "' unclassifiable: " + cls.reason);
    }
    ev.ctype = *cls.type;
    ev.ctype_provenance = cls.provenance;
    ev.roles = assign_roles(ev.scene, ev.ctype, config.conflict);
    ev.por = detect_por(ev.scene, ev.ctype, ev.roles, config.conflict);

    ev.gt = gt_outcome(ev.scene, config.crash);
    const AgentTrack* initiator = ev.scene.track_by_id(ev.roles.initiator_id);
    const AgentTrack* responder = ev.scene.track_by_id(ev.roles.responder_id);
    const AgentTrack nrm_track = nrm_response(*responder, ev.por.t);
    ev.nrm = assess_outcome(*initiator, nrm_track, config.crash);

    ev.fractional = evaluate_scene(ev.scene, ev.ctype, ev.roles, ev.por.t, model, config.crash);
    ev.qa = qa_scene(ev.scene, ev.fractional, ev.gt, ev.nrm);
    return ev;
}

// ── Result document ─────────────────────────────────────────────────────────

[[nodiscard]] inline nlohmann::ordered_json result_to_json(const SceneEvaluation& ev) {
    using ojson = nlohmann::ordered_json;
    ojson doc;
    doc["scene_id"] = ev.fractional.scene_id;
    doc["conflict_type"] = std::string(to_string(ev.ctype));
    doc["conflict_type_provenance"] = std::string(to_string(ev.ctype_provenance));
    doc["initiator_id"] = ev.roles.initiator_id;
    doc["responder_id"] = ev.roles.responder_id;
    doc["roles_provenance"] = std::string(to_string(ev.roles.provenance));
    doc["por_t_s"] = ev.por.t;
    doc["por_provenance"] = std::string(to_string(ev.por.provenance));
    ojson p;
    for (SeverityLevel s : kAllSeverities) {
        p[std::string(to_string(s))] = ev.fractional.p_of(s);
    }
    doc["p"] = std::move(p);
    doc["fractional_score"] = ev.fractional.fractional_score;
    doc["gt_severity"] = std::string(to_string(ev.gt.severity));
    doc["nrm_severity"] = std::string(to_string(ev.nrm.severity));
    if (ev.gt.contact) {
        doc["gt_contact_t_s"] = ev.gt.contact->t;
        doc["gt_delta_v_mps"] = ojson::array({ev.gt.delta_v_a, ev.gt.delta_v_b});
    }
    if (ev.qa.applicable) {
        ojson qa;
        qa["check1_reconstruction"] = ev.qa.check1;
        qa["check2_severity_support"] = ev.qa.check2;
        qa["check3_nrm_not_better"] = ev.qa.check3;
        qa["annotated_severity"] = std::string(to_string(ev.qa.annotated));
        qa["p_annotated"] = ev.qa.p_annotated;
        doc["qa"] = std::move(qa);
    }
    ojson cells = ojson::array();
    for (const CellOutcome& c : ev.fractional.cells) {
        ojson jc;
        if (c.cell.params) {
            jc["hrt_s"] = c.cell.params->hrt;
            jc["jerk_mps3"] = c.cell.params->jerk;
            jc["a_ss_mps2"] = c.cell.params->a_ss;
        } else {
            jc["nonreactive"] = true;
        }
        jc["weight"] = c.cell.weight;
        jc["severity"] = std::string(to_string(c.severity));
        jc["delta_v_responder_mps"] = c.delta_v_responder;
        jc["delta_v_initiator_mps"] = c.delta_v_initiator;
        if (c.relative_contact_speed > 0) {
            jc["relative_contact_speed_mps"] = c.relative_contact_speed;
        }
        if (c.contact_t) jc["contact_t_s"] = *c.contact_t;
        cells.push_back(std::move(jc));
    }
    doc["cells"] = std::move(cells);
    return doc;
}

/// The slice of a result document that corpus aggregation needs.
struct ResultSummary {
    std::string scene_id;
    FractionalCollisionResult fractional;  // p + score only; ledger not reloaded
    SeverityLevel gt{SeverityLevel::None};
    SeverityLevel nrm{SeverityLevel::None};
};

[[nodiscard]] inline ResultSummary parse_result_summary(const nlohmann::json& doc) {
    ResultSummary out;
    out.scene_id = doc.at("scene_id").get<std::string>();
    out.fractional.scene_id = out.scene_id;
    const auto& p = doc.at("p");
    for (SeverityLevel s : kAllSeverities) {
        out.fractional.p[severity_index(s)] = p.at(std::string(to_string(s))).get<double>();
    }
    out.fractional.fractional_score = doc.at("fractional_score").get<double>();
    const auto sev = [&](const char* key) {
        const auto parsed = parse_severity(doc.at(key).get<std::string>());
        if (!parsed) throw ParseError(std::string("result document: bad ") + key);
        return *parsed;
    };
    out.gt = sev("gt_severity");
    out.nrm = sev("nrm_severity");
    return out;
}

// ── Deterministic parallel map ──────────────────────────────────────────────

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is striped by
/// index, so any output written to slot i is independent of the schedule.
/// The first exception thrown by any worker is rethrown after the join.
template <typename Fn>
void parallel_for_index(std::size_t n, unsigned jobs, Fn&& fn) {
    if (n == 0) return;
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fracsim
