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
// Risk aggregation: evaluation of a scene across the behavior-model
// lattice into a fractional-collision distribution, the three per-scene QA
// checks, corpus aggregation into the framework x severity report, and
// agent-initiated relative risk.

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracsim/behavior.hpp"
#include "fracsim/conflict.hpp"
#include "fracsim/crash.hpp"
#include "fracsim/scene.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

[[nodiscard]] inline constexpr std::size_t severity_index(SeverityLevel s) {
    switch (s) {
        case SeverityLevel::L0: return 0;
        case SeverityLevel::L1: return 1;
        case SeverityLevel::L2: return 2;
        case SeverityLevel::None: return 3;
    }
    return 3;
}

/// Audit record for one evaluated lattice cell.
struct CellOutcome {
    ParameterCell cell;
    SeverityLevel severity{SeverityLevel::None};
    double delta_v_responder{0};
    double delta_v_initiator{0};
    double relative_contact_speed{0};
    std::optional<double> contact_t;
};

/// Probability mass over severity levels for one scene, with the per-cell
/// ledger retained for audit. fractional_score = p(L0)+p(L1)+p(L2).
struct FractionalCollisionResult {
    std::string scene_id;
    std::array<double, 4> p{};  // indexed by severity_index
    double fractional_score{0};
    std::vector<CellOutcome> cells;

    [[nodiscard]] double p_of(SeverityLevel s) const { return p[severity_index(s)]; }

    /// Most severe level carried with positive probability.
    [[nodiscard]] SeverityLevel worst_support() const {
        for (SeverityLevel s : {SeverityLevel::L0, SeverityLevel::L1, SeverityLevel::L2}) {
            if (p[severity_index(s)] > 0) return s;
        }
        return SeverityLevel::None;
    }
};

/// Rolls the responder through every parameter cell (the non-reactive atom
/// uses the NRM rollout), replays the initiator verbatim, and accumulates
/// severity mass by cell weight. Never skips a cell.
[[nodiscard]] inline FractionalCollisionResult evaluate_scene(
    const ConflictScene& scene, ConflictType ctype, const RoleAssignment& roles, double por_t,
    const BehaviorModel& model, const CrashParams& crash = {}) {
    const AgentTrack* initiator = scene.track_by_id(roles.initiator_id);
    const AgentTrack* responder = scene.track_by_id(roles.responder_id);
    if (!initiator || !responder) throw EvalError("evaluate_scene: role ids do not match tracks");

    FractionalCollisionResult result;
    result.scene_id = scene.scene_id;
    const auto cells = enumerate_cells(model, ctype, responder->agent_class);
    result.cells.reserve(cells.size());
    for (const ParameterCell& cell : cells) {
        const AgentTrack counterfactual =
            cell.nonreactive() ? nrm_response(*responder, por_t)
                               : synthesize_response(*responder, por_t, *cell.params);
        const SceneOutcome outcome = assess_outcome(*initiator, counterfactual, crash);
        CellOutcome record;
        record.cell = cell;
        record.severity = outcome.severity;
        record.delta_v_initiator = outcome.delta_v_a;
        record.delta_v_responder = outcome.delta_v_b;
        record.relative_contact_speed = outcome.relative_contact_speed;
        if (outcome.contact) record.contact_t = outcome.contact->t;
        result.cells.push_back(record);
        result.p[severity_index(outcome.severity)] += cell.weight;
    }
    result.fractional_score = result.p[0] + result.p[1] + result.p[2];
    return result;
}

// ── Scene QA ────────────────────────────────────────────────────────────────

/// The three per-scene data-quality checks. Not applicable without a
/// gt_severity annotation.
struct QaVerdicts {
    bool applicable{false};
    bool check1{false};  // reconstructed collision status matches annotation
    bool check2{false};  // p(annotated severity) > 0
    bool check3{false};  // NRM severity >= annotated severity
    SeverityLevel annotated{SeverityLevel::None};
    SeverityLevel reconstructed{SeverityLevel::None};
    SeverityLevel nrm{SeverityLevel::None};
    double p_annotated{0};
    std::string evidence;

    [[nodiscard]] bool all_pass() const { return check1 && check2 && check3; }
};

[[nodiscard]] inline QaVerdicts qa_scene(const ConflictScene& scene,
                                         const FractionalCollisionResult& result,
                                         const SceneOutcome& gt, const SceneOutcome& nrm) {
    QaVerdicts v;
    if (!scene.annotations.gt_severity) return v;
    v.applicable = true;
    v.annotated = *scene.annotations.gt_severity;
    v.reconstructed = gt.severity;
    v.nrm = nrm.severity;
    v.check1 = is_collision(gt.severity) == is_collision(v.annotated);
    v.p_annotated = result.p_of(v.annotated);
    v.check2 = v.p_annotated > 0;  // strict, no epsilon: weights are exact sums
    v.check3 = severity_badness(nrm.severity) >= severity_badness(v.annotated);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "gt_delta_v=(%.3f,%.3f) nrm_delta_v=(%.3f,%.3f) gt_contact_t=%s",
                  gt.delta_v_a, gt.delta_v_b, nrm.delta_v_a, nrm.delta_v_b,
                  gt.contact ? std::to_string(gt.contact->t).c_str() : "none");
    v.evidence = buf;
    return v;
}

// ── Corpus aggregation ──────────────────────────────────────────────────────

enum class Framework { Fractional, GroundTruth, Nrm };
enum class GtSplit { Yes, No, All };

inline constexpr std::array<Framework, 3> kAllFrameworks = {
    Framework::Fractional, Framework::GroundTruth, Framework::Nrm};
inline constexpr std::array<GtSplit, 3> kAllSplits = {GtSplit::Yes, GtSplit::No, GtSplit::All};

[[nodiscard]] inline std::string_view to_string(Framework f) {
    switch (f) {
        case Framework::Fractional: return "fractional";
        case Framework::GroundTruth: return "ground_truth";
        case Framework::Nrm: return "nrm";
    }
    return "fractional";
}

[[nodiscard]] inline std::string_view to_string(GtSplit s) {
    switch (s) {
        case GtSplit::Yes: return "yes";
        case GtSplit::No: return "no";
        case GtSplit::All: return "all";
    }
    return "all";
}

/// Framework x gt-collision-split x severity table. Cell values are sums
/// over scenes; the Total column is L0+L1+L2 (collision mass only). GT and
/// NRM rows hold integral counts, fractional rows hold real mass.
struct CorpusReport {
    // [framework][split][column]; columns L0, L1, L2, NC, Total.
    std::array<std::array<std::array<double, 5>, 3>, 3> values{};

    [[nodiscard]] double at(Framework f, GtSplit s, std::size_t col) const {
        return values[static_cast<std::size_t>(f)][static_cast<std::size_t>(s)][col];
    }
    double& at(Framework f, GtSplit s, std::size_t col) {
        return values[static_cast<std::size_t>(f)][static_cast<std::size_t>(s)][col];
    }

    [[nodiscard]] double total(Framework f) const { return at(f, GtSplit::All, 4); }

    /// RFC-4180 CSV in the fixed report layout.
    [[nodiscard]] std::string to_csv() const {
        std::string out = "framework,gt_collision,L0,L1,L2,NC,Total\n";
        char buf[64];
        for (Framework f : kAllFrameworks) {
            for (GtSplit s : kAllSplits) {
                out += std::string(to_string(f)) + "," + std::string(to_string(s));
                for (std::size_t col = 0; col < 5; ++col) {
                    const double v = at(f, s, col);
                    if (f == Framework::Fractional) {
                        std::snprintf(buf, sizeof buf, ",%.6f", v);
                    } else {
                        std::snprintf(buf, sizeof buf, ",%.0f", v);
                    }
                    out += buf;
                }
                out += "\n";
            }
        }
        return out;
    }
};

/// Sums per-scene fractional mass and counts discrete GT/NRM outcomes,
/// split by whether the scene's ground truth was a collision. The three
/// collections must cover exactly the same scene ids.
[[nodiscard]] inline CorpusReport aggregate_corpus(
    const std::map<std::string, FractionalCollisionResult>& results,
    const std::map<std::string, SeverityLevel>& gt_outcomes,
    const std::map<std::string, SeverityLevel>& nrm_outcomes) {
    if (results.size() != gt_outcomes.size() || results.size() != nrm_outcomes.size()) {
        throw EvalError("aggregate_corpus: scene id sets differ in size");
    }
    CorpusReport report;
    for (const auto& [id, result] : results) {
        const auto gt_it = gt_outcomes.find(id);
        const auto nrm_it = nrm_outcomes.find(id);
        if (gt_it == gt_outcomes.end() || nrm_it == nrm_outcomes.end()) {
            throw EvalError("aggregate_corpus: scene id mismatch at '" + id + "'");
        }
        const GtSplit split = is_collision(gt_it->second) ? GtSplit::Yes : GtSplit::No;
        const auto add = [&](Framework f, GtSplit s) {
            for (SeverityLevel lvl : kAllSeverities) {
                const std::size_t col = severity_index(lvl);
                double v = 0;
                switch (f) {
                    case Framework::Fractional: v = result.p_of(lvl); break;
                    case Framework::GroundTruth: v = gt_it->second == lvl ? 1.0 : 0.0; break;
                    case Framework::Nrm: v = nrm_it->second == lvl ? 1.0 : 0.0; break;
                }
                report.at(f, s, col) += v;
                if (lvl != SeverityLevel::None) report.at(f, s, 4) += v;
            }
        };
        for (Framework f : kAllFrameworks) {
            add(f, split);
            add(f, GtSplit::All);
        }
    }
    return report;
}

// ── Relative risk ───────────────────────────────────────────────────────────

/// Point-mass ADS outcome against the modeled-human severity pmf.
struct RelativeRisk {
    SeverityLevel ads_severity{SeverityLevel::None};
    std::array<double, 4> human_p{};
    std::array<double, 4> diff{};  // ADS point mass minus human pmf, per level
    double p_human_strictly_better{0};
    double p_human_strictly_worse{0};
    double p_tie{0};
};

[[nodiscard]] inline RelativeRisk relative_risk(const FractionalCollisionResult& human,
                                                SeverityLevel ads_severity) {
    RelativeRisk rr;
    rr.ads_severity = ads_severity;
    rr.human_p = human.p;
    const int ads_badness = severity_badness(ads_severity);
    for (SeverityLevel lvl : kAllSeverities) {
        const std::size_t i = severity_index(lvl);
        rr.diff[i] = (lvl == ads_severity ? 1.0 : 0.0) - human.p[i];
        const int badness = severity_badness(lvl);
        if (badness < ads_badness) {
            rr.p_human_strictly_better += human.p[i];
        } else if (badness > ads_badness) {
            rr.p_human_strictly_worse += human.p[i];
        } else {
            rr.p_tie += human.p[i];
        }
    }
    return rr;
}

}  // namespace fracsim
