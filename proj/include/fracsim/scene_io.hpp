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
// Scene document ingestion and emission. The wire format is UTF-8 JSON:
//
//   {
//     "scene_id": "...",
//     "tracks": [ { "agent_id": "...", "agent_class": "passenger_vehicle",
//                   "length_m": 4.8, "width_m": 1.9, "mass_kg": 1600,
//                   "samples": [[t_s, x_m, y_m, heading_rad, speed_mps], ...] },
//                 { ... exactly two tracks ... } ],
//     "annotations": { "conflict_type": "...", "initiator_id": "...",
//                      "responder_id": "...", "por_t_s": 3.2,
//                      "gt_severity": "L2" }
//   }
//
// Samples may also be objects with keys t_s, x_m, y_m, heading_rad,
// speed_mps. Headings are normalized to (-pi, pi] on ingestion.

#pragma once

#include <istream>
#include <string>

#include <json.hpp>

#include "fracsim/scene.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw ParseError(path + ": " + what);
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required field");
    return *it;
}

inline double require_number(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

inline std::string require_string(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline double number_at(const json& arr, std::size_t i, const std::string& path) {
    if (!arr[i].is_number()) {
        fail(path + "[" + std::to_string(i) + "]", "expected a number");
    }
    return arr[i].get<double>();
}

inline TrajectorySample parse_sample(const json& j, const std::string& path) {
    TrajectorySample s;
    if (j.is_array()) {
        if (j.size() != 5) fail(path, "sample array must be [t_s, x_m, y_m, heading_rad, speed_mps]");
        s.t = number_at(j, 0, path);
        s.x = number_at(j, 1, path);
        s.y = number_at(j, 2, path);
        s.heading = number_at(j, 3, path);
        s.speed = number_at(j, 4, path);
    } else if (j.is_object()) {
        s.t = require_number(j, "t_s", path);
        s.x = require_number(j, "x_m", path);
        s.y = require_number(j, "y_m", path);
        s.heading = require_number(j, "heading_rad", path);
        s.speed = require_number(j, "speed_mps", path);
    } else {
        fail(path, "sample must be an array or an object");
    }
    s.heading = wrap_angle(s.heading);
    return s;
}

inline AgentTrack parse_track(const json& j, const std::string& path) {
    AgentTrack tr;
    tr.agent_id = require_string(j, "agent_id", path);
    const std::string cls = require_string(j, "agent_class", path);
    const auto parsed = parse_agent_class(cls);
    if (!parsed) fail(path + ".agent_class", "unknown agent class '" + cls + "'");
    tr.agent_class = *parsed;
    tr.length = require_number(j, "length_m", path);
    tr.width = require_number(j, "width_m", path);
    if (const auto it = j.find("mass_kg"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) fail(path + ".mass_kg", "expected a number");
        tr.mass_kg = it->get<double>();
    }
    const json& samples = require(j, "samples", path);
    if (!samples.is_array()) fail(path + ".samples", "expected an array");
    tr.samples.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        tr.samples.push_back(
            parse_sample(samples[i], path + ".samples[" + std::to_string(i) + "]"));
    }
    return tr;
}

inline SceneAnnotations parse_annotations(const json& j, const std::string& path) {
    SceneAnnotations a;
    if (!j.is_object()) fail(path, "expected an object");
    if (const auto it = j.find("conflict_type"); it != j.end() && !it->is_null()) {
        const auto t = parse_conflict_type(it->get<std::string>());
        if (!t) fail(path + ".conflict_type", "unknown conflict type");
        a.conflict_type = *t;
    }
    if (const auto it = j.find("initiator_id"); it != j.end() && !it->is_null()) {
        a.initiator_id = it->get<std::string>();
    }
    if (const auto it = j.find("responder_id"); it != j.end() && !it->is_null()) {
        a.responder_id = it->get<std::string>();
    }
    if (const auto it = j.find("por_t_s"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) fail(path + ".por_t_s", "expected a number");
        a.por_t = it->get<double>();
    }
    if (const auto it = j.find("gt_severity"); it != j.end() && !it->is_null()) {
        const auto s = parse_severity(it->get<std::string>());
        if (!s) fail(path + ".gt_severity", "expected one of L0, L1, L2, Lnone");
        a.gt_severity = *s;
    }
    return a;
}

}  // namespace detail

/// Parses and validates a scene document; throws ParseError with the field
/// path on malformed input or any invariant violation.
[[nodiscard]] inline ConflictScene parse_scene(const nlohmann::json& doc) {
    using detail::fail;
    ConflictScene scene;
    scene.scene_id = detail::require_string(doc, "scene_id", "$");
    const auto& tracks = detail::require(doc, "tracks", "$");
    if (!tracks.is_array() || tracks.size() != 2) {
        fail("$.tracks", "expected an array of exactly 2 tracks");
    }
    scene.track_a = detail::parse_track(tracks[0], "tracks[0]");
    scene.track_b = detail::parse_track(tracks[1], "tracks[1]");
    if (const auto it = doc.find("annotations"); it != doc.end() && !it->is_null()) {
        scene.annotations = detail::parse_annotations(*it, "annotations");
    }
    const auto violations = validate_scene(scene);
    if (!violations.empty()) {
        std::string msg = "invalid scene";
        for (const auto& v : violations) msg += "; " + v.str();
        throw ParseError(msg);
    }
    return scene;
}

[[nodiscard]] inline ConflictScene parse_scene(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed scene document: ") + e.what());
    }
    return parse_scene(doc);
}

[[nodiscard]] inline ConflictScene parse_scene(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed scene document: ") + e.what());
    }
    return parse_scene(doc);
}

[[nodiscard]] inline nlohmann::ordered_json serialize_scene(const ConflictScene& scene) {
    using ojson = nlohmann::ordered_json;
    ojson doc;
    doc["scene_id"] = scene.scene_id;
    doc["tracks"] = ojson::array();
    for (const AgentTrack* tr : {&scene.track_a, &scene.track_b}) {
        ojson jt;
        jt["agent_id"] = tr->agent_id;
        jt["agent_class"] = std::string(to_string(tr->agent_class));
        jt["length_m"] = tr->length;
        jt["width_m"] = tr->width;
        if (tr->mass_kg) jt["mass_kg"] = *tr->mass_kg;
        ojson samples = ojson::array();
        for (const auto& s : tr->samples) {
            samples.push_back(ojson::array({s.t, s.x, s.y, s.heading, s.speed}));
        }
        jt["samples"] = std::move(samples);
        doc["tracks"].push_back(std::move(jt));
    }
    const auto& a = scene.annotations;
    if (!a.empty()) {
        ojson ja;
        if (a.conflict_type) ja["conflict_type"] = std::string(to_string(*a.conflict_type));
        if (a.initiator_id) ja["initiator_id"] = *a.initiator_id;
        if (a.responder_id) ja["responder_id"] = *a.responder_id;
        if (a.por_t) ja["por_t_s"] = *a.por_t;
        if (a.gt_severity) ja["gt_severity"] = std::string(to_string(*a.gt_severity));
        doc["annotations"] = std::move(ja);
    }
    return doc;
}

[[nodiscard]] inline std::string serialize_scene_text(const ConflictScene& scene) {
    return serialize_scene(scene).dump(2) + "\n";
}

}  // namespace fracsim
