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

#pragma once

#include <cstdint>
#include <istream>
#include <string>

#include <json.hpp>

#include "fracsim/conflict.hpp"
#include "fracsim/crash.hpp"
#include "fracsim/types.hpp"

namespace fracsim {

/// Engine-wide configuration. All physical parameters are validated into
/// documented sane ranges at load time; the seed fully determines
/// synthetic generation.
struct EngineConfig {
    double dt = 0.05;               // s, simulation timestep
    double max_accel = 12.0;        // |m/s^2| clamp for derived accel_long
    unsigned jobs = 1;              // worker threads for scene-level work
    std::uint64_t seed = 42;
    std::string behavior_model_path;  // empty -> built-in default model
    CrashParams crash;
    ConflictThresholds conflict;
};

namespace detail {

inline void require_range(double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi)) {
        throw ConfigError(std::string("config: ") + name + " out of range [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

}  // namespace detail

inline void validate_config(const EngineConfig& c) {
    detail::require_range(c.dt, 1e-4, 1.0, "dt_s");
    detail::require_range(c.max_accel, 1.0, 50.0, "max_accel_mps2");
    detail::require_range(c.crash.restitution, 0.0, 1.0, "crash.restitution");
    detail::require_range(c.crash.friction_mu, 0.0, 2.0, "crash.friction_mu");
    detail::require_range(c.crash.mass_per_area, 20.0, 1000.0, "crash.mass_per_area_kgpm2");
    detail::require_range(c.crash.cyclist_mass, 10.0, 500.0, "crash.cyclist_mass_kg");
    detail::require_range(c.crash.pedestrian_mass, 10.0, 500.0, "crash.pedestrian_mass_kg");
    detail::require_range(c.crash.motorcycle_mass, 50.0, 1000.0, "crash.motorcycle_mass_kg");
    detail::require_range(c.crash.vehicle_l1_mph, 0.1, 100.0, "crash.vehicle_l1_mph");
    detail::require_range(c.crash.vehicle_l0_mph, 0.1, 200.0, "crash.vehicle_l0_mph");
    detail::require_range(c.crash.vru_l1_mph, 0.1, 100.0, "crash.vru_l1_mph");
    detail::require_range(c.crash.vru_l0_mph, 0.1, 200.0, "crash.vru_l0_mph");
    if (c.crash.vehicle_l0_mph <= c.crash.vehicle_l1_mph) {
        throw ConfigError("config: crash.vehicle_l0_mph must exceed vehicle_l1_mph");
    }
    if (c.crash.vru_l0_mph <= c.crash.vru_l1_mph) {
        throw ConfigError("config: crash.vru_l0_mph must exceed vru_l1_mph");
    }
    detail::require_range(c.conflict.corridor_inflation, 0.0, 2.0, "conflict.corridor_inflation_m");
    detail::require_range(c.conflict.rear_end_decel, -10.0, -0.1, "conflict.rear_end_decel_mps2");
    detail::require_range(c.conflict.rear_end_sustain, 0.0, 2.0, "conflict.rear_end_sustain_s");
    detail::require_range(c.conflict.lateral_closing_speed, 0.01, 5.0,
                          "conflict.lateral_closing_mps");
    detail::require_range(c.conflict.pullout_speed_max, 0.0, 10.0,
                          "conflict.pullout_speed_max_mps");
    if (c.jobs < 1) throw ConfigError("config: jobs must be >= 1");
}

/// Loads the engine configuration from JSON; absent keys keep defaults.
[[nodiscard]] inline EngineConfig load_engine_config(const nlohmann::json& doc) {
    EngineConfig c;
    const auto num = [](const nlohmann::json& j, const char* key, double fallback) {
        return j.contains(key) ? j.at(key).get<double>() : fallback;
    };
    c.dt = num(doc, "dt_s", c.dt);
    c.max_accel = num(doc, "max_accel_mps2", c.max_accel);
    if (doc.contains("jobs")) c.jobs = doc.at("jobs").get<unsigned>();
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("behavior_model")) {
        c.behavior_model_path = doc.at("behavior_model").get<std::string>();
    }
    if (doc.contains("crash")) {
        const auto& j = doc.at("crash");
        c.crash.restitution = num(j, "restitution", c.crash.restitution);
        c.crash.friction_mu = num(j, "friction_mu", c.crash.friction_mu);
        c.crash.mass_per_area = num(j, "mass_per_area_kgpm2", c.crash.mass_per_area);
        c.crash.cyclist_mass = num(j, "cyclist_mass_kg", c.crash.cyclist_mass);
        c.crash.pedestrian_mass = num(j, "pedestrian_mass_kg", c.crash.pedestrian_mass);
        c.crash.motorcycle_mass = num(j, "motorcycle_mass_kg", c.crash.motorcycle_mass);
        c.crash.vehicle_l1_mph = num(j, "vehicle_l1_mph", c.crash.vehicle_l1_mph);
        c.crash.vehicle_l0_mph = num(j, "vehicle_l0_mph", c.crash.vehicle_l0_mph);
        c.crash.vru_l1_mph = num(j, "vru_l1_mph", c.crash.vru_l1_mph);
        c.crash.vru_l0_mph = num(j, "vru_l0_mph", c.crash.vru_l0_mph);
        c.crash.penetration_tol = num(j, "penetration_tol_m", c.crash.penetration_tol);
    }
    if (doc.contains("conflict")) {
        const auto& j = doc.at("conflict");
        c.conflict.corridor_inflation =
            num(j, "corridor_inflation_m", c.conflict.corridor_inflation);
        c.conflict.rear_end_decel = num(j, "rear_end_decel_mps2", c.conflict.rear_end_decel);
        c.conflict.rear_end_sustain = num(j, "rear_end_sustain_s", c.conflict.rear_end_sustain);
        c.conflict.lateral_closing_speed =
            num(j, "lateral_closing_mps", c.conflict.lateral_closing_speed);
        c.conflict.same_direction_max =
            num(j, "same_direction_max_deg", c.conflict.same_direction_max * 180.0 / kPi) * kPi /
            180.0;
        c.conflict.head_on_min =
            num(j, "head_on_min_deg", c.conflict.head_on_min * 180.0 / kPi) * kPi / 180.0;
        c.conflict.turn_total_min =
            num(j, "turn_min_deg", c.conflict.turn_total_min * 180.0 / kPi) * kPi / 180.0;
        c.conflict.pullout_speed_max =
            num(j, "pullout_speed_max_mps", c.conflict.pullout_speed_max);
    }
    validate_config(c);
    return c;
}

[[nodiscard]] inline EngineConfig load_engine_config(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return load_engine_config(doc);
}

}  // namespace fracsim
