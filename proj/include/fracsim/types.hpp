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

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fracsim {

inline constexpr double kMphToMps = 0.44704;  // exact by definition

/// Road user category. Motorcycles are vehicles for crash mechanics;
/// only cyclists and pedestrians count as vulnerable road users.
enum class AgentClass {
    PassengerVehicle,
    Truck,
    Motorcycle,
    Cyclist,
    Pedestrian,
};

[[nodiscard]] inline bool is_vru(AgentClass c) noexcept {
    return c == AgentClass::Cyclist || c == AgentClass::Pedestrian;
}

[[nodiscard]] inline std::string_view to_string(AgentClass c) {
    switch (c) {
        case AgentClass::PassengerVehicle: return "passenger_vehicle";
        case AgentClass::Truck: return "truck";
        case AgentClass::Motorcycle: return "motorcycle";
        case AgentClass::Cyclist: return "cyclist";
        case AgentClass::Pedestrian: return "pedestrian";
    }
    return "passenger_vehicle";
}

[[nodiscard]] inline std::optional<AgentClass> parse_agent_class(std::string_view s) {
    if (s == "passenger_vehicle") return AgentClass::PassengerVehicle;
    if (s == "truck") return AgentClass::Truck;
    if (s == "motorcycle") return AgentClass::Motorcycle;
    if (s == "cyclist") return AgentClass::Cyclist;
    if (s == "pedestrian") return AgentClass::Pedestrian;
    return std::nullopt;
}

/// Two-agent conflict taxonomy handled by the heuristic classifier.
/// Scenes that fit none of these are flagged unclassifiable, never defaulted.
enum class ConflictType {
    RearEndLeadBrake,
    CutIn,
    Pullout,
    CrossingStraight,
    LeftTurnAcrossPath,
    RightTurnMerge,
    HeadOn,
    VruCrossing,
};

[[nodiscard]] inline std::string_view to_string(ConflictType t) {
    switch (t) {
        case ConflictType::RearEndLeadBrake: return "rear_end_lead_brake";
        case ConflictType::CutIn: return "cut_in";
        case ConflictType::Pullout: return "pullout";
        case ConflictType::CrossingStraight: return "crossing_straight";
        case ConflictType::LeftTurnAcrossPath: return "left_turn_across_path";
        case ConflictType::RightTurnMerge: return "right_turn_merge";
        case ConflictType::HeadOn: return "head_on";
        case ConflictType::VruCrossing: return "vru_crossing";
    }
    return "rear_end_lead_brake";
}

[[nodiscard]] inline std::optional<ConflictType> parse_conflict_type(std::string_view s) {
    if (s == "rear_end_lead_brake") return ConflictType::RearEndLeadBrake;
    if (s == "cut_in") return ConflictType::CutIn;
    if (s == "pullout") return ConflictType::Pullout;
    if (s == "crossing_straight") return ConflictType::CrossingStraight;
    if (s == "left_turn_across_path") return ConflictType::LeftTurnAcrossPath;
    if (s == "right_turn_merge") return ConflictType::RightTurnMerge;
    if (s == "head_on") return ConflictType::HeadOn;
    if (s == "vru_crossing") return ConflictType::VruCrossing;
    return std::nullopt;
}

/// Loss severity. Badness order: L0 > L1 > L2 > None (no collision).
enum class SeverityLevel {
    L0,
    L1,
    L2,
    None,
};

inline constexpr std::array<SeverityLevel, 4> kAllSeverities = {
    SeverityLevel::L0, SeverityLevel::L1, SeverityLevel::L2, SeverityLevel::None};

/// Rank on the badness scale: None=0 ... L0=3.
[[nodiscard]] inline int severity_badness(SeverityLevel s) noexcept {
    switch (s) {
        case SeverityLevel::L0: return 3;
        case SeverityLevel::L1: return 2;
        case SeverityLevel::L2: return 1;
        case SeverityLevel::None: return 0;
    }
    return 0;
}

[[nodiscard]] inline bool is_collision(SeverityLevel s) noexcept {
    return s != SeverityLevel::None;
}

[[nodiscard]] inline SeverityLevel worse_of(SeverityLevel a, SeverityLevel b) noexcept {
    return severity_badness(a) >= severity_badness(b) ? a : b;
}

[[nodiscard]] inline std::string_view to_string(SeverityLevel s) {
    switch (s) {
        case SeverityLevel::L0: return "L0";
        case SeverityLevel::L1: return "L1";
        case SeverityLevel::L2: return "L2";
        case SeverityLevel::None: return "Lnone";
    }
    return "Lnone";
}

[[nodiscard]] inline std::optional<SeverityLevel> parse_severity(std::string_view s) {
    if (s == "L0") return SeverityLevel::L0;
    if (s == "L1") return SeverityLevel::L1;
    if (s == "L2") return SeverityLevel::L2;
    if (s == "Lnone") return SeverityLevel::None;
    return std::nullopt;
}

/// A named invariant violation found by validation; data, not an exception.
struct Violation {
    std::string path;     // e.g. "tracks[0].samples[3].speed_mps"
    std::string message;  // what is wrong

    [[nodiscard]] std::string str() const { return path + ": " + message; }
};

/// Base error for this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input document.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Invalid engine or behavior-model configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A scene that cannot be taken through the pipeline (ambiguous roles,
/// no point of reaction, mismatched grids, ...).
class EvalError : public Error {
  public:
    using Error::Error;
};

}  // namespace fracsim
