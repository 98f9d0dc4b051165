#pragma once

#include "fmmbeat/fitting.h"
#include "fmmbeat/wave.h"

#include <json.hpp>

namespace fmmbeat {

// Keys mirror the field names. Absent waves serialize as null.
void to_json(nlohmann::json& j, const WaveParams& p);
void from_json(const nlohmann::json& j, WaveParams& p);
void to_json(nlohmann::json& j, const FmmEcgParams& m);
void from_json(const nlohmann::json& j, FmmEcgParams& m);
void to_json(nlohmann::json& j, const Component& c);
void to_json(nlohmann::json& j, const FitReport& r);
void to_json(nlohmann::json& j, const FiducialMark& m);

/// Throws std::invalid_argument when the parameters violate the wave domains
/// or R is missing.
FmmEcgParams params_from_json(const nlohmann::json& j);

}  // namespace fmmbeat
