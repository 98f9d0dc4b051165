#pragma once

#include "fmmbeat/wave.h"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace fmmbeat {

/// Illustrative single-beat parameter sets for NORMAL, PACE, RBBB, APC and PVC
/// morphologies. Values are hand-tuned for plausible shapes on a beat whose R
/// crest sits at 40% of the cycle; they are not estimates from any database.
std::optional<FmmEcgParams> preset(std::string_view name);
std::vector<std::string_view> preset_names();

/// Seeded random variant of `base`: amplitudes and ω scaled by up to ±`spread`,
/// α and β shifted by up to ±0.2·`spread` rad. Circular order is preserved
/// for spreads up to 0.15.
FmmEcgParams perturb(const FmmEcgParams& base, std::uint64_t seed, double spread = 0.1);

}  // namespace fmmbeat
