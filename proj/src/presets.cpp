#include "fmmbeat/presets.h"

#include "fmmbeat/angles.h"

#include <algorithm>
#include <random>

namespace fmmbeat {

namespace {

struct NamedPreset {
    std::string_view name;
    FmmEcgParams params;
};

// Sharp waves put their feature at α + π, so α sits half a cycle before the
// crest or trough it describes.
FmmEcgParams make(double m, std::optional<WaveParams> p, std::optional<WaveParams> q, WaveParams r,
                  std::optional<WaveParams> s, std::optional<WaveParams> t) {
    FmmEcgParams out;
    out.M = m;
    out[WaveLabel::P] = p;
    out[WaveLabel::Q] = q;
    out[WaveLabel::R] = r;
    out[WaveLabel::S] = s;
    out[WaveLabel::T] = t;
    return out;
}

const std::vector<NamedPreset>& presets() {
    static const std::vector<NamedPreset> table = {
        {"NORMAL", make(0.9,
                        WaveParams{0.12, 4.65, 3.20, 0.12},
                        WaveParams{0.10, 5.40, 0.15, 0.04},
                        WaveParams{1.00, 5.655, 3.05, 0.05},
                        WaveParams{0.20, 5.90, 6.10, 0.04},
                        WaveParams{0.30, 1.27, 3.40, 0.30})},
        // wide paced complex, deep broad S, discordant T
        {"PACE", make(0.6,
                      WaveParams{0.06, 4.55, 3.10, 0.15},
                      WaveParams{0.08, 5.35, 0.20, 0.05},
                      WaveParams{0.80, 5.655, 2.90, 0.10},
                      WaveParams{0.55, 6.05, 0.25, 0.10},
                      WaveParams{0.35, 1.40, 0.30, 0.35})},
        // slurred terminal S and mildly inverted T
        {"RBBB", make(0.7,
                      WaveParams{0.10, 4.65, 3.15, 0.12},
                      WaveParams{0.06, 5.42, 0.10, 0.04},
                      WaveParams{0.85, 5.655, 3.00, 0.06},
                      WaveParams{0.35, 6.00, 5.90, 0.12},
                      WaveParams{0.18, 1.35, 0.40, 0.30})},
        // early, flattened P
        {"APC", make(0.9,
                     WaveParams{0.08, 4.10, 3.00, 0.20},
                     WaveParams{0.09, 5.40, 0.15, 0.04},
                     WaveParams{1.00, 5.655, 3.05, 0.05},
                     WaveParams{0.22, 5.90, 6.10, 0.04},
                     WaveParams{0.28, 1.30, 3.35, 0.30})},
        // no P, tall wide R, large inverted T
        {"PVC", make(1.2,
                     std::nullopt,
                     WaveParams{0.10, 5.30, 0.30, 0.06},
                     WaveParams{1.40, 5.655, 3.20, 0.11},
                     WaveParams{0.45, 6.10, 6.00, 0.10},
                     WaveParams{0.60, 1.45, 0.35, 0.40})},
    };
    return table;
}

}  // namespace

std::optional<FmmEcgParams> preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) {
            return p.params;
        }
    }
    return std::nullopt;
}

std::vector<std::string_view> preset_names() {
    std::vector<std::string_view> names;
    for (const auto& p : presets()) {
        names.push_back(p.name);
    }
    return names;
}

FmmEcgParams perturb(const FmmEcgParams& base, std::uint64_t seed, double spread) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    FmmEcgParams out = base;
    for (auto& w : out.waves) {
        if (!w) {
            continue;
        }
        w->A *= 1.0 + spread * unit(rng);
        w->alpha = wrap_angle(w->alpha + 0.2 * spread * unit(rng));
        w->beta = wrap_angle(w->beta + 0.2 * spread * unit(rng));
        w->omega = std::clamp(w->omega * (1.0 + spread * unit(rng)), 1e-3, 1.0);
    }
    return out;
}

}  // namespace fmmbeat
