#include "fmmbeat/json_io.h"

#include "fmmbeat/angles.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fmmbeat {

using nlohmann::json;

void to_json(json& j, const WaveParams& p) {
    j = json{{"A", p.A}, {"alpha", p.alpha}, {"beta", p.beta}, {"omega", p.omega}};
}

void from_json(const json& j, WaveParams& p) {
    j.at("A").get_to(p.A);
    j.at("alpha").get_to(p.alpha);
    j.at("beta").get_to(p.beta);
    j.at("omega").get_to(p.omega);
}

void to_json(json& j, const FmmEcgParams& m) {
    json waves = json::object();
    for (WaveLabel l : kAllLabels) {
        const std::string key(to_string(l));
        waves[key] = m[l] ? json(*m[l]) : json(nullptr);
    }
    j = json{{"M", m.M}, {"waves", waves}, {"sigma2", m.sigma2}};
}

void from_json(const json& j, FmmEcgParams& m) {
    m = FmmEcgParams{};
    j.at("M").get_to(m.M);
    if (j.contains("sigma2")) {
        j.at("sigma2").get_to(m.sigma2);
    }
    const json& waves = j.at("waves");
    for (auto it = waves.begin(); it != waves.end(); ++it) {
        const auto label = parse_label(it.key());
        if (!label) {
            throw std::invalid_argument("params: unknown wave label '" + it.key() + "'");
        }
        if (!it.value().is_null()) {
            m[*label] = it.value().get<WaveParams>();
        }
    }
}

void to_json(json& j, const Component& c) {
    j = json{{"params", c.params}, {"delta", c.delta}, {"gamma", c.gamma}, {"pv", c.pv}};
}

void to_json(json& j, const FitReport& r) {
    json assigned = json::object();
    for (WaveLabel l : kAllLabels) {
        const auto& idx = r.assigned_from_component[static_cast<std::size_t>(l)];
        assigned[std::string(to_string(l))] = idx ? json(*idx) : json(nullptr);
    }
    j = json{{"params", r.params},
             {"r2", r.r2},
             {"pv_per_component", r.pv_per_component},
             {"iterations", r.iterations},
             {"assigned_from_component", assigned},
             {"converged", r.converged},
             {"components", r.components}};
}

void to_json(json& j, const FiducialMark& m) {
    j = json{{"label", std::string(to_string(m.label))},
             {"phase", m.phase},
             {"kind", std::string(to_string(m.kind))},
             {"value", m.value}};
}

FmmEcgParams params_from_json(const json& j) {
    FmmEcgParams m;
    try {
        m = j.get<FmmEcgParams>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("params: ") + e.what());
    }
    if (!std::isfinite(m.M)) {
        throw std::invalid_argument("params: M must be finite");
    }
    for (WaveLabel l : kAllLabels) {
        auto& w = m[l];
        if (!w) {
            continue;
        }
        w->alpha = wrap_angle(w->alpha);
        w->beta = wrap_angle(w->beta);
        if (!w->valid()) {
            throw std::invalid_argument("params: wave " + std::string(to_string(l)) +
                                        " needs A > 0 and 0 < omega <= 1");
        }
    }
    if (!m[WaveLabel::R]) {
        throw std::invalid_argument("params: an R wave is required");
    }
    return m;
}

}  // namespace fmmbeat
