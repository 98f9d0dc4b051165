#include "fmmbeat/fitting.h"

#include "fmmbeat/angles.h"

#include <algorithm>
#include <functional>
#include <numeric>

namespace fmmbeat {

namespace {

constexpr std::size_t kTopComponents = 5;

std::size_t slot(WaveLabel l) { return static_cast<std::size_t>(l); }

// Fitted curve over all components, for the crest-height criterion on R.
struct FittedCurve {
    std::span<const Component> components;
    double intercept = 0.0;

    double operator()(double t) const {
        double v = intercept;
        for (const Component& c : components) {
            if (c.present()) {
                v += eval_wave(c.params, t);
            }
        }
        return v;
    }
};

FittedCurve fitted_curve(std::span<const Component> components, const Beat& beat) {
    FittedCurve curve{components, 0.0};
    const auto times = beat.times();
    const auto values = beat.values();
    double residual_sum = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        residual_sum += values[i] - curve(times[i]);
    }
    curve.intercept = residual_sum / static_cast<double>(times.size());
    return curve;
}

bool is_noise(const Component& c, const IStepConfig& cfg) {
    return !c.present() || c.pv < cfg.noise_pv_max || c.params.omega < cfg.noise_omega_min ||
           c.params.omega > cfg.noise_omega_max;
}

std::optional<std::size_t> pick_r(std::span<const Component> comps, const std::vector<bool>& noise,
                                  const Beat& beat, const IStepConfig& cfg) {
    const FittedCurve curve = fitted_curve(comps, beat);
    struct Candidate {
        std::size_t index;
        double crest_height;
    };
    std::vector<Candidate> candidates;
    const std::size_t top = std::min(kTopComponents, comps.size());
    for (std::size_t j = 0; j < top; ++j) {
        if (noise[j]) {
            continue;
        }
        const WaveParams& p = comps[j].params;
        const double crest = crest_time(p);
        if (circular_distance(crest, beat.qrs_phase()) > cfg.r_qrs_proximity) {
            continue;
        }
        if (!(p.beta > cfg.r_beta_window.first && p.beta < cfg.r_beta_window.second)) {
            continue;
        }
        if (!(p.omega < cfg.r_omega_max)) {
            continue;
        }
        candidates.push_back({j, curve(crest)});
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    // Highest fitted crest first; equal heights keep the higher-PV (lower index) one.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.crest_height > b.crest_height; });
    if (cfg.r_second_max && candidates.size() > 1 &&
        comps[candidates[1].index].pv > comps[candidates[0].index].pv) {
        return candidates[1].index;
    }
    return candidates[0].index;
}

bool q_p_consistent(const std::array<std::optional<std::size_t>, 5>& index,
                    std::span<const Component> comps, const IStepConfig& cfg) {
    if (!cfg.q_sharper_than_p) {
        return true;
    }
    const auto& p = index[slot(WaveLabel::P)];
    const auto& q = index[slot(WaveLabel::Q)];
    if (!p || !q) {
        return true;
    }
    return comps[*q].params.omega < comps[*p].params.omega;
}

// Labels following R counterclockwise.
constexpr std::array<WaveLabel, 4> kAfterR = {WaveLabel::S, WaveLabel::T, WaveLabel::P,
                                              WaveLabel::Q};

// Order-preserving matching of the free top components (sorted by offset from
// α_R) onto S, T, P, Q. Maximizes the number of plausible labels, then their PV.
void match_by_order(std::span<const Component> comps, const std::vector<std::size_t>& free,
                    const IStepConfig& cfg, std::array<std::optional<std::size_t>, 5>& index) {
    std::array<std::optional<std::size_t>, 5> best = index;
    std::size_t best_count = 0;
    double best_pv = -1.0;
    std::array<std::optional<std::size_t>, 5> trial = index;

    std::function<void(std::size_t, std::size_t, std::size_t, double)> search =
        [&](std::size_t pos, std::size_t next_label, std::size_t count, double pv) {
            if (pos == free.size()) {
                if (!q_p_consistent(trial, comps, cfg)) {
                    return;
                }
                if (count > best_count || (count == best_count && pv > best_pv)) {
                    best = trial;
                    best_count = count;
                    best_pv = pv;
                }
                return;
            }
            const std::size_t j = free[pos];
            for (std::size_t l = next_label; l < kAfterR.size(); ++l) {
                const WaveLabel label = kAfterR[l];
                if (!cfg.window(label).admits(comps[j].params)) {
                    continue;
                }
                trial[slot(label)] = j;
                search(pos + 1, l + 1, count + 1, pv + comps[j].pv);
                trial[slot(label)].reset();
            }
            search(pos + 1, next_label, count, pv);
        };
    search(0, 0, 0, 0.0);
    index = best;
}

// True when α lies counterclockwise between the nearest assigned neighbours of `label`.
bool within_sector(WaveLabel label, double alpha, const std::array<std::optional<std::size_t>, 5>& index,
                   std::span<const Component> comps) {
    const std::size_t s = slot(label);
    std::optional<std::size_t> prev;
    std::optional<std::size_t> next;
    for (std::size_t step = 1; step < 5 && !prev; ++step) {
        prev = index[(s + 5 - step) % 5];
    }
    for (std::size_t step = 1; step < 5 && !next; ++step) {
        next = index[(s + step) % 5];
    }
    if (!prev || !next) {
        return true;
    }
    const double from = comps[*prev].params.alpha;
    double span = ccw_offset(from, comps[*next].params.alpha);
    if (*prev == *next) {
        span = kTwoPi;
    }
    return ccw_offset(from, alpha) <= span;
}

}  // namespace

bool AngleWindow::contains(double angle) const {
    if (hi - lo >= kTwoPi) {
        return true;
    }
    const double a = wrap_angle(angle);
    if (lo <= hi) {
        return a >= lo && a <= hi;
    }
    return a >= lo || a <= hi;
}

bool LabelWindow::admits(const WaveParams& p) const {
    return p.omega >= omega_lo && p.omega <= omega_hi && beta.contains(p.beta);
}

std::size_t Assignment::assigned_count() const {
    return static_cast<std::size_t>(
        std::count_if(index.begin(), index.end(), [](const auto& i) { return i.has_value(); }));
}

Assignment istep_assign(std::span<const Component> components, const Beat& beat,
                        const IStepConfig& cfg) {
    Assignment out;
    out.noise.resize(components.size());
    for (std::size_t j = 0; j < components.size(); ++j) {
        out.noise[j] = is_noise(components[j], cfg);
    }

    const auto r = pick_r(components, out.noise, beat, cfg);
    if (!r) {
        throw UnfittableBeat("no component qualifies as the R wave");
    }
    out.index[slot(WaveLabel::R)] = *r;
    const double alpha_r = components[*r].params.alpha;

    // Preassignment among the top five by circular order from R, with windows.
    std::vector<std::size_t> free;
    const std::size_t top = std::min(kTopComponents, components.size());
    for (std::size_t j = 0; j < top; ++j) {
        if (j != *r && !out.noise[j]) {
            free.push_back(j);
        }
    }
    std::stable_sort(free.begin(), free.end(), [&](std::size_t a, std::size_t b) {
        return ccw_offset(alpha_r, components[a].params.alpha) <
               ccw_offset(alpha_r, components[b].params.alpha);
    });
    match_by_order(components, free, cfg, out.index);

    // Remaining labels from components 6..K, highest PV first.
    for (WaveLabel label : {WaveLabel::P, WaveLabel::Q, WaveLabel::S, WaveLabel::T}) {
        if (out[label]) {
            continue;
        }
        for (std::size_t j = top; j < components.size(); ++j) {
            if (out.noise[j]) {
                continue;
            }
            const bool taken = std::any_of(out.index.begin(), out.index.end(),
                                           [j](const auto& i) { return i == j; });
            if (taken || !cfg.window(label).admits(components[j].params) ||
                !within_sector(label, components[j].params.alpha, out.index, components)) {
                continue;
            }
            out.index[slot(label)] = j;
            if (!q_p_consistent(out.index, components, cfg)) {
                out.index[slot(label)].reset();
                continue;
            }
            break;
        }
    }
    return out;
}

}  // namespace fmmbeat
