#include "fmmbeat/wave.h"

#include "fmmbeat/angles.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fmmbeat {

std::string_view to_string(WaveLabel label) {
    switch (label) {
    case WaveLabel::P: return "P";
    case WaveLabel::Q: return "Q";
    case WaveLabel::R: return "R";
    case WaveLabel::S: return "S";
    case WaveLabel::T: return "T";
    }
    return "?";
}

std::optional<WaveLabel> parse_label(std::string_view text) {
    for (WaveLabel l : kAllLabels) {
        if (text == to_string(l)) {
            return l;
        }
    }
    return std::nullopt;
}

std::string_view to_string(MarkKind kind) {
    return kind == MarkKind::Crest ? "crest" : "trough";
}

bool WaveParams::valid() const {
    return std::isfinite(A) && A > 0.0 && alpha >= 0.0 && alpha < kTwoPi && beta >= 0.0 &&
           beta < kTwoPi && omega > 0.0 && omega <= 1.0;
}

std::size_t FmmEcgParams::present_count() const {
    return static_cast<std::size_t>(
        std::count_if(waves.begin(), waves.end(), [](const auto& w) { return w.has_value(); }));
}

bool in_circular_order(const FmmEcgParams& m) {
    // Anchor at R when present, otherwise at the first present label.
    std::size_t anchor = static_cast<std::size_t>(WaveLabel::R);
    if (!m.waves[anchor]) {
        auto it = std::find_if(m.waves.begin(), m.waves.end(),
                               [](const auto& w) { return w.has_value(); });
        if (it == m.waves.end()) {
            return true;
        }
        anchor = static_cast<std::size_t>(it - m.waves.begin());
    }
    const double origin = m.waves[anchor]->alpha;
    double last = 0.0;
    for (std::size_t step = 1; step < 5; ++step) {
        const auto& w = m.waves[(anchor + step) % 5];
        if (!w) {
            continue;
        }
        const double off = ccw_offset(origin, w->alpha);
        if (off < last) {
            return false;
        }
        last = off;
    }
    return true;
}

Beat::Beat(std::vector<double> times, std::vector<double> values, double fs, double qrs_phase)
    : times_(std::move(times)), values_(std::move(values)), fs_(fs), qrs_phase_(qrs_phase) {
    if (times_.size() != values_.size()) {
        throw std::invalid_argument("beat: times and values differ in length");
    }
    if (times_.size() < 20) {
        throw std::invalid_argument("beat: at least 20 samples are required");
    }
    if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
        throw std::invalid_argument("beat: sampling frequency must be positive");
    }
    if (!std::isfinite(qrs_phase_)) {
        throw std::invalid_argument("beat: QRS phase must be finite");
    }
    if (times_.front() < 0.0 || times_.back() >= kTwoPi) {
        throw std::invalid_argument("beat: times must lie in [0, 2π)");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) {
            throw std::invalid_argument("beat: times must be strictly increasing");
        }
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("beat: non-finite sample value");
        }
    }
}

double Beat::phase_to_seconds(double dphase) const {
    return dphase * static_cast<double>(size()) / (kTwoPi * fs_);
}

double Beat::seconds_to_phase(double seconds) const {
    return seconds * kTwoPi * fs_ / static_cast<double>(size());
}

Beat Beat::with_values(std::vector<double> values) const {
    return Beat(times_, std::move(values), fs_, qrs_phase_);
}

double mobius_phase(double alpha, double omega, double t) {
    const double half = 0.5 * (t - alpha);
    return 2.0 * std::atan2(omega * std::sin(half), std::cos(half));
}

double eval_wave(const WaveParams& p, double t) {
    return p.A * std::cos(p.beta + mobius_phase(p.alpha, p.omega, t));
}

double eval_model(const FmmEcgParams& m, double t) {
    double v = m.M;
    for (const auto& w : m.waves) {
        if (w) {
            v += eval_wave(*w, t);
        }
    }
    return v;
}

std::vector<double> eval_model(const FmmEcgParams& m, std::span<const double> times) {
    std::vector<double> out(times.size());
    std::transform(times.begin(), times.end(), out.begin(),
                   [&m](double t) { return eval_model(m, t); });
    return out;
}

double crest_time(const WaveParams& p) {
    // α + 2·atan(tan(−β/2)/ω), with the tangent split into atan2 arguments
    const double h = -0.5 * p.beta;
    return wrap_angle(p.alpha + 2.0 * std::atan2(std::sin(h), p.omega * std::cos(h)));
}

double trough_time(const WaveParams& p) {
    const double h = 0.5 * (kPi - p.beta);
    return wrap_angle(p.alpha + 2.0 * std::atan2(std::sin(h), p.omega * std::cos(h)));
}

std::vector<FiducialMark> fiducial_marks(const FmmEcgParams& m) {
    std::vector<FiducialMark> marks;
    for (WaveLabel label : kAllLabels) {
        const auto& w = m[label];
        if (!w) {
            continue;
        }
        const double t_up = crest_time(*w);
        const double t_low = trough_time(*w);
        // Excursions of the wave itself from its resting level A·cos β.
        const double rest = eval_wave(*w, w->alpha);
        const double up = eval_wave(*w, t_up);
        const double low = eval_wave(*w, t_low);
        if (std::abs(up - rest) >= std::abs(low - rest)) {
            marks.push_back({label, t_up, MarkKind::Crest, eval_model(m, t_up)});
        } else {
            marks.push_back({label, t_low, MarkKind::Trough, eval_model(m, t_low)});
        }
    }
    return marks;
}

Beat synth_beat(const FmmEcgParams& m, std::size_t n, double noise_sd, std::uint64_t seed,
                std::optional<double> fs) {
    if (!m[WaveLabel::R]) {
        throw std::invalid_argument("synth_beat: an R wave is required");
    }
    if (n < 20) {
        throw std::invalid_argument("synth_beat: at least 20 samples are required");
    }
    if (!(noise_sd >= 0.0)) {
        throw std::invalid_argument("synth_beat: noise_sd must be nonnegative");
    }
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
        times[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    }
    std::vector<double> values = eval_model(m, times);
    if (noise_sd > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_sd);
        for (double& v : values) {
            v += noise(rng);
        }
    }
    return Beat(std::move(times), std::move(values), fs.value_or(static_cast<double>(n)),
                crest_time(*m[WaveLabel::R]));
}

}  // namespace fmmbeat
