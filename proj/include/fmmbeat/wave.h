#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fmmbeat {

enum class WaveLabel { P = 0, Q, R, S, T };

inline constexpr std::array<WaveLabel, 5> kAllLabels = {
    WaveLabel::P, WaveLabel::Q, WaveLabel::R, WaveLabel::S, WaveLabel::T};

std::string_view to_string(WaveLabel label);
std::optional<WaveLabel> parse_label(std::string_view text);

/// One FMM wave: A·cos(β + 2·atan(ω·tan((t − α)/2))).
struct WaveParams {
    double A = 0.0;      // amplitude, > 0
    double alpha = 0.0;  // location, [0, 2π)
    double beta = 0.0;   // shape/skewness, [0, 2π)
    double omega = 1.0;  // sharpness, (0, 1]

    bool valid() const;
    bool operator==(const WaveParams&) const = default;
};

/// Intercept plus up to five labelled waves; an absent wave contributes nothing.
struct FmmEcgParams {
    double M = 0.0;
    std::array<std::optional<WaveParams>, 5> waves{};
    double sigma2 = 0.0;

    std::optional<WaveParams>& operator[](WaveLabel l) { return waves[static_cast<std::size_t>(l)]; }
    const std::optional<WaveParams>& operator[](WaveLabel l) const {
        return waves[static_cast<std::size_t>(l)];
    }
    std::size_t present_count() const;
    bool operator==(const FmmEcgParams&) const = default;
};

/// True when the locations of the present waves follow P→Q→R→S→T→P around the circle.
bool in_circular_order(const FmmEcgParams& m);

/// A single segmented heartbeat with sample times mapped onto the unit circle.
class Beat {
public:
    /// Throws std::invalid_argument unless times are strictly increasing in
    /// [0, 2π), lengths match, n >= 20, values are finite and fs > 0.
    Beat(std::vector<double> times, std::vector<double> values, double fs, double qrs_phase);

    std::span<const double> times() const { return times_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return times_.size(); }
    double fs() const { return fs_; }
    double qrs_phase() const { return qrs_phase_; }

    /// Seconds spanned by a phase difference, for a beat sampled at one sample per 2π/n.
    double phase_to_seconds(double dphase) const;
    double seconds_to_phase(double seconds) const;

    Beat with_values(std::vector<double> values) const;

    bool operator==(const Beat&) const = default;

private:
    std::vector<double> times_;
    std::vector<double> values_;
    double fs_;
    double qrs_phase_;
};

enum class MarkKind { Crest, Trough };

std::string_view to_string(MarkKind kind);

struct FiducialMark {
    WaveLabel label;
    double phase;
    MarkKind kind;
    double value;  // fitted signal at the mark
};

/// Möbius-warped phase 2·atan(ω·tan((t − α)/2)), written with atan2 so it is
/// defined at t − α = π.
double mobius_phase(double alpha, double omega, double t);

double eval_wave(const WaveParams& p, double t);
double eval_model(const FmmEcgParams& m, double t);
std::vector<double> eval_model(const FmmEcgParams& m, std::span<const double> times);

double crest_time(const WaveParams& p);
double trough_time(const WaveParams& p);

/// One mark per present wave, in label order. A wave is positive (crest mark)
/// when its own excursion from its resting level W(α) is at least as large at
/// the crest time as at the trough time, i.e. when cos β ≤ 0. The mark value is
/// the full fitted signal at the mark.
std::vector<FiducialMark> fiducial_marks(const FmmEcgParams& m);

/// Equispaced beat (t_i = 2πi/n) of the model plus seeded N(0, noise_sd²) noise.
/// fs defaults to n, i.e. a one-second beat. Throws if the R wave is absent.
Beat synth_beat(const FmmEcgParams& m, std::size_t n, double noise_sd, std::uint64_t seed,
                std::optional<double> fs = std::nullopt);

}  // namespace fmmbeat
