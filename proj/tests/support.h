#pragma once

#include "fmmbeat/angles.h"
#include "fmmbeat/wave.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fmmbeat::test {

inline WaveParams random_wave(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(0.05, 5.0);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> log_omega(std::log(0.01), 0.0);
    return {amp(rng), angle(rng), angle(rng), std::exp(log_omega(rng))};
}

inline std::vector<double> phase_grid(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    }
    return t;
}

/// Noise sd giving the requested SNR (dB) against the beat's own variance.
inline double noise_sd_for_snr(const std::vector<double>& clean, double snr_db) {
    double mean = 0.0;
    for (double v : clean) {
        mean += v;
    }
    mean /= static_cast<double>(clean.size());
    double var = 0.0;
    for (double v : clean) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(clean.size());
    return std::sqrt(var / std::pow(10.0, snr_db / 10.0));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("fmmbeat_" + name + "_" +
                      std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fmmbeat::test
