#include "fmmbeat/fitting.h"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace fmmbeat {

double r_squared(std::span<const double> observed, std::span<const double> fitted) {
    if (observed.size() != fitted.size()) {
        throw std::invalid_argument("r_squared: length mismatch");
    }
    if (observed.size() < 2) {
        throw std::invalid_argument("r_squared: at least two observations are required");
    }
    const double mean =
        std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
    double rss = 0.0;
    double tss = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        rss += (observed[i] - fitted[i]) * (observed[i] - fitted[i]);
        tss += (observed[i] - mean) * (observed[i] - mean);
    }
    if (tss == 0.0) {
        throw UndefinedVariance("r_squared: observed signal is constant");
    }
    return 1.0 - rss / tss;
}

std::vector<double> pv_sequence(const Beat& beat, std::span<const Component> components) {
    const auto times = beat.times();
    const auto values = beat.values();
    const std::size_t n = times.size();
    std::vector<double> waves(n, 0.0);
    std::vector<double> fitted(n);
    std::vector<double> pv;
    pv.reserve(components.size());
    double previous = 0.0;
    for (const Component& c : components) {
        if (c.present()) {
            for (std::size_t i = 0; i < n; ++i) {
                waves[i] += eval_wave(c.params, times[i]);
            }
        }
        double intercept = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            intercept += values[i] - waves[i];
        }
        intercept /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            fitted[i] = waves[i] + intercept;
        }
        const double r2 = r_squared(values, fitted);
        pv.push_back(r2 - previous);
        previous = r2;
    }
    return pv;
}

std::vector<Component> order_by_contribution(const Beat& beat, std::vector<Component> components) {
    const auto times = beat.times();
    const auto values = beat.values();
    const std::size_t n = times.size();
    std::vector<std::vector<double>> samples(components.size(), std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < components.size(); ++j) {
        if (components[j].present()) {
            for (std::size_t i = 0; i < n; ++i) {
                samples[j][i] = eval_wave(components[j].params, times[i]);
            }
        }
    }
    auto r2_with = [&](const std::vector<double>& waves) {
        double intercept = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            intercept += values[i] - waves[i];
        }
        intercept /= static_cast<double>(n);
        std::vector<double> fitted(n);
        for (std::size_t i = 0; i < n; ++i) {
            fitted[i] = waves[i] + intercept;
        }
        return r_squared(values, fitted);
    };

    std::vector<Component> ordered;
    ordered.reserve(components.size());
    std::vector<bool> used(components.size(), false);
    std::vector<double> waves(n, 0.0);
    std::vector<double> trial(n);
    double previous = 0.0;
    for (std::size_t step = 0; step < components.size(); ++step) {
        std::size_t best = components.size();
        double best_r2 = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < components.size(); ++j) {
            if (used[j]) {
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = waves[i] + samples[j][i];
            }
            const double r2 = r2_with(trial);
            if (r2 > best_r2) {
                best_r2 = r2;
                best = j;
            }
        }
        used[best] = true;
        for (std::size_t i = 0; i < n; ++i) {
            waves[i] += samples[best][i];
        }
        ordered.push_back(components[best]);
        ordered.back().pv = best_r2 - previous;
        previous = best_r2;
    }
    return ordered;
}

}  // namespace fmmbeat
