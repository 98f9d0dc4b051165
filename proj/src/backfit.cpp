#include "fmmbeat/fitting.h"

#include <numeric>
#include <stdexcept>

namespace fmmbeat {

namespace {

std::vector<double> wave_samples(const Component& c, std::span<const double> times) {
    std::vector<double> out(times.size(), 0.0);
    if (c.present()) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            out[i] = eval_wave(c.params, times[i]);
        }
    }
    return out;
}

struct ModelState {
    std::vector<double> waves;  // Σ of all wave contributions
    double intercept = 0.0;
    double rss = 0.0;
};

ModelState evaluate_state(std::span<const double> values,
                          const std::vector<std::vector<double>>& contrib) {
    const std::size_t n = values.size();
    ModelState s;
    s.waves.assign(n, 0.0);
    for (const auto& c : contrib) {
        for (std::size_t i = 0; i < n; ++i) {
            s.waves[i] += c[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        s.intercept += values[i] - s.waves[i];
    }
    s.intercept /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = values[i] - s.waves[i] - s.intercept;
        s.rss += e * e;
    }
    return s;
}

}  // namespace

BackfitResult backfit(const SingleFmmFitter& fitter, std::span<const double> values,
                      std::size_t k, std::span<const Component> init, std::size_t passes,
                      double rel_tol) {
    const auto times = fitter.times();
    if (k == 0) {
        throw std::invalid_argument("backfit: at least one component is required");
    }
    if (init.size() > k) {
        throw std::invalid_argument("backfit: more initial components than slots");
    }
    if (values.size() != times.size()) {
        throw std::invalid_argument("backfit: values and times differ in length");
    }
    const std::size_t n = values.size();

    BackfitResult result;
    result.components.assign(k, Component{});
    std::copy(init.begin(), init.end(), result.components.begin());
    std::vector<std::vector<double>> contrib(k);
    for (std::size_t j = 0; j < k; ++j) {
        contrib[j] = wave_samples(result.components[j], times);
    }

    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double tss = 0.0;
    for (double v : values) {
        tss += (v - mean) * (v - mean);
    }

    ModelState state = evaluate_state(values, contrib);
    result.rss_trace.push_back(state.rss);

    std::vector<double> target(n);
    for (std::size_t pass = 0; pass < passes; ++pass) {
        const double rss_before = state.rss;
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                target[i] = values[i] - (state.waves[i] - contrib[j][i]);
            }
            const Component& current = result.components[j];
            std::optional<WaveParams> seed;
            if (current.present()) {
                seed = current.params;
            }
            SingleFit f = fitter.fit(target, seed);
            result.components[j] = f.component;
            contrib[j] = wave_samples(f.component, times);
            state = evaluate_state(values, contrib);
            result.rss_trace.push_back(state.rss);
        }
        ++result.passes_run;
        if (rss_before - state.rss <= rel_tol * tss) {
            break;
        }
    }
    result.intercept = state.intercept;
    result.rss = state.rss;

    // Incremental PV in slot order; R² of the first j waves with their LS intercept.
    if (tss > 0.0) {
        std::vector<std::vector<double>> partial;
        double previous = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            partial.push_back(contrib[j]);
            const double r2 = 1.0 - evaluate_state(values, partial).rss / tss;
            result.components[j].pv = r2 - previous;
            previous = r2;
        }
    }
    return result;
}

BackfitResult backfit(const Beat& beat, std::size_t k, std::span<const Component> init,
                      std::size_t passes, const SingleFitOptions& options) {
    const SingleFmmFitter fitter(beat.times(), options);
    return backfit(fitter, beat.values(), k, init, passes);
}

}  // namespace fmmbeat
