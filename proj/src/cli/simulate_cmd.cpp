#include "commands.h"

#include "fmmbeat/angles.h"
#include "fmmbeat/cli.h"
#include "fmmbeat/ingest.h"
#include "fmmbeat/json_io.h"
#include "fmmbeat/presets.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <vector>

namespace fmmbeat::cli {

namespace {

FmmEcgParams load_params(const SimulateOptions& opt) {
    if (!opt.preset.empty()) {
        const auto p = preset(opt.preset);
        if (!p) {
            throw InputError(fmt::format("unknown preset '{}'; choose one of {}", opt.preset,
                                         fmt::join(preset_names(), ", ")));
        }
        return *p;
    }
    std::ifstream in(opt.params);
    if (!in) {
        throw InputError("cannot open parameter file " + opt.params);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("{}: {}", opt.params, e.what()));
    }
    return params_from_json(j);
}

struct TruthMark {
    std::size_t beat;
    FiducialMark mark;
    double sample;  // exact record position
};

}  // namespace

int run_simulate(const SimulateOptions& opt, std::ostream& out, spdlog::logger& log) {
    const FmmEcgParams params = load_params(opt);
    const std::size_t n = opt.beat_samples;
    const std::size_t total_beats = opt.beats + 2;  // lead-in and lead-out beats are not fittable
    const std::size_t total = total_beats * n;
    const double samples_per_radian = static_cast<double>(n) / kTwoPi;

    std::vector<double> signal(total);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> noise(0.0, opt.noise_sd > 0.0 ? opt.noise_sd : 1.0);
    for (std::size_t s = 0; s < total; ++s) {
        const double phase = kTwoPi * static_cast<double>(s % n) / static_cast<double>(n);
        signal[s] = eval_model(params, phase) + (opt.noise_sd > 0.0 ? noise(rng) : 0.0);
    }

    const double r_crest = crest_time(*params[WaveLabel::R]);
    std::vector<std::size_t> qrs(total_beats);
    for (std::size_t k = 0; k < total_beats; ++k) {
        qrs[k] = k * n + static_cast<std::size_t>(std::llround(r_crest * samples_per_radian));
    }
    if (qrs.back() >= total) {
        qrs.back() = total - 1;
    }

    // Each reference mark belongs to the segmentation window that contains it.
    const std::vector<FiducialMark> marks = fiducial_marks(params);
    std::vector<TruthMark> truth;
    for (std::size_t k = 1; k + 1 < total_beats; ++k) {
        const auto window = segment_indices(qrs, k, total);
        for (const FiducialMark& m : marks) {
            const double offset = m.phase * samples_per_radian;
            for (std::size_t j = k - 1; j <= k + 1; ++j) {
                const double pos = static_cast<double>(j * n) + offset;
                if (pos >= static_cast<double>(window->first) && pos <= static_cast<double>(window->last)) {
                    FiducialMark local = m;
                    local.phase = sample_to_phase(*window, pos);
                    truth.push_back({k, local, pos});
                    break;
                }
            }
        }
    }

    std::ofstream sig = open_output(opt.out_dir, "signal.csv");
    sig << "value\n";
    for (double v : signal) {
        sig << fmt::format("{}\n", v);
    }

    std::ofstream ann = open_output(opt.out_dir, "annotations.csv");
    ann << "sample,label,beat\n";
    std::size_t next_mark = 0;
    for (std::size_t k = 0; k < total_beats; ++k) {
        ann << fmt::format("{},QRS,{}\n", qrs[k], k);
        for (; next_mark < truth.size() && truth[next_mark].beat == k; ++next_mark) {
            const TruthMark& t = truth[next_mark];
            ann << fmt::format("{},{},{}\n", std::llround(t.sample), to_string(t.mark.label), k);
        }
    }

    nlohmann::json jm = nlohmann::json::array();
    for (const TruthMark& t : truth) {
        nlohmann::json m = t.mark;
        m["beat"] = t.beat;
        m["sample"] = t.sample;
        jm.push_back(std::move(m));
    }
    const nlohmann::json doc = {{"source", opt.preset.empty() ? opt.params : opt.preset},
                                {"params", params},
                                {"fs", opt.fs},
                                {"beat_samples", n},
                                {"beats", opt.beats},
                                {"lead_in_beats", 1},
                                {"noise_sd", opt.noise_sd},
                                {"seed", opt.seed},
                                {"qrs", qrs},
                                {"marks", jm}};
    open_output(opt.out_dir, "truth.json") << doc.dump(2) << '\n';

    log.info("wrote {} beats ({} samples) to {}", total_beats, total, opt.out_dir);
    out << fmt::format("simulated {} fittable beats plus 2 padding beats\n", opt.beats);
    return kExitOk;
}

}  // namespace fmmbeat::cli
