#include "commands.h"

#include "fmmbeat/cli.h"
#include "fmmbeat/fitting.h"
#include "fmmbeat/ingest.h"
#include "fmmbeat/json_io.h"
#include "fmmbeat/metrics.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

namespace fmmbeat::cli {

namespace {

struct BeatJob {
    std::size_t index = 0;  // position of the QRS annotation
    SampleWindow window;
};

struct BeatOutcome {
    std::optional<Beat> beat;
    FitReport report;
    std::vector<FiducialMark> marks;
    std::string failure;
};

BeatOutcome fit_one(const RawRecord& record, const BeatJob& job, const IStepConfig& cfg, bool detrend_beat) {
    BeatOutcome out;
    try {
        Beat beat = normalize_phase(record, job.window);
        if (detrend_beat) {
            beat = detrend(beat);
        }
        out.report = fit_beat(beat, cfg);
        out.marks = fiducial_marks(out.report.params);
        out.beat = std::move(beat);
    } catch (const std::exception& e) {
        // Unfittable, constant or too-short beats are skipped, not fatal.
        out.failure = e.what();
    }
    return out;
}

std::vector<BeatOutcome> fit_all(const RawRecord& record, const std::vector<BeatJob>& jobs,
                                 const IStepConfig& cfg, bool detrend_beat, unsigned workers) {
    std::vector<BeatOutcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            outcomes[k] = fit_one(record, jobs[k], cfg, detrend_beat);
        }
    };
    const unsigned n = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    return outcomes;
}

std::string beat_stem(std::size_t index) { return fmt::format("beat_{:04d}", index); }

void write_curve(std::ostream& f, const Beat& beat, const FitReport& rep) {
    f << "t,observed,fitted";
    for (WaveLabel l : kAllLabels) {
        f << ',' << to_string(l);
    }
    f << '\n';
    const auto times = beat.times();
    const auto values = beat.values();
    for (std::size_t i = 0; i < times.size(); ++i) {
        f << fmt::format("{},{},{}", times[i], values[i], eval_model(rep.params, times[i]));
        for (WaveLabel l : kAllLabels) {
            const auto& w = rep.params[l];
            f << ',' << (w ? fmt::format("{}", eval_wave(*w, times[i])) : std::string());
        }
        f << '\n';
    }
}

constexpr const char* kMarksHeader = "beat,label,kind,phase,sample,value\n";

void write_marks(std::ostream& f, std::size_t beat_index, const SampleWindow& window,
                 const std::vector<FiducialMark>& marks) {
    for (const FiducialMark& m : marks) {
        f << fmt::format("{},{},{},{},{},{}\n", beat_index, to_string(m.label), to_string(m.kind),
                         m.phase, phase_to_sample(window, m.phase), m.value);
    }
}

nlohmann::json beat_json(const std::string& record_id, const BeatJob& job, const BeatOutcome& o,
                         bool detrended) {
    nlohmann::json marks = nlohmann::json::array();
    for (const FiducialMark& m : o.marks) {
        nlohmann::json jm = m;
        jm["sample"] = phase_to_sample(job.window, m.phase);
        marks.push_back(std::move(jm));
    }
    return {{"record_id", record_id},
            {"beat", job.index},
            {"window", {{"first", job.window.first}, {"last", job.window.last}, {"qrs", job.window.qrs}}},
            {"fs", o.beat->fs()},
            {"qrs_phase", o.beat->qrs_phase()},
            {"detrended", detrended},
            {"report", o.report},
            {"marks", marks}};
}

}  // namespace

int run_fit(const FitOptions& opt, std::ostream& out, spdlog::logger& log) {
    RawRecord record;
    record.samples = read_signal_csv_file(opt.signal);
    record.fs = opt.fs;
    record.record_id =
        opt.record_id.empty() ? std::filesystem::path(opt.signal).stem().string() : opt.record_id;
    record.validate();
    const QrsAnnotations ann = to_annotations(read_annotation_rows_file(opt.annotations));
    ann.validate(record.samples.size());
    const IStepConfig cfg = opt.config.empty() ? IStepConfig{} : load_istep_config(opt.config);
    cfg.validate();

    std::vector<BeatJob> jobs;
    for (std::size_t i = 0; i < ann.indices.size(); ++i) {
        if (const auto w = segment_indices(ann.indices, i, record.samples.size())) {
            jobs.push_back({i, *w});
        } else {
            log.info("beat {} skipped: {} QRS annotation missing", i, i == 0 ? "preceding" : "following");
        }
    }

    const auto outcomes = fit_all(record, jobs, cfg, opt.detrend, opt.jobs);

    std::ofstream all_marks = open_output(opt.out_dir, "marks.csv");
    all_marks << kMarksHeader;
    std::vector<FeatureRow> features;
    std::size_t fitted = 0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const BeatJob& job = jobs[k];
        const BeatOutcome& o = outcomes[k];
        if (!o.beat) {
            log.warn("beat {} skipped: {}", job.index, o.failure);
            continue;
        }
        ++fitted;
        const std::string stem = beat_stem(job.index);
        open_output(opt.out_dir, stem + ".json") << beat_json(record.record_id, job, o, opt.detrend).dump(2)
                                                 << '\n';
        std::ofstream curve = open_output(opt.out_dir, stem + "_curve.csv");
        write_curve(curve, *o.beat, o.report);
        std::ofstream marks = open_output(opt.out_dir, stem + "_marks.csv");
        marks << kMarksHeader;
        write_marks(marks, job.index, job.window, o.marks);
        write_marks(all_marks, job.index, job.window, o.marks);
        features.push_back({record.record_id, job.index, o.report.params, o.report.r2});
    }
    std::ofstream feature_file = open_output(opt.out_dir, "features.csv");
    export_features(feature_file, features);

    out << fmt::format("fitted {} of {} annotated beats ({} eligible)\n", fitted, ann.indices.size(),
                       jobs.size());
    if (fitted == 0) {
        log.error("no beat could be fitted");
        return kExitNothingFitted;
    }
    return kExitOk;
}

}  // namespace fmmbeat::cli
