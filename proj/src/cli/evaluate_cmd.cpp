#include "commands.h"

#include "fmmbeat/cli.h"
#include "fmmbeat/ingest.h"
#include "fmmbeat/metrics.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <vector>

namespace fmmbeat::cli {

namespace {

using BeatMarks = std::map<std::size_t, std::map<WaveLabel, std::vector<double>>>;

void check_labels(const std::vector<AnnotationRow>& predicted, const std::vector<AnnotationRow>& reference) {
    std::set<std::string> unknown;
    for (const auto* rows : {&predicted, &reference}) {
        for (const AnnotationRow& r : *rows) {
            if (r.label != "QRS" && !parse_label(r.label)) {
                unknown.insert(r.label);
            }
        }
    }
    if (!unknown.empty()) {
        throw InputError(fmt::format("unknown mark labels: {} (expected P, Q, R, S, T or QRS)",
                                     fmt::join(unknown, ", ")));
    }
}

bool all_have_beat(const std::vector<AnnotationRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const AnnotationRow& r) { return r.beat.has_value(); });
}

// Beat b owns [q_b − 0.4·RR−, q_b + 0.6·RR+); the outer beats extend to the record ends.
std::vector<double> tiling_bounds(const std::vector<AnnotationRow>& reference) {
    std::vector<double> qrs;
    for (const AnnotationRow& r : reference) {
        if (r.label == "QRS") {
            qrs.push_back(r.sample);
        }
    }
    if (qrs.empty()) {
        throw InputError("reference has neither beat indices nor QRS rows to pair marks by beat");
    }
    std::sort(qrs.begin(), qrs.end());
    std::vector<double> upper(qrs.size(), std::numeric_limits<double>::infinity());
    for (std::size_t b = 0; b + 1 < qrs.size(); ++b) {
        upper[b] = qrs[b] + 0.6 * (qrs[b + 1] - qrs[b]);
    }
    return upper;
}

BeatMarks group(const std::vector<AnnotationRow>& rows, const std::vector<double>* upper) {
    BeatMarks out;
    for (const AnnotationRow& r : rows) {
        const auto label = parse_label(r.label);
        if (!label) {
            continue;
        }
        std::size_t beat = 0;
        if (upper) {
            beat = static_cast<std::size_t>(std::upper_bound(upper->begin(), upper->end(), r.sample) -
                                            upper->begin());
        } else {
            beat = *r.beat;
        }
        out[beat][*label].push_back(r.sample);
    }
    return out;
}

}  // namespace

int run_evaluate(const EvaluateOptions& opt, std::ostream& out, spdlog::logger& log) {
    const auto predicted = read_annotation_rows_file(opt.predicted);
    const auto reference = read_annotation_rows_file(opt.reference);
    check_labels(predicted, reference);

    const bool by_index = all_have_beat(predicted) && all_have_beat(reference) && !reference.empty();
    std::vector<double> upper;
    if (!by_index) {
        upper = tiling_bounds(reference);
        log.info("pairing marks by QRS windows of the reference");
    }
    const BeatMarks pred = group(predicted, by_index ? nullptr : &upper);
    const BeatMarks ref = group(reference, by_index ? nullptr : &upper);

    std::set<std::size_t> beats;
    std::set<WaveLabel> waves;
    for (const BeatMarks* m : {&pred, &ref}) {
        for (const auto& [beat, per_label] : *m) {
            beats.insert(beat);
            for (const auto& [label, marks] : per_label) {
                waves.insert(label);
            }
        }
    }

    auto seconds = [&](const BeatMarks& m, std::size_t beat, WaveLabel label) {
        std::vector<double> s;
        if (const auto b = m.find(beat); b != m.end()) {
            if (const auto l = b->second.find(label); l != b->second.end()) {
                for (double sample : l->second) {
                    s.push_back(sample / opt.fs);
                }
            }
        }
        return s;
    };

    std::vector<ReportRow> rows;
    for (WaveLabel label : kAllLabels) {
        if (!waves.count(label)) {
            continue;
        }
        ReportRow row;
        row.wave = std::string(to_string(label));
        for (std::size_t beat : beats) {
            const auto r = seconds(ref, beat, label);
            if (!r.empty()) {
                ++row.beats;
            }
            row.counts += match_mark_sets(seconds(pred, beat, label), r, opt.tol_ms);
        }
        rows.push_back(std::move(row));
    }

    write_report_text(out, rows);
    if (!opt.out_dir.empty()) {
        std::ofstream csv = open_output(opt.out_dir, "report.csv");
        write_report_csv(csv, rows);
        std::ofstream txt = open_output(opt.out_dir, "report.txt");
        write_report_text(txt, rows);
    }
    return kExitOk;
}

}  // namespace fmmbeat::cli
