#pragma once

#include "fmmbeat/wave.h"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fmmbeat {

struct RawRecord {
    std::vector<double> samples;
    double fs = 0.0;
    std::string record_id;

    /// Throws std::invalid_argument when fs <= 0 or samples is empty.
    void validate() const;
};

/// QRS sample indices plus optional reference marks (sample positions, may be
/// fractional) for evaluation.
struct QrsAnnotations {
    std::vector<std::size_t> indices;
    std::map<WaveLabel, std::vector<double>> reference;

    /// Throws std::invalid_argument unless indices are strictly increasing and
    /// below record_size.
    void validate(std::size_t record_size) const;
};

/// Inclusive sample range of one beat.
struct SampleWindow {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t qrs = 0;

    std::size_t size() const { return last - first + 1; }
    bool operator==(const SampleWindow&) const = default;
};

/// [qrs − 0.4·RR−, qrs + 0.6·RR+], endpoints rounded half-up and clipped to the
/// record. Returns nullopt for the first and last annotated beats.
std::optional<SampleWindow> segment(const RawRecord& record, const QrsAnnotations& ann,
                                    std::size_t beat_index);

/// Same rule on bare indices; exposed for callers without a record.
std::optional<SampleWindow> segment_indices(std::span<const std::size_t> qrs, std::size_t beat_index,
                                            std::size_t record_size);

/// Maps window sample i to phase 2πi/n. Throws std::invalid_argument when the
/// window has fewer than 20 samples or lies outside the record.
Beat normalize_phase(const RawRecord& record, const SampleWindow& window);

/// Removes the line that equalizes the medians of the first and last 5% of
/// samples. The slope is found exactly, so the output anchors agree and a
/// second application changes nothing.
Beat detrend(const Beat& beat);

/// Window sample position (possibly fractional) of a phase within a beat.
double phase_to_sample(const SampleWindow& window, double phase);
double sample_to_phase(const SampleWindow& window, double sample);

/// One voltage per row, optional `value` header. Throws std::runtime_error on
/// malformed rows, naming the line.
std::vector<double> read_signal_csv(std::istream& in);
std::vector<double> read_signal_csv_file(const std::string& path);

/// A row of a `sample,label[,beat]` annotation file.
struct AnnotationRow {
    double sample = 0.0;
    std::string label;
    std::optional<std::size_t> beat;
};

/// Rows as written; header optional. Throws std::runtime_error on malformed rows.
std::vector<AnnotationRow> read_annotation_rows(std::istream& in);
std::vector<AnnotationRow> read_annotation_rows_file(const std::string& path);

/// QRS rows become indices (rounded to the nearest sample, then sorted); P..T
/// rows become reference marks. Other labels raise std::runtime_error.
QrsAnnotations to_annotations(const std::vector<AnnotationRow>& rows);

}  // namespace fmmbeat
