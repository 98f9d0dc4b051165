#include "fmmbeat/ingest.h"

#include "fmmbeat/angles.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace fmmbeat {

namespace {

constexpr std::size_t kMinWindow = 20;
constexpr double kAnchorFraction = 0.05;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::optional<double> to_number(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    try {
        const double v = std::stod(text, &used);
        if (used == text.size() && std::isfinite(v)) {
            return v;
        }
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

std::runtime_error bad_line(const char* what, std::size_t line_no, const std::string& line) {
    return std::runtime_error(std::string(what) + " at line " + std::to_string(line_no) + ": '" +
                              line + "'");
}

// Half-up rounding of (10·q + k·rr) / 10 in integers, so neighbouring windows
// that share a boundary round it identically.
long long round_tenths(long long tenths) {
    const long long shifted = tenths + 5;
    return shifted >= 0 ? shifted / 10 : -((-shifted + 9) / 10);
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double block_median(std::span<const double> times, std::span<const double> values,
                    std::size_t from, std::size_t count, double slope) {
    std::vector<double> block(count);
    for (std::size_t i = 0; i < count; ++i) {
        block[i] = values[from + i] - slope * times[from + i];
    }
    return median(std::move(block));
}

}  // namespace

void RawRecord::validate() const {
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw std::invalid_argument("record: sampling frequency must be positive");
    }
    if (samples.empty()) {
        throw std::invalid_argument("record: no samples");
    }
}

void QrsAnnotations::validate(std::size_t record_size) const {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= record_size) {
            throw std::invalid_argument("annotations: QRS index " + std::to_string(indices[i]) +
                                        " is outside the record");
        }
        if (i > 0 && indices[i] <= indices[i - 1]) {
            throw std::invalid_argument("annotations: QRS indices must be strictly increasing");
        }
    }
}

std::optional<SampleWindow> segment_indices(std::span<const std::size_t> qrs, std::size_t beat_index,
                                            std::size_t record_size) {
    if (beat_index == 0 || beat_index + 1 >= qrs.size() || record_size == 0) {
        return std::nullopt;
    }
    const auto q = static_cast<long long>(qrs[beat_index]);
    const long long rr_prev = q - static_cast<long long>(qrs[beat_index - 1]);
    const long long rr_next = static_cast<long long>(qrs[beat_index + 1]) - q;
    const long long first = round_tenths(10 * q - 4 * rr_prev);
    const long long last = round_tenths(10 * q + 6 * rr_next);
    const long long max_index = static_cast<long long>(record_size) - 1;
    SampleWindow w;
    w.first = static_cast<std::size_t>(std::clamp(first, 0LL, max_index));
    w.last = static_cast<std::size_t>(std::clamp(last, 0LL, max_index));
    w.qrs = qrs[beat_index];
    return w;
}

std::optional<SampleWindow> segment(const RawRecord& record, const QrsAnnotations& ann,
                                    std::size_t beat_index) {
    record.validate();
    ann.validate(record.samples.size());
    return segment_indices(ann.indices, beat_index, record.samples.size());
}

double sample_to_phase(const SampleWindow& window, double sample) {
    return kTwoPi * (sample - static_cast<double>(window.first)) / static_cast<double>(window.size());
}

double phase_to_sample(const SampleWindow& window, double phase) {
    return static_cast<double>(window.first) + phase * static_cast<double>(window.size()) / kTwoPi;
}

Beat normalize_phase(const RawRecord& record, const SampleWindow& window) {
    record.validate();
    if (window.last < window.first || window.last >= record.samples.size()) {
        throw std::invalid_argument("normalize_phase: window lies outside the record");
    }
    const std::size_t n = window.size();
    if (n < kMinWindow) {
        throw std::invalid_argument("normalize_phase: window has " + std::to_string(n) +
                                    " samples, at least 20 are required");
    }
    std::vector<double> times(n);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        times[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        values[i] = record.samples[window.first + i];
    }
    return Beat(std::move(times), std::move(values), record.fs,
                wrap_angle(sample_to_phase(window, static_cast<double>(window.qrs))));
}

Beat detrend(const Beat& beat) {
    const auto times = beat.times();
    const auto values = beat.values();
    const std::size_t n = times.size();
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(kAnchorFraction * static_cast<double>(n))));
    const std::size_t tail = n - count;

    // g(s) = median(last block) − median(first block) of values − s·t is
    // strictly decreasing in s, with slope at most −gap.
    auto g = [&](double s) {
        return block_median(times, values, tail, count, s) - block_median(times, values, 0, count, s);
    };
    const double gap = times[tail] - times[count - 1];
    const double g0 = g(0.0);
    double slope = 0.0;
    if (g0 != 0.0) {
        double lo = g0 > 0.0 ? 0.0 : g0 / gap;
        double hi = g0 > 0.0 ? g0 / gap : 0.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            (g(mid) > 0.0 ? lo : hi) = mid;
        }
        slope = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
    }
    std::vector<double> out(values.begin(), values.end());
    for (std::size_t i = 0; i < n; ++i) {
        out[i] -= slope * times[i];
    }
    return beat.with_values(std::move(out));
}

std::vector<double> read_signal_csv(std::istream& in) {
    std::vector<double> samples;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto cells = split_commas(body);
        const auto v = to_number(cells.front());
        if (!v) {
            if (!seen_content && cells.front() == "value") {
                seen_content = true;
                continue;
            }
            throw bad_line("signal: expected a number", line_no, line);
        }
        if (cells.size() != 1) {
            throw bad_line("signal: expected one value per row", line_no, line);
        }
        seen_content = true;
        samples.push_back(*v);
    }
    if (samples.empty()) {
        throw std::runtime_error("signal: no samples");
    }
    return samples;
}

std::vector<double> read_signal_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open signal file " + path);
    }
    return read_signal_csv(in);
}

std::vector<AnnotationRow> read_annotation_rows(std::istream& in) {
    std::vector<AnnotationRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_checked = false;
    std::size_t sample_col = 0;
    std::size_t label_col = 1;
    std::optional<std::size_t> beat_col;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto cells = split_commas(body);
        if (!header_checked) {
            header_checked = true;
            const auto has = [&](const char* name) { return std::find(cells.begin(), cells.end(), name); };
            if (has("sample") != cells.end() && has("label") != cells.end()) {
                sample_col = static_cast<std::size_t>(has("sample") - cells.begin());
                label_col = static_cast<std::size_t>(has("label") - cells.begin());
                if (has("beat") != cells.end()) {
                    beat_col = static_cast<std::size_t>(has("beat") - cells.begin());
                }
                continue;
            }
        }
        const std::size_t needed = std::max({sample_col, label_col, beat_col.value_or(0)}) + 1;
        if (cells.size() < needed) {
            throw bad_line("annotations: too few columns", line_no, line);
        }
        AnnotationRow row;
        const auto sample = to_number(cells[sample_col]);
        if (!sample || *sample < 0.0) {
            throw bad_line("annotations: bad sample position", line_no, line);
        }
        row.sample = *sample;
        row.label = cells[label_col];
        if (row.label.empty()) {
            throw bad_line("annotations: empty label", line_no, line);
        }
        if (beat_col) {
            const auto b = to_number(cells[*beat_col]);
            if (!b || *b < 0.0 || *b != std::floor(*b)) {
                throw bad_line("annotations: bad beat index", line_no, line);
            }
            row.beat = static_cast<std::size_t>(*b);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AnnotationRow> read_annotation_rows_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open annotation file " + path);
    }
    return read_annotation_rows(in);
}

QrsAnnotations to_annotations(const std::vector<AnnotationRow>& rows) {
    QrsAnnotations ann;
    for (const AnnotationRow& row : rows) {
        if (row.label == "QRS") {
            ann.indices.push_back(static_cast<std::size_t>(std::llround(row.sample)));
        } else if (const auto label = parse_label(row.label)) {
            ann.reference[*label].push_back(row.sample);
        } else {
            throw std::runtime_error("annotations: unknown label '" + row.label + "'");
        }
    }
    std::sort(ann.indices.begin(), ann.indices.end());
    if (std::adjacent_find(ann.indices.begin(), ann.indices.end()) != ann.indices.end()) {
        throw std::runtime_error("annotations: duplicate QRS index");
    }
    for (auto& [label, marks] : ann.reference) {
        std::sort(marks.begin(), marks.end());
    }
    return ann;
}

}  // namespace fmmbeat
