#include "fmmbeat/metrics.h"

#include "fmmbeat/angles.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fmmbeat {

namespace {

// Guards the inclusive boundary against ms ↔ sample conversion round-off.
constexpr double kBoundarySlackMs = 1e-9;

constexpr std::array<const char*, 4> kWaveFields = {"A", "alpha", "beta", "omega"};

std::optional<double> ratio(double num, double den) {
    if (den <= 0.0) {
        return std::nullopt;
    }
    return num / den;
}

std::string percent_cell(const std::optional<double>& v) {
    return v ? fmt::format("{:.2f}", *v) : std::string();
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') {
            cell.pop_back();
        }
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::vector<std::string> feature_header() {
    std::vector<std::string> h = {"record_id", "beat"};
    for (WaveLabel l : kAllLabels) {
        for (const char* f : kWaveFields) {
            h.push_back(fmt::format("{}_{}", f, to_string(l)));
        }
    }
    h.emplace_back("M");
    h.emplace_back("r2");
    return h;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size()) {
        throw std::runtime_error(fmt::format("features: bad number '{}' at line {}", cell, line_no));
    }
    return v;
}

}  // namespace

std::optional<double> DetectionCounts::se() const {
    return ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
}

std::optional<double> DetectionCounts::ppv() const {
    return ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
}

std::optional<double> DetectionCounts::der() const {
    return ratio(static_cast<double>(fp + fn), static_cast<double>(tp + fn));
}

std::optional<double> DetectionCounts::f1() const {
    return ratio(2.0 * static_cast<double>(tp), static_cast<double>(2 * tp + fp + fn));
}

DetectionCounts& DetectionCounts::operator+=(const DetectionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
}

DetectionCounts match_mark(std::optional<double> predicted_s, std::optional<double> reference_s,
                           double tol_ms) {
    DetectionCounts c;
    if (predicted_s && reference_s) {
        if (1000.0 * std::abs(*predicted_s - *reference_s) <= tol_ms + kBoundarySlackMs) {
            c.tp = 1;
        } else {
            c.fp = 1;
            c.fn = 1;
        }
    } else if (predicted_s) {
        c.fp = 1;
    } else if (reference_s) {
        c.fn = 1;
    }
    return c;
}

DetectionCounts match_mark_sets(std::vector<double> predicted_s, std::vector<double> reference_s,
                                double tol_ms) {
    if (predicted_s.size() <= 1 && reference_s.size() <= 1) {
        auto one = [](const std::vector<double>& v) {
            return v.empty() ? std::nullopt : std::optional<double>(v.front());
        };
        return match_mark(one(predicted_s), one(reference_s), tol_ms);
    }
    struct Pair {
        double distance;
        std::size_t p;
        std::size_t r;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < predicted_s.size(); ++p) {
        for (std::size_t r = 0; r < reference_s.size(); ++r) {
            const double d = 1000.0 * std::abs(predicted_s[p] - reference_s[r]);
            if (d <= tol_ms + kBoundarySlackMs) {
                pairs.push_back({d, p, r});
            }
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& a, const Pair& b) { return a.distance < b.distance; });
    std::vector<bool> p_used(predicted_s.size(), false);
    std::vector<bool> r_used(reference_s.size(), false);
    DetectionCounts c;
    for (const Pair& pr : pairs) {
        if (!p_used[pr.p] && !r_used[pr.r]) {
            p_used[pr.p] = true;
            r_used[pr.r] = true;
            ++c.tp;
        }
    }
    c.fp = predicted_s.size() - c.tp;
    c.fn = reference_s.size() - c.tp;
    return c;
}

DetectionCounts match_marks(std::optional<double> predicted_phase,
                            std::optional<double> reference_phase, double fs,
                            std::size_t beat_samples, double tol_ms) {
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw std::invalid_argument("match_marks: a positive sampling frequency is required");
    }
    if (beat_samples == 0) {
        throw std::invalid_argument("match_marks: beat length must be positive");
    }
    const double seconds_per_radian = static_cast<double>(beat_samples) / (kTwoPi * fs);
    auto to_s = [&](const std::optional<double>& p) -> std::optional<double> {
        if (!p) {
            return std::nullopt;
        }
        return *p * seconds_per_radian;
    };
    return match_mark(to_s(predicted_phase), to_s(reference_phase), tol_ms);
}

double round_half_up(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // The nudge absorbs representation error of values such as 96.585 (stored below).
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

Summary summarize(const DetectionCounts& counts) {
    auto pct = [](const std::optional<double>& f) -> std::optional<double> {
        if (!f) {
            return std::nullopt;
        }
        return round_half_up(100.0 * *f, 2);
    };
    return {pct(counts.se()), pct(counts.ppv()), pct(counts.der()), pct(counts.f1())};
}

void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "-"; };
    out << fmt::format("{:<6}{:>10}{:>8}{:>8}{:>8}{:>9}{:>9}{:>9}{:>9}\n", "Wave", "No. beats", "TP",
                       "FP", "FN", "Se", "PPV", "DER", "F1");
    for (const ReportRow& r : rows) {
        const Summary s = summarize(r.counts);
        out << fmt::format("{:<6}{:>10}{:>8}{:>8}{:>8}{:>9}{:>9}{:>9}{:>9}\n", r.wave, r.beats,
                           r.counts.tp, r.counts.fp, r.counts.fn, cell(s.se), cell(s.ppv),
                           cell(s.der), cell(s.f1));
    }
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "wave,beats,tp,fp,fn,se,ppv,der,f1\n";
    for (const ReportRow& r : rows) {
        const Summary s = summarize(r.counts);
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.wave, r.beats, r.counts.tp, r.counts.fp,
                           r.counts.fn, percent_cell(s.se), percent_cell(s.ppv), percent_cell(s.der),
                           percent_cell(s.f1));
    }
}

void export_features(std::ostream& out, const std::vector<FeatureRow>& rows) {
    const auto header = feature_header();
    out << fmt::format("{}\n", fmt::join(header, ","));
    for (const FeatureRow& row : rows) {
        if (row.record_id.find_first_of(",\n\r\"") != std::string::npos) {
            throw std::invalid_argument("features: record id may not contain ',', quotes or newlines");
        }
        std::vector<std::string> cells = {row.record_id, std::to_string(row.beat)};
        for (WaveLabel l : kAllLabels) {
            const auto& w = row.params[l];
            if (w) {
                for (double v : {w->A, w->alpha, w->beta, w->omega}) {
                    cells.push_back(fmt::format("{}", v));
                }
            } else {
                cells.insert(cells.end(), kWaveFields.size(), std::string());
            }
        }
        cells.push_back(fmt::format("{}", row.params.M));
        cells.push_back(fmt::format("{}", row.r2));
        out << fmt::format("{}\n", fmt::join(cells, ","));
    }
}

std::vector<FeatureRow> parse_features(std::istream& in) {
    const auto header = feature_header();
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw std::runtime_error("features: empty input");
    }
    ++line_no;
    if (split_cells(line) != header) {
        throw std::runtime_error("features: unexpected header");
    }
    std::vector<FeatureRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_cells(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error(fmt::format("features: expected {} cells at line {}",
                                                 header.size(), line_no));
        }
        FeatureRow row;
        row.record_id = cells[0];
        row.beat = static_cast<std::size_t>(parse_cell(cells[1], line_no));
        std::size_t c = 2;
        for (WaveLabel l : kAllLabels) {
            const bool empty = cells[c].empty() && cells[c + 1].empty() && cells[c + 2].empty() &&
                               cells[c + 3].empty();
            if (!empty) {
                row.params[l] = WaveParams{parse_cell(cells[c], line_no), parse_cell(cells[c + 1], line_no),
                                           parse_cell(cells[c + 2], line_no),
                                           parse_cell(cells[c + 3], line_no)};
            }
            c += kWaveFields.size();
        }
        row.params.M = parse_cell(cells[c], line_no);
        row.r2 = parse_cell(cells[c + 1], line_no);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fmmbeat
