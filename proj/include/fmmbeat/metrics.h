#pragma once

#include "fmmbeat/fitting.h"
#include "fmmbeat/wave.h"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fmmbeat {

inline constexpr double kDefaultToleranceMs = 75.0;

struct DetectionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    // Fractions; nullopt when the denominator is zero.
    std::optional<double> se() const;
    std::optional<double> ppv() const;
    std::optional<double> der() const;
    std::optional<double> f1() const;

    DetectionCounts& operator+=(const DetectionCounts& other);
    friend DetectionCounts operator+(DetectionCounts a, const DetectionCounts& b) { return a += b; }
    bool operator==(const DetectionCounts&) const = default;
};

/// Scores one wave of one beat, positions in seconds. A prediction within
/// tol_ms (inclusive) of the reference is a TP; a prediction out of range
/// counts once as FP and once as FN.
DetectionCounts match_mark(std::optional<double> predicted_s, std::optional<double> reference_s,
                           double tol_ms = kDefaultToleranceMs);

/// Several marks of one wave in one beat: closest in-range pairs are matched
/// first; leftovers are FP (predicted) and FN (reference). Positions in seconds.
DetectionCounts match_mark_sets(std::vector<double> predicted_s, std::vector<double> reference_s,
                                double tol_ms = kDefaultToleranceMs);

/// Same on beat phases; fs and the beat length convert the tolerance.
/// Throws std::invalid_argument when fs is not positive.
DetectionCounts match_marks(std::optional<double> predicted_phase,
                            std::optional<double> reference_phase, double fs,
                            std::size_t beat_samples, double tol_ms = kDefaultToleranceMs);

/// Percentages rounded half-up to two decimals.
struct Summary {
    std::optional<double> se;
    std::optional<double> ppv;
    std::optional<double> der;
    std::optional<double> f1;
};

Summary summarize(const DetectionCounts& counts);

double round_half_up(double value, int decimals);

struct ReportRow {
    std::string wave;
    std::size_t beats = 0;  // beats carrying a reference mark for this wave
    DetectionCounts counts;
};

/// Aligned text table: Wave, No. beats, TP, FP, FN, Se, PPV, DER, F1.
void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows);
/// Same columns as CSV; undefined ratios are empty cells.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

struct FeatureRow {
    std::string record_id;
    std::size_t beat = 0;
    FmmEcgParams params;  // sigma2 is not exported
    double r2 = 0.0;
};

/// Header: record_id, beat, then A/alpha/beta/omega per label P..T, M, r2.
/// Absent waves leave their four cells empty. Full precision.
void export_features(std::ostream& out, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_features(std::istream& in);

}  // namespace fmmbeat
