#include "support.h"

#include "fmmbeat/ingest.h"
#include "fmmbeat/presets.h"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace fmmbeat;

namespace {

RawRecord ramp_record(std::size_t n, double fs = 250.0) {
    RawRecord r;
    r.fs = fs;
    r.record_id = "ramp";
    for (std::size_t i = 0; i < n; ++i) {
        r.samples.push_back(0.001 * static_cast<double>(i));
    }
    return r;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::pair<double, double> anchor_medians(const Beat& b) {
    const auto v = b.values();
    const auto k = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(v.size())));
    return {median({v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k)}),
            median({v.end() - static_cast<std::ptrdiff_t>(k), v.end()})};
}

Beat add_line(const Beat& b, double offset, double slope) {
    std::vector<double> v(b.values().begin(), b.values().end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] += offset + slope * b.times()[i];
    }
    return b.with_values(v);
}

void check_equal_up_to_constant(const Beat& a, const Beat& b, double tol) {
    const double shift = a.values()[0] - b.values()[0];
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a.values()[i] - b.values()[i] - shift) < tol);
    }
}

}  // namespace

TEST_CASE("segmentation window arithmetic") {
    const RawRecord rec = ramp_record(2000);
    QrsAnnotations ann;
    ann.indices = {500, 1000, 1600};
    const auto w = segment(rec, ann, 1);
    REQUIRE(w.has_value());
    CHECK(w->first == 800);
    CHECK(w->last == 1360);
    CHECK(w->qrs == 1000);
}

TEST_CASE("equal RR intervals give a window of RR + 1 samples") {
    for (std::size_t rr : {250U, 333U, 401U, 1000U}) {
        CAPTURE(rr);
        const std::vector<std::size_t> qrs{100, 100 + rr, 100 + 2 * rr};
        const auto w = segment_indices(qrs, 1, 100 + 4 * rr);
        REQUIRE(w.has_value());
        CHECK(w->size() == rr + 1);
    }
}

TEST_CASE("segmentation rounds to the nearest sample and clips to the record") {
    CHECK(*segment_indices(std::vector<std::size_t>{5, 10, 15}, 1, 100) == SampleWindow{8, 13, 10});
    // 10 − 2.8 and 10 + 1.8
    CHECK(*segment_indices(std::vector<std::size_t>{3, 10, 13}, 1, 100) == SampleWindow{7, 12, 10});
    CHECK(*segment_indices(std::vector<std::size_t>{15, 40, 65}, 1, 50) == SampleWindow{30, 49, 40});
    CHECK(segment_indices(std::vector<std::size_t>{995, 1000, 1011}, 1, 2000)->last == 1007);
    CHECK(segment_indices(std::vector<std::size_t>{995, 1000, 1004}, 1, 2000)->last == 1002);
}

TEST_CASE("boundary beats are skipped") {
    const std::vector<std::size_t> qrs{100, 400, 700};
    CHECK_FALSE(segment_indices(qrs, 0, 1000).has_value());
    CHECK_FALSE(segment_indices(qrs, 2, 1000).has_value());
    CHECK(segment_indices(qrs, 1, 1000).has_value());
}

TEST_CASE("adjacent windows share a boundary") {
    const std::vector<std::size_t> qrs{100, 347, 612, 871, 1130, 1402};
    for (std::size_t b = 1; b + 2 < qrs.size(); ++b) {
        const auto here = segment_indices(qrs, b, 2000);
        const auto next = segment_indices(qrs, b + 1, 2000);
        CHECK(here->last == next->first);
    }
}

TEST_CASE("annotation validation") {
    QrsAnnotations ann;
    ann.indices = {10, 10, 30};
    CHECK_THROWS_AS(ann.validate(100), std::invalid_argument);
    ann.indices = {10, 20, 100};
    CHECK_THROWS_AS(ann.validate(100), std::invalid_argument);
    ann.indices = {10, 20, 99};
    CHECK_NOTHROW(ann.validate(100));

    RawRecord rec;
    rec.fs = 0.0;
    rec.samples = {1.0};
    CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
    rec.fs = 100.0;
    rec.samples.clear();
    CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
}

TEST_CASE("phase normalization") {
    const RawRecord rec = ramp_record(1000);
    const SampleWindow w{100, 150, 120};  // 51 samples
    const Beat b = normalize_phase(rec, w);
    REQUIRE(b.size() == 51);
    CHECK(b.times()[0] == 0.0);
    CHECK(b.times()[25] == doctest::Approx(kPi * 50.0 / 51.0).epsilon(1e-15));
    CHECK(b.values()[0] == rec.samples[100]);
    CHECK(b.values()[50] == rec.samples[150]);
    CHECK(b.qrs_phase() == doctest::Approx(kTwoPi * 20.0 / 51.0).epsilon(1e-15));
    CHECK(b.fs() == 250.0);
    for (std::size_t i = 1; i < b.size(); ++i) {
        CHECK(b.times()[i] > b.times()[i - 1]);
    }
    CHECK(b.times().back() < kTwoPi);

    for (double phase : {0.0, 0.3, 2.0, 6.2}) {
        CHECK(b.seconds_to_phase(b.phase_to_seconds(phase)) == doctest::Approx(phase).epsilon(1e-12));
        CHECK(sample_to_phase(w, phase_to_sample(w, phase)) == doctest::Approx(phase).epsilon(1e-12));
    }
    // one sample of phase is one sample period
    CHECK(b.phase_to_seconds(kTwoPi / 51.0) == doctest::Approx(1.0 / 250.0).epsilon(1e-12));

    CHECK_THROWS_AS(normalize_phase(rec, SampleWindow{100, 118, 110}), std::invalid_argument);
    CHECK_THROWS_AS(normalize_phase(rec, SampleWindow{990, 1010, 1000}), std::invalid_argument);
}

TEST_CASE("detrend") {
    const Beat beat = synth_beat(perturb(*preset("NORMAL"), 4, 0.1), 250, 0.01, 4);

    SUBCASE("output anchors agree") {
        const Beat d = detrend(add_line(beat, 0.3, 0.17));
        const auto [first, last] = anchor_medians(d);
        CHECK(std::abs(first - last) < 1e-9);
    }
    SUBCASE("a flat beat is left as is") {
        std::vector<double> v(100, 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = std::sin(kTwoPi * static_cast<double>(i) / 100.0) * (i > 10 && i < 90 ? 1.0 : 0.0);
        }
        const Beat flat(test::phase_grid(100), v, 100.0, 1.0);
        check_equal_up_to_constant(detrend(flat), flat, 1e-12);
    }
    SUBCASE("an added ramp is removed") {
        for (double slope : {-0.5, 0.02, 1.3}) {
            check_equal_up_to_constant(detrend(add_line(beat, 2.0, slope)), detrend(beat), 1e-9);
        }
    }
    SUBCASE("a ramp over anchor-balanced data is recovered exactly") {
        std::vector<double> v(200, 0.0);
        for (std::size_t i = 20; i < 180; ++i) {
            v[i] = std::sin(kPi * static_cast<double>(i - 20) / 160.0);
        }
        const Beat base(test::phase_grid(200), v, 200.0, 1.0);
        check_equal_up_to_constant(detrend(add_line(base, -1.0, 0.4)), base, 1e-9);
    }
    SUBCASE("idempotent") {
        const Beat once = detrend(add_line(beat, 0.0, 0.3));
        const Beat twice = detrend(once);
        for (std::size_t i = 0; i < once.size(); ++i) {
            CHECK(std::abs(once.values()[i] - twice.values()[i]) < 1e-9);
        }
    }
    SUBCASE("commutes with adding a constant") {
        check_equal_up_to_constant(detrend(add_line(beat, 5.0, 0.0)), detrend(beat), 1e-9);
        const Beat a = detrend(add_line(beat, 5.0, 0.0));
        const Beat b = detrend(beat);
        CHECK(a.values()[0] - b.values()[0] == doctest::Approx(5.0).epsilon(1e-9));
    }
}

TEST_CASE("signal CSV") {
    std::istringstream with_header("value\n0.5\n-1.25\n3e-2\n");
    CHECK(read_signal_csv(with_header) == std::vector<double>{0.5, -1.25, 0.03});
    std::istringstream bare("1\n2\r\n\n3\n");
    CHECK(read_signal_csv(bare) == std::vector<double>{1.0, 2.0, 3.0});
    std::istringstream bad("value\n1.0\nabc\n");
    try {
        read_signal_csv(bad);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("annotation CSV") {
    std::istringstream plain("100,QRS\n80,P\n400,QRS\n700,QRS\n460.4,T\n");
    const auto rows = read_annotation_rows(plain);
    REQUIRE(rows.size() == 5);
    CHECK(rows[3].sample == 700.0);
    CHECK_FALSE(rows[0].beat.has_value());

    const QrsAnnotations ann = to_annotations(rows);
    CHECK(ann.indices == std::vector<std::size_t>{100, 400, 700});
    CHECK(ann.reference.at(WaveLabel::P) == std::vector<double>{80.0});
    CHECK(ann.reference.at(WaveLabel::T) == std::vector<double>{460.4});

    std::istringstream reordered("label,beat,sample\nQRS,0,10\nR,0,11\n");
    const auto r2 = read_annotation_rows(reordered);
    REQUIRE(r2.size() == 2);
    CHECK(r2[1].label == "R");
    CHECK(r2[1].sample == 11.0);
    CHECK(r2[1].beat == std::optional<std::size_t>{0});

    std::istringstream unsorted("sample,label\n300,QRS\n100.6,QRS\n");
    CHECK(to_annotations(read_annotation_rows(unsorted)).indices == std::vector<std::size_t>{101, 300});

    std::istringstream dup("sample,label\n100,QRS\n100.2,QRS\n");
    CHECK_THROWS_AS(to_annotations(read_annotation_rows(dup)), std::runtime_error);
    std::istringstream odd("sample,label\n100,QRS\n120,U\n");
    CHECK_THROWS_AS(to_annotations(read_annotation_rows(odd)), std::runtime_error);
    std::istringstream broken("sample,label\nx,QRS\n");
    CHECK_THROWS_AS(read_annotation_rows(broken), std::runtime_error);
}
