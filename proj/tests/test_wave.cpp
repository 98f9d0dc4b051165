#include "support.h"

#include "fmmbeat/presets.h"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fmmbeat;

namespace {

// Literal transcription of the wave formula in extended precision.
long double wave_oracle(long double A, long double alpha, long double beta, long double omega,
                        long double t) {
    return A * std::cos(beta + 2.0L * std::atan(omega * std::tan((t - alpha) / 2.0L)));
}

double grid_argmax(const WaveParams& p, std::size_t n, bool minimize = false) {
    double best_t = 0.0;
    double best = minimize ? INFINITY : -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        const double v = eval_wave(p, t);
        if (minimize ? v < best : v > best) {
            best = v;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace

TEST_CASE("eval_wave with unit sharpness is a reversed cosine") {
    CHECK(eval_wave({1.0, 0.0, kPi, 1.0}, 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
    for (double t = 0.0; t < kTwoPi; t += 0.1) {
        CHECK(eval_wave({1.0, 0.0, kPi, 1.0}, t) == doctest::Approx(-std::cos(t)).epsilon(1e-12));
    }
}

TEST_CASE("eval_wave matches an extended-precision transcription") {
    const double v = eval_wave({2.0, 1.0, 4.0, 0.1}, 1.3);
    CHECK(std::abs(v - static_cast<double>(wave_oracle(2.0L, 1.0L, 4.0L, 0.1L, 1.3L))) < 1e-13);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> t_dist(0.0, kTwoPi);
    for (int k = 0; k < 500; ++k) {
        const WaveParams p = test::random_wave(rng);
        const double t = t_dist(rng);
        const long double ref = wave_oracle(p.A, p.alpha, p.beta, p.omega, t);
        CHECK(std::abs(eval_wave(p, t) - static_cast<double>(ref)) < 1e-9 * p.A);
    }
}

TEST_CASE("eval_wave is finite at the tangent singularity") {
    const WaveParams p{1.5, 0.7, 2.0, 0.3};
    CHECK(eval_wave(p, 0.7 + kPi) == doctest::Approx(1.5 * std::cos(2.0 + kPi)).epsilon(1e-12));
}

TEST_CASE("crest and trough reach plus and minus A") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 1000; ++k) {
        const WaveParams p = test::random_wave(rng);
        CHECK(std::abs(eval_wave(p, crest_time(p)) - p.A) < 1e-9);
        CHECK(std::abs(eval_wave(p, trough_time(p)) + p.A) < 1e-9);
    }
}

TEST_CASE("crest_time closed forms") {
    CHECK(crest_time({1.0, 2.5, 0.0, 0.07}) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(crest_time({1.0, 2.5, 4.0, 1.0}) == doctest::Approx(wrap_angle(2.5 - 4.0)).epsilon(1e-14));
    CHECK(crest_time({1.0, 4.0, 1.0, 1.0}) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("crest_time agrees with a million-point grid argmax") {
    const WaveParams p{1.0, 2.0, 5.0, 0.05};
    const std::size_t n = 1'000'000;
    const double step = kTwoPi / static_cast<double>(n);
    CHECK(circular_distance(grid_argmax(p, n), crest_time(p)) <= step);
    CHECK(circular_distance(grid_argmax(p, n, true), trough_time(p)) <= step);
}

TEST_CASE("random waves: grid extrema within one step of the closed forms") {
    std::mt19937_64 rng(5);
    const std::size_t n = 100'000;
    const double step = kTwoPi / static_cast<double>(n);
    for (int k = 0; k < 50; ++k) {
        const WaveParams p = test::random_wave(rng);
        CHECK(circular_distance(grid_argmax(p, n), crest_time(p)) <= step);
        CHECK(circular_distance(grid_argmax(p, n, true), trough_time(p)) <= step);
    }
}

TEST_CASE("periodicity and boundedness") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> t_dist(-20.0, 20.0);
    for (int k = 0; k < 200; ++k) {
        const WaveParams p = test::random_wave(rng);
        const double t = t_dist(rng);
        CHECK(std::abs(eval_wave(p, t) - eval_wave(p, t + kTwoPi)) < 1e-12 * std::max(1.0, std::abs(t)));
        CHECK(std::abs(eval_wave(p, t)) <= p.A * (1.0 + 1e-15));
    }
}

TEST_CASE("warped phase is nondecreasing and winds once per period") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 20; ++k) {
        const WaveParams p = test::random_wave(rng);
        const std::size_t n = 20'000;
        double previous = mobius_phase(p.alpha, p.omega, 0.0);
        double total = 0.0;
        double min_step = INFINITY;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
            const double phi = mobius_phase(p.alpha, p.omega, t);
            double d = phi - previous;
            // the representation jumps by −2π once per period
            if (d < -kPi) {
                d += kTwoPi;
            }
            min_step = std::min(min_step, d);
            total += d;
            previous = phi;
        }
        CHECK(min_step >= -1e-12);
        CHECK(total == doctest::Approx(kTwoPi).epsilon(1e-12));
    }
}

TEST_CASE("eval_model sums the present waves") {
    FmmEcgParams empty;
    empty.M = 0.5;
    CHECK(eval_model(empty, 1.234) == 0.5);

    FmmEcgParams one;
    one.M = -0.2;
    one[WaveLabel::T] = WaveParams{0.3, 1.0, 3.0, 0.3};
    CHECK(eval_model(one, 2.0) == doctest::Approx(-0.2 + eval_wave(*one[WaveLabel::T], 2.0)).epsilon(1e-15));

    const FmmEcgParams normal = *preset("NORMAL");
    const auto grid = test::phase_grid(1000);
    const auto model = eval_model(normal, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = normal.M;
        for (WaveLabel l : kAllLabels) {
            sum += eval_wave(*normal[l], grid[i]);
        }
        CHECK(model[i] == doctest::Approx(sum).epsilon(1e-13));
    }
}

TEST_CASE("presets keep the circular label order") {
    for (auto name : preset_names()) {
        CAPTURE(name);
        CHECK(in_circular_order(*preset(name)));
    }
    FmmEcgParams swapped = *preset("NORMAL");
    std::swap(swapped[WaveLabel::P], swapped[WaveLabel::T]);
    CHECK_FALSE(in_circular_order(swapped));
}

TEST_CASE("fiducial polarity") {
    FmmEcgParams m;
    m[WaveLabel::R] = WaveParams{1.0, 2.0, kPi, 0.05};
    auto marks = fiducial_marks(m);
    REQUIRE(marks.size() == 1);
    CHECK(marks[0].kind == MarkKind::Crest);
    CHECK(marks[0].phase == doctest::Approx(crest_time(*m[WaveLabel::R])));

    m[WaveLabel::R]->beta = 0.05;
    marks = fiducial_marks(m);
    CHECK(marks[0].kind == MarkKind::Trough);
    CHECK(marks[0].phase == doctest::Approx(trough_time(*m[WaveLabel::R])));

    m[WaveLabel::R]->beta = 0.0;
    CHECK(fiducial_marks(m)[0].kind == MarkKind::Trough);
}

TEST_CASE("fiducial marks of a normal beat sit on the isolated-wave extrema") {
    const FmmEcgParams normal = *preset("NORMAL");
    const auto marks = fiducial_marks(normal);
    REQUIRE(marks.size() == 5);
    const std::size_t n = 100'000;
    const double step = kTwoPi / static_cast<double>(n);
    for (const FiducialMark& mark : marks) {
        const WaveParams& w = *normal[mark.label];
        const double oracle = grid_argmax(w, n, mark.kind == MarkKind::Trough);
        CAPTURE(to_string(mark.label));
        CHECK(circular_distance(oracle, mark.phase) <= step);
        CHECK(mark.value == doctest::Approx(eval_model(normal, mark.phase)));
    }
    CHECK(marks[0].kind == MarkKind::Crest);   // P
    CHECK(marks[1].kind == MarkKind::Trough);  // Q
    CHECK(marks[2].kind == MarkKind::Crest);   // R
    CHECK(marks[3].kind == MarkKind::Trough);  // S
    CHECK(marks[4].kind == MarkKind::Crest);   // T
}

TEST_CASE("absent waves yield no mark") {
    const auto marks = fiducial_marks(*preset("PVC"));
    CHECK(marks.size() == 4);
    for (const auto& m : marks) {
        CHECK(m.label != WaveLabel::P);
    }
}

TEST_CASE("synth_beat") {
    const FmmEcgParams normal = *preset("NORMAL");

    SUBCASE("noiseless values equal the model") {
        const Beat b = synth_beat(normal, 250, 0.0, 1);
        for (std::size_t i = 0; i < b.size(); ++i) {
            CHECK(b.times()[i] == kTwoPi * static_cast<double>(i) / 250.0);
            CHECK(b.values()[i] == eval_model(normal, b.times()[i]));
        }
        CHECK(b.qrs_phase() == crest_time(*normal[WaveLabel::R]));
        CHECK(b.fs() == 250.0);
    }
    SUBCASE("seeded") {
        CHECK(synth_beat(normal, 300, 0.05, 42) == synth_beat(normal, 300, 0.05, 42));
        CHECK_FALSE(synth_beat(normal, 300, 0.05, 42) == synth_beat(normal, 300, 0.05, 43));
    }
    SUBCASE("noise standard deviation") {
        const std::size_t n = 100'000;
        const Beat b = synth_beat(normal, n, 0.1, 9);
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = b.values()[i] - eval_model(normal, b.times()[i]);
            sum += e;
            sq += e * e;
        }
        const double mean = sum / static_cast<double>(n);
        const double sd = std::sqrt((sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
        CHECK(std::abs(sd / 0.1 - 1.0) < 0.01);
    }
    SUBCASE("an R wave is required") {
        FmmEcgParams no_r = normal;
        no_r[WaveLabel::R].reset();
        CHECK_THROWS_AS(synth_beat(no_r, 250, 0.0, 1), std::invalid_argument);
    }
}

TEST_CASE("Beat validation") {
    const auto t = test::phase_grid(25);
    const std::vector<double> v(25, 1.0);
    CHECK_NOTHROW(Beat(t, v, 250.0, 1.0));
    CHECK_THROWS_AS(Beat(test::phase_grid(19), std::vector<double>(19, 1.0), 250.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(Beat(t, std::vector<double>(24, 1.0), 250.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Beat(t, v, 0.0, 1.0), std::invalid_argument);
    auto unordered = t;
    std::swap(unordered[3], unordered[4]);
    CHECK_THROWS_AS(Beat(unordered, v, 250.0, 1.0), std::invalid_argument);
    auto bad = v;
    bad[2] = NAN;
    CHECK_THROWS_AS(Beat(t, bad, 250.0, 1.0), std::invalid_argument);
}

TEST_CASE("label names") {
    for (WaveLabel l : kAllLabels) {
        CHECK(parse_label(to_string(l)) == l);
    }
    CHECK_FALSE(parse_label("QRS").has_value());
    CHECK_FALSE(parse_label("p").has_value());
}
