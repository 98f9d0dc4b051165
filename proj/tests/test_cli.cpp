#include "support.h"

#include "fmmbeat/cli.h"
#include "fmmbeat/ingest.h"
#include "fmmbeat/presets.h"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace fmmbeat;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "fmm-beat");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::string> files_in(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"fit", "signal.csv", "ann.csv"}).code == kExitUsage);
    CHECK(run({"evaluate", "a.csv", "b.csv"}).code == kExitUsage);
    CHECK(run({"simulate", "--beats", "2"}).code == kExitUsage);
    CHECK(run({"simulate", "--preset", "NORMAL", "--params", "p.json"}).code == kExitUsage);
    CHECK(run({"fit", "--help"}).code == kExitOk);
}

TEST_CASE("input errors") {
    const fs::path dir = test::scratch_dir("cli_input");
    const Run missing = run({"fit", (dir / "nope.csv").string(), (dir / "nope2.csv").string(), "--fs", "250"});
    CHECK(missing.code == kExitInput);
    CHECK(missing.err.find("nope.csv") != std::string::npos);

    CHECK(run({"simulate", "--preset", "SINUS", "--out-dir", dir.string()}).code == kExitInput);

    write_file(dir / "bad.json", R"({"M": 0, "waves": {"T": {"A": 1, "alpha": 1, "beta": 3, "omega": 0.3}}})");
    const Run no_r = run({"simulate", "--params", (dir / "bad.json").string(), "--out-dir", dir.string()});
    CHECK(no_r.code == kExitInput);
    CHECK(no_r.err.find("R wave") != std::string::npos);
}

TEST_CASE("simulate then fit three beats") {
    const fs::path dir = test::scratch_dir("cli_fit");
    const fs::path sim = dir / "sim";
    const fs::path fit = dir / "fit";
    REQUIRE(run({"simulate", "--preset", "NORMAL", "--beats", "3", "--out-dir", sim.string()}).code == kExitOk);
    CHECK(files_in(sim) == std::vector<std::string>{"annotations.csv", "signal.csv", "truth.json"});

    const Run r = run({"fit", (sim / "signal.csv").string(), (sim / "annotations.csv").string(), "--fs", "250",
                       "--out-dir", fit.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("fitted 3 of 5") != std::string::npos);

    std::size_t reports = 0;
    for (const auto& name : files_in(fit)) {
        if (name.size() == 14 && name.rfind("beat_", 0) == 0 && name.ends_with(".json")) {
            ++reports;
            const auto j = nlohmann::json::parse(slurp(fit / name));
            CHECK(j.at("report").at("r2").get<double>() >= 0.999);
            CHECK(j.at("marks").size() == 5);
            CHECK(j.at("report").at("params").at("waves").at("P").is_object());
        }
    }
    CHECK(reports == 3);
    CHECK(fs::exists(fit / "beat_0001_curve.csv"));
    CHECK(fs::exists(fit / "beat_0002_marks.csv"));
    CHECK(count_lines(slurp(fit / "features.csv")) == 4);
    CHECK(count_lines(slurp(fit / "marks.csv")) == 16);

    const std::string curve = slurp(fit / "beat_0001_curve.csv");
    CHECK(curve.rfind("t,observed,fitted,P,Q,R,S,T\n", 0) == 0);
}

TEST_CASE("noiseless simulation reproduces the model samples") {
    const fs::path dir = test::scratch_dir("cli_sim");
    REQUIRE(run({"simulate", "--preset", "RBBB", "--beats", "1", "--beat-samples", "200", "--out-dir",
                 dir.string()})
                .code == kExitOk);
    const auto samples = read_signal_csv_file((dir / "signal.csv").string());
    REQUIRE(samples.size() == 600);
    const FmmEcgParams m = *preset("RBBB");
    for (std::size_t s = 0; s < samples.size(); ++s) {
        CHECK(samples[s] == eval_model(m, kTwoPi * static_cast<double>(s % 200) / 200.0));
    }
}

TEST_CASE("outputs are deterministic") {
    const fs::path dir = test::scratch_dir("cli_det");
    for (const char* run_name : {"a", "b"}) {
        REQUIRE(run({"simulate", "--preset", "APC", "--beats", "3", "--noise-sd", "0.02", "--seed", "7",
                     "--out-dir", (dir / run_name / "sim").string()})
                    .code == kExitOk);
    }
    for (const char* file : {"signal.csv", "annotations.csv", "truth.json"}) {
        CHECK(slurp(dir / "a" / "sim" / file) == slurp(dir / "b" / "sim" / file));
    }
    REQUIRE(run({"simulate", "--preset", "APC", "--beats", "3", "--noise-sd", "0.02", "--seed", "8",
                 "--out-dir", (dir / "c").string()})
                .code == kExitOk);
    CHECK(slurp(dir / "a" / "sim" / "signal.csv") != slurp(dir / "c" / "signal.csv"));

    const fs::path sim = dir / "a" / "sim";
    const std::vector<std::string> jobs{"1", "3"};
    for (const auto& j : jobs) {
        REQUIRE(run({"fit", (sim / "signal.csv").string(), (sim / "annotations.csv").string(), "--fs", "250",
                     "--jobs", j, "--out-dir", (dir / ("fit" + j)).string()})
                    .code == kExitOk);
    }
    const auto names = files_in(dir / "fit1");
    CHECK(names == files_in(dir / "fit3"));
    for (const auto& name : names) {
        CAPTURE(name);
        CHECK(slurp(dir / "fit1" / name) == slurp(dir / "fit3" / name));
    }
}

TEST_CASE("a record with no fittable beat exits with code 3") {
    const fs::path dir = test::scratch_dir("cli_flat");
    std::string signal = "value\n";
    for (int i = 0; i < 1000; ++i) {
        signal += "0.5\n";
    }
    write_file(dir / "signal.csv", signal);
    write_file(dir / "ann.csv", "sample,label\n100,QRS\n350,QRS\n600,QRS\n850,QRS\n");
    const Run r = run({"fit", (dir / "signal.csv").string(), (dir / "ann.csv").string(), "--fs", "250",
                       "--out-dir", (dir / "out").string()});
    CHECK(r.code == kExitNothingFitted);
    CHECK(r.out.find("fitted 0 of 4") != std::string::npos);
}

TEST_CASE("evaluate") {
    const fs::path dir = test::scratch_dir("cli_eval");
    write_file(dir / "ref.csv", "sample,label,beat\n100,QRS,0\n80,P,0\n160,T,0\n350,QRS,1\n330,P,1\n410,T,1\n");

    SUBCASE("identical files") {
        const Run r = run({"evaluate", (dir / "ref.csv").string(), (dir / "ref.csv").string(), "--fs", "250",
                           "--out-dir", (dir / "same").string()});
        REQUIRE(r.code == kExitOk);
        CHECK(slurp(dir / "same" / "report.csv") ==
              "wave,beats,tp,fp,fn,se,ppv,der,f1\nP,2,2,0,0,100.00,100.00,0.00,100.00\nT,2,2,0,0,100.00,100.00,0.00,100.00\n");
        CHECK(r.out == slurp(dir / "same" / "report.txt"));
    }
    SUBCASE("empty predictions") {
        write_file(dir / "empty.csv", "sample,label,beat\n");
        const Run r = run({"evaluate", (dir / "empty.csv").string(), (dir / "ref.csv").string(), "--fs", "250",
                           "--out-dir", (dir / "empty").string()});
        REQUIRE(r.code == kExitOk);
        CHECK(slurp(dir / "empty" / "report.csv") ==
              "wave,beats,tp,fp,fn,se,ppv,der,f1\nP,2,0,0,2,0.00,,100.00,0.00\nT,2,0,0,2,0.00,,100.00,0.00\n");
    }
    SUBCASE("tolerance and pairing by QRS windows") {
        // no beat column: marks are grouped by the reference QRS tiling
        write_file(dir / "ref_plain.csv", "sample,label\n100,QRS\n80,P\n160,T\n350,QRS\n330,P\n410,T\n");
        write_file(dir / "pred.csv", "sample,label\n98,P\n180,T\n329,P\n");
        const Run r = run({"evaluate", (dir / "pred.csv").string(), (dir / "ref_plain.csv").string(), "--fs",
                           "250", "--out-dir", (dir / "tiling").string()});
        REQUIRE(r.code == kExitOk);
        CHECK(slurp(dir / "tiling" / "report.csv") ==
              "wave,beats,tp,fp,fn,se,ppv,der,f1\nP,2,2,0,0,100.00,100.00,0.00,100.00\nT,2,0,1,2,0.00,0.00,150.00,0.00\n");
    }
    SUBCASE("unknown labels") {
        write_file(dir / "odd.csv", "sample,label,beat\n100,U,0\n90,X,0\n");
        const Run r = run({"evaluate", (dir / "odd.csv").string(), (dir / "ref.csv").string(), "--fs", "250"});
        CHECK(r.code == kExitInput);
        CHECK(r.err.find("U, X") != std::string::npos);
    }
}

TEST_CASE("fit honours a config file") {
    const fs::path dir = test::scratch_dir("cli_cfg");
    REQUIRE(run({"simulate", "--preset", "NORMAL", "--beats", "1", "--out-dir", dir.string()}).code == kExitOk);
    write_file(dir / "bad.cfg", "not_a_key = 1\n");
    CHECK(run({"fit", (dir / "signal.csv").string(), (dir / "annotations.csv").string(), "--fs", "250",
               "--config", (dir / "bad.cfg").string(), "--out-dir", (dir / "x").string()})
              .code == kExitInput);
    write_file(dir / "strict.cfg", "r_omega_max = 0.001\n");
    // no component is sharp enough to be R
    CHECK(run({"fit", (dir / "signal.csv").string(), (dir / "annotations.csv").string(), "--fs", "250",
               "--config", (dir / "strict.cfg").string(), "--out-dir", (dir / "y").string()})
              .code == kExitNothingFitted);
}
