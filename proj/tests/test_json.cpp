#include "fmmbeat/json_io.h"
#include "fmmbeat/presets.h"

#include <doctest.h>

using namespace fmmbeat;
using nlohmann::json;

TEST_CASE("parameter JSON round trip") {
    FmmEcgParams m = *preset("PVC");
    m.sigma2 = 0.0025;
    const json j = m;
    CHECK(j.at("waves").at("P").is_null());
    CHECK(j.at("waves").at("R").at("omega") == m[WaveLabel::R]->omega);
    CHECK(j.get<FmmEcgParams>() == m);
    CHECK(params_from_json(json::parse(j.dump())) == m);
}

TEST_CASE("params_from_json validates") {
    json j = *preset("NORMAL");
    j["waves"]["R"] = nullptr;
    CHECK_THROWS_AS(params_from_json(j), std::invalid_argument);

    j = *preset("NORMAL");
    j["waves"]["T"]["omega"] = 1.5;
    CHECK_THROWS_AS(params_from_json(j), std::invalid_argument);

    j = *preset("NORMAL");
    j["waves"]["U"] = nullptr;
    CHECK_THROWS_AS(params_from_json(j), std::invalid_argument);

    j = *preset("NORMAL");
    j.erase("M");
    CHECK_THROWS_AS(params_from_json(j), std::invalid_argument);

    j = *preset("NORMAL");
    j["waves"]["P"]["alpha"] = -1.0;
    CHECK(params_from_json(j)[WaveLabel::P]->alpha == doctest::Approx(kTwoPi - 1.0));
}

TEST_CASE("fit report and mark JSON") {
    FitReport r;
    r.params = *preset("NORMAL");
    r.r2 = 0.99;
    r.pv_per_component = {0.5, 0.49};
    r.iterations = 2;
    r.assigned_from_component[static_cast<std::size_t>(WaveLabel::R)] = 0;
    r.converged = true;
    Component c;
    c.params = *r.params[WaveLabel::R];
    c.pv = 0.5;
    r.components = {c};

    const json j = r;
    CHECK(j.at("r2") == 0.99);
    CHECK(j.at("assigned_from_component").at("R") == 0);
    CHECK(j.at("assigned_from_component").at("P").is_null());
    CHECK(j.at("components").size() == 1);
    CHECK(j.at("converged") == true);

    const json mark = FiducialMark{WaveLabel::T, 1.25, MarkKind::Crest, 0.4};
    CHECK(mark.at("label") == "T");
    CHECK(mark.at("kind") == "crest");
    CHECK(mark.at("phase") == 1.25);
}
