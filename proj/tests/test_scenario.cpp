#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "covertaoi/scenario.hpp"

using namespace covertaoi;

namespace {

std::string write_temp(const std::string& body) {
    static int counter = 0;
    std::string path = "scenario_test_" + std::to_string(counter++) + ".json";
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("defaults carry the reference parameter set") {
    auto s = default_scenario();
    REQUIRE(s.M == 10);
    REQUIRE(s.H == 100.0);
    REQUIRE(s.V_max == 30.0);
    REQUIRE(s.S_b == 45e6);
    REQUIRE(s.S_c.size() == 50);
    REQUIRE(s.S_c[7] == 5e6);
    REQUIRE_THAT(s.mu0, Catch::Matchers::WithinRel(1e-3, 1e-12));
    REQUIRE_THAT(s.sigma_b2, Catch::Matchers::WithinRel(1e-10, 1e-12));
    REQUIRE(s.B_hz == 1e6);
    REQUIRE(s.spacing_ratio == 0.5);
    REQUIRE_NOTHROW(validate(s));
}

TEST_CASE("defaults validate for any position seed") {
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        auto s = default_scenario(seed);
        REQUIRE(s.u_b.x() >= 0.0);
        REQUIRE(s.u_b.x() <= 1000.0);
        REQUIRE_NOTHROW(validate(s));
    }
}

TEST_CASE("empty object loads as the default scenario") {
    auto path = write_temp("{}");
    auto s = load_scenario(path);
    REQUIRE(s == default_scenario());
    std::remove(path.c_str());
}

TEST_CASE("overrides apply on top of defaults") {
    auto path = write_temp(R"({"M": 4, "Gamma": 20})");
    auto s = load_scenario(path);
    auto d = default_scenario();
    REQUIRE(s.M == 4);
    REQUIRE(s.Gamma == 20.0);
    d.M = 4;
    d.Gamma = 20.0;
    REQUIRE(s == d);
    std::remove(path.c_str());
}

TEST_CASE("db-suffixed keys convert to linear") {
    auto path = write_temp(R"({"mu0_db": -30, "sigma_c2_db": -100})");
    auto s = load_scenario(path);
    REQUIRE_THAT(s.mu0, Catch::Matchers::WithinRel(1e-3, 1e-12));
    REQUIRE_THAT(s.sigma_c2, Catch::Matchers::WithinRel(1e-10, 1e-12));
    std::remove(path.c_str());
}

TEST_CASE("validation errors name the offending field") {
    auto path = write_temp(R"({"epsilon": 1.5})");
    try {
        load_scenario(path);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("epsilon") != std::string::npos);
    }
    std::remove(path.c_str());

    auto p2 = write_temp(R"({"h": 150})");
    REQUIRE_THROWS_AS(load_scenario(p2), ValidationError);
    std::remove(p2.c_str());

    auto p3 = write_temp(R"({"bob_request_window": [0, 10]})");
    REQUIRE_THROWS_AS(load_scenario(p3), ValidationError);
    std::remove(p3.c_str());
}

TEST_CASE("malformed files raise parse errors") {
    auto p1 = write_temp("{ not json");
    REQUIRE_THROWS_AS(load_scenario(p1), ParseError);
    std::remove(p1.c_str());

    auto p2 = write_temp(R"({"no_such_key": 1})");
    REQUIRE_THROWS_AS(load_scenario(p2), ParseError);
    std::remove(p2.c_str());

    REQUIRE_THROWS_AS(load_scenario("missing_file.json"), ParseError);
}

TEST_CASE("serialize-load round trip preserves equality") {
    auto s = default_scenario(9);
    s.M = 6;
    s.epsilon = 0.2;
    s.S_c[3] = 7e6;
    auto path = write_temp(scenario_to_json(s).dump());
    auto back = load_scenario(path);
    REQUIRE(back == s);
    std::remove(path.c_str());
}

TEST_CASE("per-slot packet sizes: scalar broadcast and arrays") {
    auto p1 = write_temp(R"({"N": 4, "S_c": 3e6, "bob_request_window": [1, 4]})");
    auto s1 = load_scenario(p1);
    REQUIRE(s1.S_c.size() == 4);
    REQUIRE(s1.S_c[2] == 3e6);
    std::remove(p1.c_str());

    auto p2 = write_temp(R"({"N": 2, "S_c": [3e6, 4e6], "bob_request_window": [1, 2]})");
    auto s2 = load_scenario(p2);
    REQUIRE(s2.S_c[0] == 3e6);
    REQUIRE(s2.S_c[1] == 4e6);
    std::remove(p2.c_str());

    auto p3 = write_temp(R"({"N": 3, "S_c": [3e6, 4e6]})");
    REQUIRE_THROWS_AS(load_scenario(p3), ValidationError);
    std::remove(p3.c_str());
}

TEST_CASE("carol qos pre-check rejects oversized per-slot packets") {
    auto path = write_temp(R"({"S_c": 1e12})");
    try {
        load_scenario(path);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("S_c") != std::string::npos);
    }
    std::remove(path.c_str());
}
