#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simarr/cli.hpp"
#include "simarr/config_io.hpp"
#include "simarr/error.hpp"

using namespace simarr;
namespace fs = std::filesystem;

namespace {

const std::string kReference = R"({"lambda": 1,
  "service": {"type": "ordered_increments",
              "increments": [{"type": "exponential", "rate": 2}, {"type": "exponential", "rate": 4}]}})";

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("simarr_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
    int code;
    std::string out, err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

ErrorCode load_error(const std::string& text) {
    try {
        load_config_text(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("config was accepted");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
    const auto c = load_config_text(kReference);
    CHECK(c.config.dimension() == 2);
    CHECK(c.config.load(0) == doctest::Approx(0.75));
    CHECK(c.config.load(1) == doctest::Approx(0.25));

    const std::string reordered = R"({"service": {"increments": [{"rate": 2, "type": "exponential"},
        {"rate": 4, "type": "exponential"}], "type": "ordered_increments"}, "lambda": 1})";
    CHECK(load_config_text(reordered).hash == c.hash);
    CHECK(load_config_text(R"({"lambda": 0.9, "service": {"type": "ordered_increments",
        "increments": [{"type": "exponential", "rate": 2}, {"type": "exponential", "rate": 4}]}})")
              .hash != c.hash);

    CHECK(load_error(R"({"lambda": 1.6, "service": {"type": "ordered_increments",
        "increments": [{"type": "exponential", "rate": 2}, {"type": "exponential", "rate": 4}]}})") ==
          ErrorCode::UnstableSystem);
    try {
        load_config_text(R"({"lambda": 1.6, "service": {"type": "ordered_increments",
            "increments": [{"type": "exponential", "rate": 2}, {"type": "exponential", "rate": 4}]}})");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("rho_1") != std::string::npos);
    }
    CHECK(load_error(R"({"lambda": 1, "service": {"type": "proportional",
        "base": {"type": "exponential", "rate": 2}, "coefficients": [1, 2]}})") == ErrorCode::OrderingViolated);
    CHECK(load_error(R"({"lambda": 0.2, "service": {"type": "proportional",
        "base": {"type": "exponential", "rate": 2}, "coefficients": [1, 1]}})") == ErrorCode::Degenerate);
    CHECK(load_error("{\"lambda\": ") == ErrorCode::ParseError);
}

TEST_CASE("all schema errors are reported together") {
    try {
        load_config_text(R"({"lambda": -1, "colour": "red", "service": {"type": "ordered_increments",
            "increments": [{"type": "exponential", "rate": 0}, {"type": "weibull"}]}})");
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationError);
        const std::string msg = e.what();
        CHECK(msg.find("$.lambda") != std::string::npos);
        CHECK(msg.find("$.colour") != std::string::npos);
        CHECK(msg.find("$.service.increments[0]: exponential rate") != std::string::npos);
        CHECK(msg.find("$.service.increments[1].type") != std::string::npos);
    }
}

TEST_CASE("exit codes") {
    const auto cfg = write_file("ref.json", kReference);
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({"report", "--config", cfg, "--bogus"}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({}).code == kExitUsage);
    const auto bad = write_file("bad.json", R"({"lambda": 1})");
    const auto r = run({"report", "--config", bad});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("ordered_increments") != std::string::npos);

    CHECK(run({"verify", "--check", "duality", "--seed", "3", "--trials", "20"}).code == kExitOk);
    CHECK(run({"verify", "--check", "duality", "--seed", "3", "--trials", "20", "--inject-fault"}).code ==
          kExitVerificationFailed);
    CHECK(run({"verify", "--check", "nothing", "--seed", "3"}).code == kExitUsage);
}

TEST_CASE("survival table and manifest") {
    const auto cfg = write_file("ref.json", kReference);
    const auto out = (scratch() / "xi.csv").string();
    REQUIRE(run({"survival", "--config", cfg, "--u1", "0:1:1", "--u2", "0:1:1", "--out", out}).code == kExitOk);
    std::istringstream lines(slurp(out));
    std::string line;
    std::getline(lines, line);
    CHECK(line == "u1,u2,xi,error_estimate,clamped");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 3; ++i) std::getline(ss, cell, ',');
        const double xi = std::stod(cell);
        CHECK(xi >= 0.0);
        CHECK(xi <= 1.0);
    }
    CHECK(rows == 4);
    const auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
    CHECK(manifest["command"] == "survival");
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["outputs"][0] == out);
    CHECK(manifest.contains("wall_clock_seconds"));
}

TEST_CASE("simulate is reproducible and records drawn seeds") {
    const auto cfg = write_file("ref.json", kReference);
    const auto a = (scratch() / "a.csv").string(), b = (scratch() / "b.csv").string();
    REQUIRE(run({"simulate", "--config", cfg, "--arrivals", "5000", "--seed", "11", "--out", a}).code == 0);
    REQUIRE(run({"simulate", "--config", cfg, "--arrivals", "5000", "--seed", "11", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));

    const auto c = (scratch() / "c.csv").string();
    REQUIRE(run({"simulate", "--config", cfg, "--arrivals", "1000", "--out", c}).code == 0);
    const auto manifest = nlohmann::json::parse(slurp(c + ".manifest.json"));
    REQUIRE(manifest["seeds"].size() == 1);
    const auto seed = std::to_string(manifest["seeds"][0].get<std::uint64_t>());
    const auto d = (scratch() / "d.csv").string();
    REQUIRE(run({"simulate", "--config", cfg, "--arrivals", "1000", "--seed", seed, "--out", d}).code == 0);
    CHECK(slurp(c) == slurp(d));
}

TEST_CASE("eval-lst and rouche-root") {
    const auto cfg = write_file("ref.json", kReference);
    const auto pts = write_file("pts.csv", "re_s1,im_s1,re_s2,im_s2\n1,0,0,0\n1,0,1,0\n");
    const auto r = run({"eval-lst", "--config", cfg, "--points", pts});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("1,0,0,0,0.46875,") != std::string::npos);
    CHECK(r.err.find("\"command\":\"eval-lst\"") != std::string::npos);

    const auto root = run({"rouche-root", "--config", cfg, "--s", "0.5"});
    REQUIRE(root.code == kExitOk);
    CHECK(root.out.find("2,-0.25357508034") != std::string::npos);
    CHECK(run({"rouche-root", "--config", cfg, "--s", "0.5,x"}).code == kExitUsage);
}

TEST_CASE("outputs are in the units of the config file") {
    const auto cfg = std::string(SIMARR_CONFIG_DIR) + "/scaled_speeds.json";
    const auto pts = write_file("raw.csv", "1,0,0,0\n");
    const auto r = run({"eval-lst", "--config", cfg, "--points", pts});
    REQUIRE(r.code == kExitOk);
    // queue 1 in work units: M/G/1 with rate-2 server, jobs 1.5 sigma, sigma ~ Erlang(2, 2)
    const double bstar = std::pow(2.0 / 3.5, 2), rho = 0.8 * 1.5 / 2.0;
    const double expected = (1.0 - rho) / (1.0 - 0.4 * (1.0 - bstar));
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    CHECK(std::stod(line.substr(std::string("1,0,0,0,").size())) == doctest::Approx(expected).epsilon(1e-12));

    const auto sim = (scratch() / "raw_sim.csv").string();
    REQUIRE(run({"simulate", "--config", cfg, "--arrivals", "2000", "--seed", "1", "--out", sim}).code == 0);
    std::istringstream rows(slurp(sim));
    std::getline(rows, line);
    while (std::getline(rows, line)) {
        double v1 = 0, v2 = 0;
        REQUIRE(std::sscanf(line.c_str(), "%*d,%lf,%lf", &v1, &v2) == 2);
        // V2 <= (0.5 / 0.75) V1 in normalized units, and V1 is reported doubled
        REQUIRE(v2 <= v1 / 3.0 + 1e-12);
    }
}

}  // TEST_SUITE
