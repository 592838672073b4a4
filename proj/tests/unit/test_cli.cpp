#include "doctest.h"

#include "nlflow/cli.hpp"
#include "nlflow/descriptor.hpp"
#include "nlflow/errors.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nlflow;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = NLFLOW_SOURCE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "nlflow_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Json zero_doc() {
    return Json::parse(R"({
        "model": "supply_chain",
        "grid": {"origin": [0.0], "extents": [1.0], "cells": [40]},
        "solver": {"t_end": 0.2, "record_every": 5},
        "initial": {"kind": "zero"}
    })");
}

fs::path write_doc(const fs::path& dir, const Json& doc) {
    const fs::path p = dir / "run.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

struct Result {
    int code;
    std::string log, err;
};

Result run_cli(const std::string& cmd, const fs::path& config, const fs::path& out,
               std::optional<std::uint64_t> seed = std::nullopt) {
    std::ostringstream log, err;
    const int code = cli::run({cmd, config.string(), out.string(), seed, true}, log, err);
    return {code, log.str(), err.str()};
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("schema errors name the offending field") {
    Json doc = zero_doc();
    doc["solver"]["cfl"] = -0.5;
    const auto errs = schema_errors(doc, descriptor_schema());
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].rfind("solver.cfl", 0) == 0);

    doc = zero_doc();
    doc["solver"]["sneaky"] = 1;
    CHECK(contains(schema_errors(doc, descriptor_schema()), "sneaky"));

    doc = zero_doc();
    doc.erase("grid");
    CHECK(contains(schema_errors(doc, descriptor_schema()), "grid"));

    doc = zero_doc();
    doc["model"] = "traffic";
    CHECK(contains(schema_errors(doc, descriptor_schema()), "model"));

    CHECK_THROWS_AS(resolve_descriptor(Json::parse(R"({"model": "supply_chain"})")), ConfigError);
}

TEST_CASE("defaults are filled") {
    const Json r = resolve_descriptor(zero_doc());
    CHECK(r["solver"].contains("cfl"));
    CHECK(r["solver"]["flux"] == "upwind");
    CHECK(r.contains("seed"));
    CHECK(r.contains("output_dir"));
    const Problem p = build_problem(r);
    CHECK(p.solver.t_end == 0.2);
    CHECK(p.grid.size() == 40);
}

TEST_CASE("simulate on a zero datum") {
    const fs::path dir = scratch("zero");
    const Result r = run_cli("simulate", write_doc(dir, zero_doc()), dir / "out");
    REQUIRE(r.code == cli::ok);
    const Json s = Json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(s["mass_initial"] == 0.0);
    CHECK(s["mass_final"] == 0.0);
    CHECK(s["mass_drift"] == 0.0);
    CHECK(s["boundary_outflow"] == 0.0);
    for (const auto& x : s["linf_series"]) CHECK(x == 0.0);
    for (const auto& x : s["tv_series"]) CHECK(x == 0.0);
    CHECK(fs::exists(dir / "out" / "descriptor.json"));
    CHECK(fs::exists(dir / "out" / "timing.json"));
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "out" / "states")) {
        std::ifstream f(e.path());
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) CHECK(std::stod(line.substr(line.rfind(',') + 1)) == 0.0);
        ++files;
    }
    CHECK(files > 1);
}

TEST_CASE("negative cfl is a config error") {
    const fs::path dir = scratch("bad");
    const Result r = run_cli("simulate", source_dir / "tests" / "data" / "bad_cfl.json", dir / "out");
    CHECK(r.code == cli::config_error);
    CHECK(r.err.find("solver.cfl") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out" / "summary.json"));
}

TEST_CASE("unknown command and missing file") {
    const fs::path dir = scratch("unknown");
    CHECK(run_cli("frobnicate", write_doc(dir, zero_doc()), dir / "out").code == cli::config_error);
    CHECK(run_cli("simulate", dir / "absent.json", dir / "out").code == cli::config_error);
}

TEST_CASE("bounds-report on the supply-chain fixture") {
    const fs::path dir = scratch("bounds");
    const Result r = run_cli("bounds-report", source_dir / "configs" / "supply_chain.json", dir / "out");
    CHECK(r.code == cli::ok);
    const Json b = Json::parse(slurp(dir / "out" / "bounds.json"));
    CHECK(b["all_satisfied"] == true);
    CHECK(fs::exists(dir / "out" / "bounds.txt"));
}

TEST_CASE("artifacts are reproducible byte for byte") {
    const fs::path dir = scratch("repro");
    Json doc = zero_doc();
    doc["initial"] = Json::parse(R"({"kind": "bump", "center": [0.4], "radius": 0.2})");
    const fs::path cfg = write_doc(dir, doc);
    REQUIRE(run_cli("tangent-check", cfg, dir / "a").code == cli::ok);
    REQUIRE(run_cli("tangent-check", cfg, dir / "b").code == cli::ok);
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
        const fs::path other = dir / "b" / fs::relative(e.path(), dir / "a");
        CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().string());
        ++compared;
    }
    CHECK(compared > 4);
}

TEST_CASE("seed override changes the random perturbation") {
    const fs::path dir = scratch("seed");
    Json doc = zero_doc();
    doc["initial"] = Json::parse(R"({"kind": "bump", "center": [0.4], "radius": 0.2})");
    const fs::path cfg = write_doc(dir, doc);
    REQUIRE(run_cli("tangent-check", cfg, dir / "a", 11).code == cli::ok);
    REQUIRE(run_cli("tangent-check", cfg, dir / "b", 12).code == cli::ok);
    CHECK(Json::parse(slurp(dir / "a" / "descriptor.json"))["seed"] == 11);
    CHECK(slurp(dir / "a" / "gateaux.csv") != slurp(dir / "b" / "gateaux.csv"));
}

}
