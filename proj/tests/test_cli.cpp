#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "thetasim/cli.hpp"

using namespace thetasim;
using namespace thetasim::cli;

namespace {

std::string usage_message(const std::vector<std::string>& args) {
    try {
        parse_args(args);
    } catch (const UsageError& e) {
        return e.what();
    }
    FAIL("expected UsageError");
    return {};
}

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = main_impl(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("the documented invocation parses into a full config") {
    const auto cfg = parse_args({"run", "--experiment", "bomb-tester", "--bomb", "usable", "--engine", "pilotwave",
                                 "--mode", "randomize", "--trials", "100000", "--seed", "42", "--format", "json"});
    CHECK(cfg.command == CliConfig::Command::Run);
    CHECK(cfg.experiment.kind == ExperimentKind::BombTester);
    CHECK(cfg.experiment.bomb == BombState::Usable);
    CHECK(cfg.engine == "pilotwave");
    CHECK(cfg.pilot.mode == pilotwave::EmptyWaveMode::Randomize);
    CHECK(cfg.trials == 100000);
    CHECK(cfg.seed == 42);
    CHECK(cfg.format == "json");
}

TEST_CASE("flag validation names the offender") {
    CHECK(usage_message({"run", "--experiment", "renninger", "--trials", "0"}).find("--trials") != std::string::npos);
    CHECK(usage_message({"run", "--experiment", "renninger", "--engine", "orthodox", "--mode", "absorb"})
              .find("--mode") != std::string::npos);
    CHECK(usage_message({"run", "--experiment", "renninger", "--frobnicate", "1"}).find("--frobnicate") !=
          std::string::npos);
    CHECK(usage_message({"run", "--experiment", "renninger", "--transmittance", "0.5"}).find("--transmittance") !=
          std::string::npos);
    CHECK(usage_message({"run", "--experiment", "mach-zehnder", "--bomb", "fake"}).find("--bomb") !=
          std::string::npos);
    CHECK(usage_message({"run", "--experiment", "induced-coherence", "--transmittance", "1.5"})
              .find("transmittance") != std::string::npos);
    CHECK(usage_message({"run"}).find("--experiment") != std::string::npos);
}

TEST_CASE("seed resolution prefers the flag, then the environment, then zero") {
    unsetenv("THETASIM_SEED");
    CHECK(parse_args({"run", "--experiment", "renninger"}).seed == 0);

    setenv("THETASIM_SEED", "777", 1);
    CHECK(parse_args({"run", "--experiment", "renninger"}).seed == 777);
    CHECK(parse_args({"run", "--experiment", "renninger", "--seed", "42"}).seed == 42);

    setenv("THETASIM_SEED", "not-a-number", 1);
    CHECK(usage_message({"run", "--experiment", "renninger"}).find("THETASIM_SEED") != std::string::npos);
    unsetenv("THETASIM_SEED");
}

TEST_CASE("usage errors exit with code 2") {
    const auto r = invoke({"run", "--experiment", "renninger", "--trials", "0"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("usage error") != std::string::npos);
}

TEST_CASE("unwritable output paths exit with code 3") {
    const auto r = invoke({"oracle", "--experiment", "renninger", "--output", "/nonexistent-dir/x.json"});
    CHECK(r.code == kExitIo);
}

TEST_CASE("oracle prints the analytic distribution") {
    const auto r = invoke({"oracle", "--experiment", "mach-zehnder", "--format", "json"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("experiment") == "mach-zehnder");
    CHECK(j.at("distribution").at("D1") == 0.0);
    CHECK(j.at("distribution").at("D2") == 1.0);

    const auto table = invoke({"oracle", "--experiment", "bomb-tester", "--bomb", "usable"});
    CHECK(table.out.find("Explosion: 0.5") != std::string::npos);
}

TEST_CASE("run emits a deterministic report in every format") {
    const std::vector<std::string> argv{"run",     "--experiment", "renninger", "--engine", "pilotwave",
                                        "--trials", "2000",        "--seed",    "9",        "--format", "json"};
    const auto first = invoke(argv);
    REQUIRE(first.code == kExitOk);
    const auto second = invoke(argv);
    CHECK(first.out == second.out);

    const auto j = nlohmann::json::parse(first.out);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("trials") == 2000);
    CHECK(j.at("events_histogram").at("EmptyWaveArrival") == 2000);

    auto workers3 = argv;
    workers3.push_back("--workers");
    workers3.push_back("3");
    CHECK(invoke(workers3).out == first.out);

    auto csv = argv;
    csv.back() = "csv";
    const auto c = invoke(csv);
    CHECK(c.code == kExitOk);
    CHECK(c.out.rfind("outcome,", 0) == 0);

    auto table = argv;
    table.back() = "table";
    CHECK(invoke(table).out.find("renninger") != std::string::npos);
}

TEST_CASE("export-circuit round-trips through the parser") {
    const auto r = invoke({"export-circuit", "--experiment", "induced-coherence", "--transmittance", "0.5"});
    REQUIRE(r.code == kExitOk);
    const Circuit c = parse_circuit_json(r.out);
    CHECK(c.element_index("NL1") >= 0);
    CHECK(c.element_index("O") >= 0);
    CHECK(circuit_to_json(c) == r.out);
}

TEST_CASE("export-circuit writes files too") {
    const std::string path = "/tmp/thetasim_test_circuit.json";
    const auto r = invoke({"export-circuit", "--experiment", "renninger", "--output", path});
    REQUIRE(r.code == kExitOk);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(parse_circuit_json(ss.str()).name() == "renninger");
    std::remove(path.c_str());
}

TEST_CASE("a small verification grid passes end to end") {
    const auto r = invoke({"verify", "--trials", "400", "--seeds", "1", "--sweep-points", "3"});
    INFO(r.out);
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("[PASS]") != std::string::npos);
    CHECK(r.out.find("[FAIL]") == std::string::npos);
    CHECK(r.out.find("cells passed") != std::string::npos);
}

TEST_CASE("help is help, not an error") {
    const auto r = invoke({"--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("run") != std::string::npos);
}
