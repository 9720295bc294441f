#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thetasim/circuit_io.hpp"
#include "thetasim/runner.hpp"
#include "thetasim/verify.hpp"

namespace thetasim::cli {

// Exit codes, stable for CI: 0 success, 1 verification failure, 2 usage
// error, 3 I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CliConfig {
    enum class Command { Run, Verify, Oracle, ExportCircuit };
    Command command = Command::Run;
    ExperimentSpec experiment;
    std::string engine = "orthodox";
    pilotwave::PilotConfig pilot;
    std::int64_t trials = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string format = "table";  // table | json | csv
    std::string output = "-";      // path or "-" for stdout
    VerifyOptions verify;
};

namespace detail {

struct RawArgs {
    std::string experiment;
    std::string bomb = "usable";
    double transmittance = 0.0;
    double phase = 0.0;
    double delay_short = 1.0;
    double delay_long = 0.0;  // 0 = kind default
    std::string engine = "orthodox";
    std::string mode;
    std::int64_t trials = 100000;
    std::string seed_text;
    int workers = 1;
    std::string format;
    std::string output = "-";
};

inline ExperimentSpec make_spec(const CLI::App& sub, const RawArgs& raw) {
    auto given = [&](const std::string& flag) { return sub.count(flag) > 0; };
    auto reject_unless = [&](const std::string& flag, bool allowed) {
        if (given(flag) && !allowed)
            throw UsageError("BadValue: " + flag + " does not apply to experiment '" + raw.experiment + "'");
    };
    reject_unless("--bomb", raw.experiment == "bomb-tester");
    reject_unless("--transmittance", raw.experiment == "induced-coherence");
    reject_unless("--phase", raw.experiment == "mach-zehnder");
    const bool renninger = raw.experiment == "renninger" || raw.experiment == "renninger-fiber";
    reject_unless("--delay-short", renninger);
    reject_unless("--delay-long", renninger);

    try {
        if (raw.experiment == "renninger")
            return ExperimentSpec::renninger(raw.delay_short, raw.delay_long > 0.0 ? raw.delay_long : 3.0);
        if (raw.experiment == "renninger-fiber")
            return ExperimentSpec::renninger_fiber(raw.delay_short, raw.delay_long > 0.0 ? raw.delay_long : 100.0);
        if (raw.experiment == "mach-zehnder") return ExperimentSpec::mach_zehnder(raw.phase);
        if (raw.experiment == "bomb-tester") {
            if (raw.bomb == "absent") return ExperimentSpec::bomb_tester(BombState::Absent);
            if (raw.bomb == "fake") return ExperimentSpec::bomb_tester(BombState::Fake);
            return ExperimentSpec::bomb_tester(BombState::Usable);
        }
        if (raw.experiment == "induced-coherence")
            return ExperimentSpec::induced_coherence(given("--transmittance") ? raw.transmittance : 1.0);
    } catch (const ExperimentError& e) {
        throw UsageError(e.what());
    }
    throw UsageError("BadValue: unknown experiment '" + raw.experiment + "'");
}

inline std::uint64_t resolve_seed(const CLI::App& sub, const RawArgs& raw) {
    std::string text = raw.seed_text;
    if (sub.count("--seed") == 0) {
        const char* env = std::getenv("THETASIM_SEED");
        if (env == nullptr || *env == '\0') return 0;
        text = env;
    }
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError("BadValue: --seed (or THETASIM_SEED) must be a 64-bit unsigned integer, got '" + text + "'");
    }
}

inline void add_experiment_flags(CLI::App* sub, RawArgs& raw) {
    sub->add_option("--experiment", raw.experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember({"renninger", "renninger-fiber", "mach-zehnder", "bomb-tester", "induced-coherence"}));
    sub->add_option("--bomb", raw.bomb, "bomb variant (bomb-tester)")->check(CLI::IsMember({"absent", "fake", "usable"}));
    sub->add_option("--transmittance", raw.transmittance, "object transmittance in [0,1] (induced-coherence)");
    sub->add_option("--phase", raw.phase, "phase shift in radians (mach-zehnder)");
    sub->add_option("--delay-short", raw.delay_short, "short-arm delay (renninger)");
    sub->add_option("--delay-long", raw.delay_long, "long-arm delay (renninger)");
}

struct ParseOutcome {
    std::optional<CliConfig> config;
    bool help = false;
    std::string message;
};

inline ParseOutcome parse_args_impl(const std::vector<std::string>& args) {
    ParseOutcome res;
    CLI::App app{"thetasim: dual-engine simulator for interaction-free-measurement optics"};
    app.require_subcommand(1);

    RawArgs raw;
    CliConfig cfg;

    auto* run = app.add_subcommand("run", "run one simulation and report statistics");
    add_experiment_flags(run, raw);
    run->add_option("--engine", raw.engine, "simulation engine")->check(CLI::IsMember({"orthodox", "pilotwave"}));
    run->add_option("--mode", raw.mode, "empty-wave mode (pilotwave only)")
        ->check(CLI::IsMember({"absorb", "randomize"}));
    run->add_option("--trials", raw.trials, "number of trials")->check(CLI::PositiveNumber);
    run->add_option("--seed", raw.seed_text, "master seed (default: THETASIM_SEED or 0)");
    run->add_option("--workers", raw.workers, "worker threads (result is identical for any count)")
        ->check(CLI::PositiveNumber);
    run->add_option("--format", raw.format, "table | json | csv")->check(CLI::IsMember({"table", "json", "csv"}));
    run->add_option("--output", raw.output, "output path, '-' for stdout");

    auto* oracle = app.add_subcommand("oracle", "print the analytic outcome distribution");
    add_experiment_flags(oracle, raw);
    oracle->add_option("--format", raw.format, "table | json")->check(CLI::IsMember({"table", "json"}));
    oracle->add_option("--output", raw.output, "output path, '-' for stdout");

    auto* exp_circuit = app.add_subcommand("export-circuit", "write the circuit spec file for an experiment");
    add_experiment_flags(exp_circuit, raw);
    exp_circuit->add_option("--output", raw.output, "output path, '-' for stdout");

    auto* verify = app.add_subcommand("verify", "run the full cross-engine verification grid");
    verify->add_option("--trials", cfg.verify.trials, "trials per cell")->check(CLI::PositiveNumber);
    verify->add_option("--seeds", cfg.verify.seeds, "seeds per cell")->check(CLI::PositiveNumber);
    verify->add_option("--seed", raw.seed_text, "base seed");
    verify->add_option("--workers", cfg.verify.workers, "worker threads")->check(CLI::PositiveNumber);
    verify->add_option("--sweep-points", cfg.verify.sweep_points, "Mach-Zehnder phase sweep points")
        ->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    argv.push_back("thetasim");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::ostringstream os;
        app.exit(e, os, os);
        res.help = true;
        res.message = os.str();
        return res;
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        app.exit(e, os, os);
        res.message = os.str();
        return res;
    }

    try {
        if (run->parsed()) {
            cfg.command = CliConfig::Command::Run;
            cfg.experiment = make_spec(*run, raw);
            cfg.engine = raw.engine;
            if (!raw.mode.empty()) {
                if (cfg.engine != "pilotwave")
                    throw UsageError("BadValue: --mode only applies to the pilotwave engine");
                cfg.pilot.mode =
                    raw.mode == "absorb" ? pilotwave::EmptyWaveMode::Absorb : pilotwave::EmptyWaveMode::Randomize;
            }
            cfg.trials = raw.trials;
            cfg.seed = resolve_seed(*run, raw);
            cfg.workers = raw.workers;
            cfg.format = raw.format.empty() ? "table" : raw.format;
            cfg.output = raw.output;
        } else if (oracle->parsed()) {
            cfg.command = CliConfig::Command::Oracle;
            cfg.experiment = make_spec(*oracle, raw);
            cfg.format = raw.format.empty() ? "table" : raw.format;
            cfg.output = raw.output;
        } else if (exp_circuit->parsed()) {
            cfg.command = CliConfig::Command::ExportCircuit;
            cfg.experiment = make_spec(*exp_circuit, raw);
            cfg.output = raw.output;
        } else {
            cfg.command = CliConfig::Command::Verify;
            if (verify->count("--seed") > 0) cfg.verify.base_seed = resolve_seed(*verify, raw);
        }
    } catch (const UsageError& e) {
        res.message = std::string(e.what()) + "\n";
        return res;
    }
    res.config = cfg;
    return res;
}

inline int write_output(const std::string& path, const std::string& payload, std::ostream& out, std::ostream& err) {
    if (path == "-" || path.empty()) {
        out << payload;
        return kExitOk;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        err << "i/o error: cannot open '" << path << "' for writing\n";
        return kExitIo;
    }
    f << payload;
    if (!f.good()) {
        err << "i/o error: short write to '" << path << "'\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace detail

/// Parses argv (without the program name) into a validated configuration.
/// Throws UsageError on anything malformed, naming the offending flag.
inline CliConfig parse_args(const std::vector<std::string>& args) {
    auto outcome = detail::parse_args_impl(args);
    if (outcome.config) return *outcome.config;
    throw UsageError(outcome.message);
}

inline int cmd_run(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    RunConfig rc;
    rc.experiment = cfg.experiment;
    rc.engine = cfg.engine;
    rc.pilot = cfg.pilot;
    rc.trials = cfg.trials;
    rc.seed = cfg.seed;
    rc.workers = cfg.workers;
    const stats::RunReport report = run_simulation(rc);

    std::string payload;
    if (cfg.format == "json")
        payload = report_to_json(report).dump(2) + "\n";
    else if (cfg.format == "csv")
        payload = report_to_csv(report);
    else
        payload = report_to_table(report);
    return detail::write_output(cfg.output, payload, out, err);
}

inline int cmd_oracle(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    const OutcomeDistribution d = expected_distribution(cfg.experiment);
    std::string payload;
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["experiment"] = to_string(cfg.experiment.kind);
        j["params"] = experiment_params_json(cfg.experiment);
        j["distribution"] = nlohmann::ordered_json::object();
        for (const auto& [label, p] : d.entries) j["distribution"][label] = p;
        payload = j.dump(2) + "\n";
    } else {
        payload = "experiment: " + cfg.experiment.label() + "\n";
        for (const auto& [label, p] : d.entries)
            payload += "  " + label + ": " + thetasim::detail::fmt("%.6g", p) + "\n";
    }
    return detail::write_output(cfg.output, payload, out, err);
}

inline int cmd_export_circuit(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::write_output(cfg.output, circuit_to_json(build(cfg.experiment)), out, err);
}

inline int cmd_verify(const CliConfig& cfg, std::ostream& out, std::ostream&) {
    const auto cells = run_verification(cfg.verify);
    std::vector<std::string> failing;
    for (const auto& cell : cells) {
        out << (cell.pass ? "[PASS] " : "[FAIL] ") << cell.name << "  (" << cell.detail << ")\n";
        if (!cell.pass) failing.push_back(cell.name);
    }
    out << "\n" << (cells.size() - failing.size()) << "/" << cells.size() << " cells passed\n";
    if (!failing.empty()) {
        out << "failing cells:\n";
        for (const auto& name : failing) out << "  " << name << "\n";
        return kExitVerifyFailed;
    }
    return kExitOk;
}

/// Full CLI entry point; returns the process exit code.
inline int main_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto outcome = detail::parse_args_impl(args);
    if (!outcome.config) {
        if (outcome.help) {
            out << outcome.message;
            return kExitOk;
        }
        err << "usage error: " << outcome.message;
        return kExitUsage;
    }
    const CliConfig& cfg = *outcome.config;

    try {
        switch (cfg.command) {
            case CliConfig::Command::Run: return cmd_run(cfg, out, err);
            case CliConfig::Command::Oracle: return cmd_oracle(cfg, out, err);
            case CliConfig::Command::ExportCircuit: return cmd_export_circuit(cfg, out, err);
            case CliConfig::Command::Verify: return cmd_verify(cfg, out, err);
        }
    } catch (const std::ios_base::failure& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace thetasim::cli
