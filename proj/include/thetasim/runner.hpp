#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "thetasim/circuit.hpp"
#include "thetasim/experiments.hpp"
#include "thetasim/orthodox.hpp"
#include "thetasim/pilotwave.hpp"
#include "thetasim/rng.hpp"
#include "thetasim/stats.hpp"

namespace thetasim {

inline constexpr double kConfidenceZ = 2.576;  // 99%
inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
    ExperimentSpec experiment;
    std::string engine = "orthodox";  // "orthodox" | "pilotwave"
    pilotwave::PilotConfig pilot;     // used when engine == "pilotwave"
    std::int64_t trials = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
};

namespace detail {

struct Shard {
    stats::Counts counts;
    std::map<std::string, std::int64_t> events;
};

template <typename TrialFn>
inline Shard run_range(TrialFn&& trial_fn, std::uint64_t seed, std::int64_t begin, std::int64_t end) {
    Shard shard;
    for (std::int64_t i = begin; i < end; ++i) {
        TrialRng rng(derive_trial_seed(seed, i));
        const std::vector<TrialEvent> log = trial_fn(rng, i);
        stats::tally_into(shard.counts, log);
        for (const auto& e : log) ++shard.events[to_string(e.kind)];
    }
    return shard;
}

}  // namespace detail

/// Runs the configured simulation. Trials are independently seeded, so the
/// report is bit-identical for a fixed (config, seed) regardless of the
/// worker count.
inline stats::RunReport run_simulation(const RunConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (cfg.engine != "orthodox" && cfg.engine != "pilotwave") throw std::invalid_argument("unknown engine");

    const Circuit circuit = build(cfg.experiment);
    const orthodox::Engine orthodox_engine(circuit);  // also the oracle-side arrival data

    auto trial_fn = [&](TrialRng& rng, std::int64_t index) {
        if (cfg.engine == "orthodox") return orthodox_engine.sample_trial(rng, index);
        return pilotwave::run_trial(circuit, cfg.pilot, rng, index);
    };

    const int workers = static_cast<int>(std::min<std::int64_t>(cfg.workers, cfg.trials));
    std::vector<detail::Shard> shards(static_cast<std::size_t>(workers));
    if (workers == 1) {
        shards[0] = detail::run_range(trial_fn, cfg.seed, 0, cfg.trials);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (cfg.trials + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t begin = w * chunk;
            const std::int64_t end = std::min<std::int64_t>(begin + chunk, cfg.trials);
            pool.emplace_back([&, w, begin, end] { shards[static_cast<std::size_t>(w)] = detail::run_range(trial_fn, cfg.seed, begin, end); });
        }
        for (auto& t : pool) t.join();
    }

    stats::RunReport report;
    report.experiment = cfg.experiment;
    report.engine = cfg.engine;
    report.mode = cfg.engine == "pilotwave" ? to_string(cfg.pilot.mode) : "";
    report.trials = cfg.trials;
    report.seed = cfg.seed;
    for (const auto& shard : shards) {
        stats::merge_counts(report.counts, shard.counts);
        for (const auto& [kind, n] : shard.events) report.events_histogram[kind] += n;
    }

    const OutcomeDistribution expected = expected_distribution(cfg.experiment);
    for (const auto& [label, _] : expected.entries) report.counts.emplace(label, 0);
    for (const auto& [label, n] : report.counts) {
        report.frequencies[label] = static_cast<double>(n) / static_cast<double>(cfg.trials);
        report.intervals[label] = stats::wilson_interval(n, cfg.trials, kConfidenceZ);
    }
    try {
        report.gof = stats::chi_square_gof(report.counts, expected, cfg.trials);
    } catch (const stats::StatsError& err) {
        if (err.fault() != stats::StatsFault::ImpossibleOutcome) throw;
        report.gof.impossible = true;
        report.gof.statistic = std::numeric_limits<double>::infinity();
        report.gof.p_value = 0.0;
        report.gof.dof = 0;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering. All formats are deterministic functions of the report.

inline nlohmann::ordered_json experiment_params_json(const ExperimentSpec& s) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    switch (s.kind) {
        case ExperimentKind::Renninger:
        case ExperimentKind::RenningerFiber:
            params["delay_short"] = s.delay_short;
            params["delay_long"] = s.delay_long;
            break;
        case ExperimentKind::MachZehnder: params["phase"] = s.phase; break;
        case ExperimentKind::BombTester: params["bomb"] = to_string(s.bomb); break;
        case ExperimentKind::InducedCoherence: params["transmittance"] = s.transmittance; break;
    }
    return params;
}

inline nlohmann::ordered_json report_to_json(const stats::RunReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["experiment"] = to_string(r.experiment.kind);
    j["params"] = experiment_params_json(r.experiment);
    j["engine"] = r.engine;
    j["mode"] = r.mode.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.mode);
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["counts"] = nlohmann::ordered_json::object();
    for (const auto& [label, n] : r.counts) j["counts"][label] = n;
    j["frequencies"] = nlohmann::ordered_json::object();
    for (const auto& [label, f] : r.frequencies) j["frequencies"][label] = f;
    j["intervals"] = nlohmann::ordered_json::object();
    for (const auto& [label, iv] : r.intervals) j["intervals"][label] = {iv.first, iv.second};
    j["gof"] = nlohmann::ordered_json::object();
    if (r.gof.impossible) {
        j["gof"]["statistic"] = nullptr;
        j["gof"]["impossible"] = true;
    } else {
        j["gof"]["statistic"] = r.gof.statistic;
    }
    j["gof"]["dof"] = r.gof.dof;
    j["gof"]["p_value"] = r.gof.p_value;
    j["events_histogram"] = nlohmann::ordered_json::object();
    for (const auto& [kind, n] : r.events_histogram) j["events_histogram"][kind] = n;
    return j;
}

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace detail

inline std::string report_to_csv(const stats::RunReport& r) {
    const OutcomeDistribution expected = expected_distribution(r.experiment);
    std::string out = "outcome,count,frequency,ci_lo,ci_hi,expected\n";
    for (const auto& [label, n] : r.counts) {
        const auto& iv = r.intervals.at(label);
        out += label + "," + std::to_string(n) + "," + detail::fmt("%.6f", r.frequencies.at(label)) + "," +
               detail::fmt("%.6f", iv.first) + "," + detail::fmt("%.6f", iv.second) + "," +
               detail::fmt("%.6f", expected.prob(label)) + "\n";
    }
    return out;
}

inline std::string report_to_table(const stats::RunReport& r) {
    const OutcomeDistribution expected = expected_distribution(r.experiment);
    std::string out = "experiment: " + r.experiment.label() + "   engine: " + r.engine;
    if (!r.mode.empty()) out += " (" + r.mode + ")";
    out += "   trials: " + std::to_string(r.trials) + "   seed: " + std::to_string(r.seed) + "\n\n";

    std::size_t width = 8;
    for (const auto& [label, _] : r.counts) width = std::max(width, label.size());
    auto pad = [&](std::string s, std::size_t w) {
        s.resize(std::max(s.size(), w), ' ');
        return s;
    };
    out += pad("outcome", width) + "  " + pad("count", 10) + "  " + pad("frequency", 10) + "  " +
           pad("99% CI", 22) + "  expected\n";
    for (const auto& [label, n] : r.counts) {
        const auto& iv = r.intervals.at(label);
        out += pad(label, width) + "  " + pad(std::to_string(n), 10) + "  " +
               pad(detail::fmt("%.5f", r.frequencies.at(label)), 10) + "  " +
               pad("[" + detail::fmt("%.5f", iv.first) + ", " + detail::fmt("%.5f", iv.second) + "]", 22) + "  " +
               detail::fmt("%.6g", expected.prob(label)) + "\n";
    }
    out += "\ngof vs oracle: ";
    if (r.gof.impossible) {
        out += "chi2 = inf (impossible outcome observed)  [FAIL]\n";
    } else {
        out += "chi2 = " + detail::fmt("%.4f", r.gof.statistic) + "  dof = " + std::to_string(r.gof.dof) +
               "  p = " + detail::fmt("%.4f", r.gof.p_value) + (r.gof.p_value > stats::kEquivalenceAlpha ? "  [PASS]\n" : "  [FAIL]\n");
    }
    out += "events:";
    for (const auto& [kind, n] : r.events_histogram) out += " " + kind + "=" + std::to_string(n);
    out += "\n";
    return out;
}

}  // namespace thetasim
