#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "thetasim/runner.hpp"

namespace thetasim {

struct VerifyCell {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    std::int64_t trials = 100000;
    int seeds = 3;
    std::uint64_t base_seed = 1;
    int workers = 1;
    int sweep_points = 20;
};

/// Every setup the repository ships, including the parameter variants the
/// verification grid exercises.
inline std::vector<ExperimentSpec> shipped_experiments() {
    std::vector<ExperimentSpec> specs;
    specs.push_back(ExperimentSpec::renninger());
    specs.push_back(ExperimentSpec::renninger_fiber());
    specs.push_back(ExperimentSpec::mach_zehnder());
    specs.push_back(ExperimentSpec::bomb_tester(BombState::Absent));
    specs.push_back(ExperimentSpec::bomb_tester(BombState::Fake));
    specs.push_back(ExperimentSpec::bomb_tester(BombState::Usable));
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) specs.push_back(ExperimentSpec::induced_coherence(t));
    return specs;
}

namespace detail {

inline std::string gof_detail(const stats::GofResult& g) {
    if (g.impossible) return "impossible outcome";
    return "chi2=" + detail::fmt("%.3f", g.statistic) + " dof=" + std::to_string(g.dof) +
           " p=" + detail::fmt("%.4f", g.p_value);
}

inline std::string compare_detail(const stats::CompareResult& r) {
    return "chi2=" + detail::fmt("%.3f", r.statistic) + " dof=" + std::to_string(r.dof) +
           " p=" + detail::fmt("%.4f", r.p_value);
}

}  // namespace detail

/// Runs the full verification grid: every shipped experiment under both
/// engines and both empty-wave modes across several seeds (goodness of fit
/// against the analytic oracle), cross-engine and cross-mode homogeneity, and
/// a phase sweep of the Mach-Zehnder comparing the two engines away from the
/// degenerate points.
inline std::vector<VerifyCell> run_verification(const VerifyOptions& opt) {
    std::vector<VerifyCell> cells;

    struct EngineChoice {
        std::string engine;
        pilotwave::EmptyWaveMode mode;
        std::string tag;
    };
    const std::vector<EngineChoice> engines = {
        {"orthodox", pilotwave::EmptyWaveMode::Absorb, "orthodox"},
        {"pilotwave", pilotwave::EmptyWaveMode::Absorb, "pilotwave/absorb"},
        {"pilotwave", pilotwave::EmptyWaveMode::Randomize, "pilotwave/randomize"},
    };

    for (const auto& spec : shipped_experiments()) {
        // One report per engine choice per seed; the first two seeds also feed
        // the equivalence comparisons.
        std::vector<std::vector<stats::RunReport>> reports(engines.size());
        for (std::size_t ei = 0; ei < engines.size(); ++ei) {
            for (int s = 0; s < opt.seeds; ++s) {
                RunConfig cfg;
                cfg.experiment = spec;
                cfg.engine = engines[ei].engine;
                cfg.pilot.mode = engines[ei].mode;
                cfg.trials = opt.trials;
                cfg.seed = opt.base_seed + static_cast<std::uint64_t>(s) +
                           1000 * static_cast<std::uint64_t>(ei);
                cfg.workers = opt.workers;
                reports[ei].push_back(run_simulation(cfg));

                const auto& rep = reports[ei].back();
                const bool ok = !rep.gof.impossible && rep.gof.p_value > stats::kEquivalenceAlpha;
                cells.push_back({spec.label() + " " + engines[ei].tag + " seed=" + std::to_string(cfg.seed) + " gof",
                                 ok, detail::gof_detail(rep.gof)});
            }
        }

        const auto x_eng_a = stats::compare(reports[0][0], reports[1][0]);
        cells.push_back({spec.label() + " orthodox-vs-pilotwave/absorb", x_eng_a.pass, detail::compare_detail(x_eng_a)});
        const auto x_eng_r = stats::compare(reports[0][0], reports[2][0]);
        cells.push_back({spec.label() + " orthodox-vs-pilotwave/randomize", x_eng_r.pass, detail::compare_detail(x_eng_r)});
        const auto x_mode = stats::compare(reports[1][0], reports[2][0]);
        cells.push_back({spec.label() + " absorb-vs-randomize", x_mode.pass, detail::compare_detail(x_mode)});
    }

    for (int k = 0; k < opt.sweep_points; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / opt.sweep_points;
        const ExperimentSpec spec = ExperimentSpec::mach_zehnder(phi);
        RunConfig a;
        a.experiment = spec;
        a.engine = "orthodox";
        a.trials = opt.trials;
        a.seed = opt.base_seed + 77;
        a.workers = opt.workers;
        RunConfig b = a;
        b.engine = "pilotwave";
        b.seed = opt.base_seed + 78;
        const auto cmp = stats::compare(run_simulation(a), run_simulation(b));
        cells.push_back({"mach-zehnder sweep k=" + std::to_string(k) + " phi=" + detail::fmt("%.4f", phi), cmp.pass,
                         detail::compare_detail(cmp)});
    }

    return cells;
}

}  // namespace thetasim
