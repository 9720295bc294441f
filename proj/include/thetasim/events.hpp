#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "thetasim/amplitude.hpp"

namespace thetasim {

enum class Species { Plain, Pump, Signal, Idler };

inline const char* to_string(Species s) {
    switch (s) {
        case Species::Plain: return "plain";
        case Species::Pump: return "pump";
        case Species::Signal: return "signal";
        case Species::Idler: return "idler";
    }
    return "?";
}

/// One branch of the wave in flight on a segment.
///
/// In the orthodox engine carries_acron is always false; in the pilot-wave
/// engine at most one packet in the whole system carries the acron. A
/// phase-randomized packet sits in its own coherence group and therefore
/// never contributes to interference cross terms.
struct WavePacket {
    Amplitude amplitude{0.0, 0.0};
    int segment = -1;  // index into Circuit::segments()
    double arrival_time = 0.0;
    bool carries_acron = false;
    int coherence_group = 0;
    bool phase_randomized = false;
    Species species = Species::Plain;
};

enum class EventKind { Click, Explosion, Absorption, NegativeCollapse, EmptyWaveArrival };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Click: return "Click";
        case EventKind::Explosion: return "Explosion";
        case EventKind::Absorption: return "Absorption";
        case EventKind::NegativeCollapse: return "NegativeCollapse";
        case EventKind::EmptyWaveArrival: return "EmptyWaveArrival";
    }
    return "?";
}

/// Timestamped occurrence within one trial. `target` is the detector label,
/// the absorbing element id, or the excluded branch for a negative collapse.
/// `particle` records provenance: whether the event involved the particle
/// itself (the acron, or the sampled photon) rather than an empty wave.
struct TrialEvent {
    double time = 0.0;
    EventKind kind = EventKind::Click;
    std::string target;
    bool particle = false;
    std::int64_t trial_index = 0;
};

/// A trial's terminal outcome: a click, an explosion, or the particle being
/// absorbed. Empty-wave absorptions and diagnostics are not terminal.
inline bool is_terminal(const TrialEvent& e) {
    switch (e.kind) {
        case EventKind::Click:
        case EventKind::Explosion: return true;
        case EventKind::Absorption: return e.particle;
        default: return false;
    }
}

inline std::string outcome_label(const TrialEvent& e) {
    switch (e.kind) {
        case EventKind::Click: return e.target;
        case EventKind::Explosion: return "Explosion";
        default: return "Absorbed:" + e.target;
    }
}

/// Mapping from terminal outcome label to probability.
struct OutcomeDistribution {
    std::map<std::string, double> entries;

    double prob(const std::string& label) const {
        auto it = entries.find(label);
        return it == entries.end() ? 0.0 : it->second;
    }

    double total() const {
        double s = 0.0;
        for (const auto& [_, p] : entries) s += p;
        return s;
    }

    bool is_normalized(double eps = 1e-12) const { return std::fabs(total() - 1.0) <= eps; }
};

}  // namespace thetasim
