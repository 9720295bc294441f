#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "thetasim/amplitude.hpp"
#include "thetasim/circuit.hpp"
#include "thetasim/events.hpp"
#include "thetasim/rng.hpp"

namespace thetasim::pilotwave {

inline constexpr double kTimeEps = 1e-9;
// Relative intensity below which a port or packet counts as dark. Kills
// floating-point dust at destructively interfering ports.
inline constexpr double kDarkEps = 1e-12;

/// What happens to an empty theta wave at an obstacle. The paper treats the
/// two as physically interchangeable; both are kept so that claim is testable.
enum class EmptyWaveMode { Absorb, Randomize };

inline const char* to_string(EmptyWaveMode m) { return m == EmptyWaveMode::Absorb ? "absorb" : "randomize"; }

/// Corpuscle routing rule. ArgmaxOnly is a deliberate mutation hook used by
/// the negative tests; it is not reachable from the CLI.
enum class RoutingRule { IntensityProportional, ArgmaxOnly };

struct PilotConfig {
    EmptyWaveMode mode = EmptyWaveMode::Absorb;
    RoutingRule routing = RoutingRule::IntensityProportional;
    bool empty_waves_click = false;  // mutation hook for the negative tests
};

enum class EngineFault { ZeroTotalIntensity, AcronPacketNotAllowed, ModelBug };

inline const char* to_string(EngineFault f) {
    switch (f) {
        case EngineFault::ZeroTotalIntensity: return "ZeroTotalIntensity";
        case EngineFault::AcronPacketNotAllowed: return "AcronPacketNotAllowed";
        case EngineFault::ModelBug: return "ModelBug";
    }
    return "?";
}

class EngineError : public std::runtime_error {
public:
    EngineError(EngineFault fault, const std::string& msg)
        : std::runtime_error(std::string(to_string(fault)) + ": " + msg), fault_(fault) {}
    EngineFault fault() const { return fault_; }

private:
    EngineFault fault_;
};

/// The corpuscle is sent preferentially toward regions of higher wave
/// intensity; quantitatively, an output port is drawn with probability
/// proportional to the superposed intensity there. A dark port is never
/// chosen. Throws ZeroTotalIntensity when every output is dark, which means
/// the wave model upstream lost the corpuscle's wave.
inline std::size_t eurhythmy_route(std::span<const double> port_intensities, TrialRng& rng,
                                   RoutingRule rule = RoutingRule::IntensityProportional) {
    double total = 0.0;
    for (double w : port_intensities) total += w;
    if (!(total > kDarkEps))
        throw EngineError(EngineFault::ZeroTotalIntensity, "all recombiner outputs are dark");
    if (rule == RoutingRule::ArgmaxOnly) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < port_intensities.size(); ++k)
            if (port_intensities[k] > port_intensities[best]) best = k;
        return best;
    }
    // Clamp dust so a destructively dark port cannot swallow the corpuscle.
    std::vector<double> w(port_intensities.begin(), port_intensities.end());
    for (double& x : w)
        if (x < kDarkEps * total) x = 0.0;
    return rng.pick(w);
}

/// Splits one packet at a beam splitter. Amplitudes follow the splitter
/// unitary; if the incoming packet carries the acron, exactly one output
/// does, chosen with probability proportional to the output intensities. The
/// other output is an empty wave.
inline std::pair<WavePacket, WavePacket> split_wave(const WavePacket& in, const Element& splitter, TrialRng& rng) {
    if (splitter.kind != ElementKind::BeamSplitter)
        throw EngineError(EngineFault::ModelBug, "split_wave requires a beam splitter");
    const SplitterUnitary u(splitter.reflectivity);
    const auto [a0, a1] = u.apply(in.amplitude, Amplitude{0.0, 0.0});

    WavePacket out0 = in;
    WavePacket out1 = in;
    out0.amplitude = a0;
    out1.amplitude = a1;
    out0.carries_acron = out1.carries_acron = false;
    if (in.carries_acron) {
        const std::array<double, 2> w{intensity(a0), intensity(a1)};
        (eurhythmy_route(w, rng) == 0 ? out0 : out1).carries_acron = true;
    }
    return {out0, out1};
}

enum class ObstacleResult { Passed, Absorbed, Randomized };

struct ObstacleInteraction {
    ObstacleResult result;
    WavePacket packet;  // meaningful unless Absorbed
};

/// Empty theta wave meeting an obstacle. Fully blocking obstacles either
/// absorb the wave or scramble its phase (mode), destroying its coherence
/// with everything else; either way it can no longer interfere. Partially
/// transmitting obstacles attenuate ordinary waves by sqrt(t); an idler wave
/// instead passes intact with probability t, since phase-locking downstream
/// needs an undisturbed wave or none at all. An acron-carrying packet must go
/// through trigger_obstacle instead.
///
/// fresh_group must be unique within the trial; a randomized packet moves
/// into it so it stops contributing to interference terms.
inline ObstacleInteraction empty_wave_obstacle_interaction(const WavePacket& in, const Element& obstacle,
                                                           EmptyWaveMode mode, TrialRng& rng, int fresh_group) {
    if (in.carries_acron)
        throw EngineError(EngineFault::AcronPacketNotAllowed, "acron packet routed into the empty-wave interaction");
    if (obstacle.kind != ElementKind::Obstacle)
        throw EngineError(EngineFault::ModelBug, "empty_wave_obstacle_interaction requires an obstacle");

    const double t = obstacle.transmittance;
    if (t >= 1.0) return {ObstacleResult::Passed, in};

    const bool interacts = (in.species == Species::Idler) ? !rng.bernoulli(t) : (t <= 0.0);
    if (!interacts) {
        WavePacket out = in;
        if (in.species != Species::Idler) out.amplitude *= std::sqrt(t);
        return {ObstacleResult::Passed, out};
    }
    if (mode == EmptyWaveMode::Absorb) return {ObstacleResult::Absorbed, in};

    WavePacket out = in;
    out.phase_randomized = true;
    out.coherence_group = fresh_group;
    out.amplitude *= std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
    return {ObstacleResult::Randomized, out};
}

/// Acron-carrying packet meeting a blocking obstacle: the corpuscle has the
/// energy to interact. A usable bomb explodes; an opaque object absorbs the
/// corpuscle. Either way the acron is consumed.
inline TrialEvent trigger_obstacle(const WavePacket& packet, const Element& obstacle, std::int64_t trial_index = 0) {
    if (!packet.carries_acron)
        throw EngineError(EngineFault::ModelBug, "trigger_obstacle requires the acron packet");
    TrialEvent e;
    e.time = packet.arrival_time;
    e.kind = obstacle.is_bomb() && obstacle.usable ? EventKind::Explosion : EventKind::Absorption;
    e.target = obstacle.id;
    e.particle = true;
    e.trial_index = trial_index;
    return e;
}

/// Arrival at a detector. Only the acron has enough energy to trigger a
/// click; an empty wave arrives silently and is logged as a diagnostic.
inline TrialEvent detect(const WavePacket& packet, const Element& detector, std::int64_t trial_index = 0) {
    TrialEvent e;
    e.time = packet.arrival_time;
    e.kind = packet.carries_acron ? EventKind::Click : EventKind::EmptyWaveArrival;
    e.target = detector.label;
    e.particle = packet.carries_acron;
    e.trial_index = trial_index;
    return e;
}

/// Whether an idler wave arriving at a crystal's injection port locks the
/// phases of the two crystals' signal waves. A phase-randomized idler lost
/// its coherence on the way and cannot lock anything.
inline bool induced_coherence(const WavePacket& idler_at_injection) {
    return idler_at_injection.species == Species::Idler && !idler_at_injection.phase_randomized;
}

namespace detail {

struct Arrival {
    WavePacket packet;
    int element;
    int port;
    std::uint64_t seq;
};

struct ArrivalOrder {
    bool operator()(const Arrival& a, const Arrival& b) const {
        if (a.packet.arrival_time != b.packet.arrival_time) return a.packet.arrival_time < b.packet.arrival_time;
        if (a.element != b.element) return a.element < b.element;
        if (a.port != b.port) return a.port < b.port;
        return a.seq < b.seq;
    }
};

// Coherent channel flowing through a beam splitter: amplitudes present at the
// two input ports for one coherence group.
struct Channel {
    Amplitude in0{0.0, 0.0};
    Amplitude in1{0.0, 0.0};
    bool randomized = false;
    Species species = Species::Plain;
};

}  // namespace detail

/// One complete pilot-wave trial: the theta wave splits at every element,
/// exactly one acron rides one branch, empty waves interact physically with
/// obstacles, and eurhythmy routes the acron wherever waves recombine.
/// Packets are processed in arrival-time order; simultaneous arrivals at the
/// same element superpose. An explosion destroys the apparatus and ends the
/// trial; after any other acron consumption the remaining empty waves keep
/// flying and their arrivals stay in the log as diagnostics.
class Trial {
public:
    Trial(const Circuit& circuit, const PilotConfig& config, TrialRng& rng, std::int64_t trial_index)
        : c_(circuit), cfg_(config), rng_(rng), trial_index_(trial_index) {
        next_group_ = static_cast<int>(circuit.elements().size()) + 1;
    }

    std::vector<TrialEvent> run() {
        WavePacket initial;
        initial.amplitude = Amplitude{1.0, 0.0};
        initial.carries_acron = true;
        initial.coherence_group = 0;
        initial.species = c_.has_crystal() ? Species::Pump : Species::Plain;
        initial.arrival_time = 0.0;
        emit(c_.source_index(), 0, initial, 0.0);

        while (!queue_.empty() && !exploded_) {
            // Batch of simultaneous arrivals at one element.
            std::vector<detail::Arrival> batch;
            batch.push_back(pop_front());
            while (!queue_.empty()) {
                const auto& top = queue_.front();
                if (top.element != batch.front().element ||
                    top.packet.arrival_time - batch.front().packet.arrival_time > kTimeEps)
                    break;
                batch.push_back(pop_front());
            }
            dispatch(batch);
        }
        return std::move(events_);
    }

private:
    detail::Arrival pop_front() {
        std::pop_heap(queue_.begin(), queue_.end(), by_order_);
        detail::Arrival a = std::move(queue_.back());
        queue_.pop_back();
        return a;
    }

    const detail::Arrival& peek() const { return queue_.front(); }

    void emit(int element, int out_port, WavePacket p, double now) {
        const int seg = c_.segment_from(element, out_port);
        if (seg < 0) {
            // Beam dump: the wave exits the apparatus.
            if (p.carries_acron)
                throw EngineError(EngineFault::ModelBug,
                                  "acron exited through unconnected port of '" + c_.element(element).id + "'");
            return;
        }
        const auto& s = c_.segment(seg);
        p.segment = seg;
        p.arrival_time = now + s.delay;
        queue_.push_back({std::move(p), s.to_element, s.to_port, seq_++});
        std::push_heap(queue_.begin(), queue_.end(), by_order_);
    }

    void log(TrialEvent e) {
        e.trial_index = trial_index_;
        events_.push_back(std::move(e));
    }

    void dispatch(std::vector<detail::Arrival>& batch) {
        const int element = batch.front().element;
        const Element& e = c_.element(element);
        const double now = batch.front().packet.arrival_time;
        switch (e.kind) {
            case ElementKind::Detector: handle_detector(e, batch, now); break;
            case ElementKind::Mirror:
                for (auto& a : batch) emit(element, 0, std::move(a.packet), now);
                break;
            case ElementKind::PhaseShifter:
                for (auto& a : batch) {
                    a.packet.amplitude *= std::polar(1.0, e.phase);
                    emit(element, 0, std::move(a.packet), now);
                }
                break;
            case ElementKind::Obstacle: handle_obstacle(element, e, batch, now); break;
            case ElementKind::BeamSplitter: handle_splitter(element, e, batch, now); break;
            case ElementKind::NonlinearCrystal: handle_crystal(element, batch, now); break;
            case ElementKind::Source:
                throw EngineError(EngineFault::ModelBug, "wave routed into the source");
        }
    }

    void handle_detector(const Element& e, std::vector<detail::Arrival>& batch, double now) {
        // The detector sees one wavefront per batch, not one per bookkeeping
        // packet.
        bool acron = false;
        for (const auto& a : batch) acron |= a.packet.carries_acron;
        if (acron) {
            WavePacket p = batch.front().packet;
            p.carries_acron = true;
            p.arrival_time = now;
            log(detect(p, e, trial_index_));
        } else if (cfg_.empty_waves_click) {
            log({now, EventKind::Click, e.label, false, trial_index_});
        } else {
            log({now, EventKind::EmptyWaveArrival, e.label, false, trial_index_});
        }
    }

    void handle_obstacle(int element, const Element& e, std::vector<detail::Arrival>& batch, double now) {
        for (auto& a : batch) {
            WavePacket& p = a.packet;
            if (p.carries_acron) {
                const double t = e.transmittance;
                if (t >= 1.0 || (t > 0.0 && rng_.uniform01() < t)) {
                    if (t < 1.0) p.amplitude *= std::sqrt(t);
                    emit(element, 0, std::move(p), now);
                } else {
                    log(trigger_obstacle(p, e, trial_index_));
                    if (e.is_bomb() && e.usable) {
                        exploded_ = true;
                        return;  // the apparatus is gone
                    }
                }
                continue;
            }
            auto outcome = empty_wave_obstacle_interaction(p, e, cfg_.mode, rng_, next_group_);
            switch (outcome.result) {
                case ObstacleResult::Passed:
                    emit(element, 0, std::move(outcome.packet), now);
                    break;
                case ObstacleResult::Absorbed:
                    log({now, EventKind::Absorption, e.id, false, trial_index_});
                    break;
                case ObstacleResult::Randomized:
                    ++next_group_;
                    emit(element, 0, std::move(outcome.packet), now);
                    break;
            }
        }
    }

    void handle_splitter(int element, const Element& e, std::vector<detail::Arrival>& batch, double now) {
        // Superpose per coherence group, then let eurhythmy place the acron
        // by the total output intensities.
        std::map<int, detail::Channel> channels;
        bool acron_in = false;
        for (const auto& a : batch) {
            auto& ch = channels[a.packet.coherence_group];
            (a.port == 0 ? ch.in0 : ch.in1) += a.packet.amplitude;
            ch.randomized |= a.packet.phase_randomized;
            ch.species = a.packet.species;
            acron_in |= a.packet.carries_acron;
        }

        const SplitterUnitary u(e.reflectivity);
        struct Out {
            int group;
            Amplitude amp;
            bool randomized;
            Species species;
        };
        std::array<std::vector<Out>, 2> outs;
        std::array<double, 2> port_intensity{0.0, 0.0};
        double total_in = 0.0;
        for (const auto& [group, ch] : channels) {
            total_in += intensity(ch.in0) + intensity(ch.in1);
            const auto [o0, o1] = u.apply(ch.in0, ch.in1);
            outs[0].push_back({group, o0, ch.randomized, ch.species});
            outs[1].push_back({group, o1, ch.randomized, ch.species});
            port_intensity[0] += intensity(o0);
            port_intensity[1] += intensity(o1);
        }

        std::size_t acron_port = 0;
        if (acron_in) acron_port = eurhythmy_route(port_intensity, rng_, cfg_.routing);

        for (int port = 0; port < 2; ++port) {
            // The acron rides the superposed wavefront at its port; bookkeeping
            // pins it to the strongest group there.
            int strongest = -1;
            double strongest_w = -1.0;
            for (std::size_t k = 0; k < outs[static_cast<std::size_t>(port)].size(); ++k) {
                const auto& o = outs[static_cast<std::size_t>(port)][k];
                if (intensity(o.amp) > strongest_w) {
                    strongest_w = intensity(o.amp);
                    strongest = static_cast<int>(k);
                }
            }
            for (std::size_t k = 0; k < outs[static_cast<std::size_t>(port)].size(); ++k) {
                const auto& o = outs[static_cast<std::size_t>(port)][k];
                if (intensity(o.amp) <= kDarkEps * total_in) continue;  // dark
                WavePacket p;
                p.amplitude = o.amp;
                p.coherence_group = o.group;
                p.phase_randomized = o.randomized;
                p.species = o.species;
                p.carries_acron =
                    acron_in && static_cast<std::size_t>(port) == acron_port && static_cast<int>(k) == strongest;
                emit(element, port, std::move(p), now);
            }
        }
    }

    void handle_crystal(int element, std::vector<detail::Arrival>& batch, double now) {
        // Idler injections first: alignment must be settled before this
        // crystal converts.
        for (auto& a : batch) {
            if (a.port != 1) continue;
            if (converted_.count(element))
                throw EngineError(EngineFault::ModelBug, "idler alignment arrived after conversion at '" +
                                                             c_.element(element).id + "'");
            if (induced_coherence(a.packet)) locked_group_[element] = a.packet.coherence_group;
            emit(element, 1, std::move(a.packet), now);  // joins the combined idler mode
        }
        for (auto& a : batch) {
            if (a.port != 0) continue;
            converted_.insert(element);
            const int own_group = element + 1;  // one group per crystal
            const auto lock = locked_group_.find(element);

            WavePacket signal = a.packet;
            signal.species = Species::Signal;
            signal.coherence_group = lock != locked_group_.end() ? lock->second : own_group;
            // The detected pair is the acron's pair: the corpuscle transfers
            // to the signal wave of its own crystal.
            signal.carries_acron = a.packet.carries_acron;

            WavePacket idler = a.packet;
            idler.species = Species::Idler;
            idler.coherence_group = own_group;
            idler.carries_acron = false;

            emit(element, 0, std::move(signal), now);
            emit(element, 1, std::move(idler), now);
        }
    }

    const Circuit& c_;
    const PilotConfig& cfg_;
    TrialRng& rng_;
    std::int64_t trial_index_;

    std::vector<detail::Arrival> queue_;  // heap
    struct Greater {
        detail::ArrivalOrder lt;
        bool operator()(const detail::Arrival& a, const detail::Arrival& b) const { return lt(b, a); }
    } by_order_;
    std::uint64_t seq_ = 0;
    std::vector<TrialEvent> events_;
    bool exploded_ = false;
    int next_group_ = 1;
    std::map<int, int> locked_group_;  // crystal element -> group its signals lock onto
    std::set<int> converted_;
};

/// Runs one trial and returns the full event log, empty-wave diagnostics
/// included.
inline std::vector<TrialEvent> run_trial(const Circuit& circuit, const PilotConfig& config, TrialRng& rng,
                                         std::int64_t trial_index = 0) {
    return Trial(circuit, config, rng, trial_index).run();
}

}  // namespace thetasim::pilotwave
