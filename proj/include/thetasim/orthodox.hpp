#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "thetasim/amplitude.hpp"
#include "thetasim/circuit.hpp"
#include "thetasim/events.hpp"
#include "thetasim/rng.hpp"

namespace thetasim::orthodox {

// Branches arriving at the same detector within this window are treated as
// simultaneous and may interfere.
inline constexpr double kTimeEps = 1e-9;

/// Coherence relation between branch groups. Group 0 is the undisturbed
/// source wave; each crystal's signal output gets its own group. A registered
/// pair carries a partial weight: the cross term between those groups is
/// scaled by it (1 = fully coherent, 0 = which-path information available).
class CoherenceModel {
public:
    static int group_for_crystal(int element_index) { return element_index + 1; }

    void register_pair(int g1, int g2, double weight) {
        pair_weight_[{std::min(g1, g2), std::max(g1, g2)}] = weight;
    }

    double weight(int g1, int g2) const {
        if (g1 == g2) return 1.0;
        auto it = pair_weight_.find({std::min(g1, g2), std::max(g1, g2)});
        return it == pair_weight_.end() ? 0.0 : it->second;
    }

private:
    std::map<std::pair<int, int>, double> pair_weight_;
};

/// Static which-path analysis: follows each crystal's idler output through
/// pass-through elements; if it terminates at another crystal's idler
/// injection port the two signal groups become mutually coherent, with the
/// cross term scaled by the product of obstacle transmittances along the way
/// (1 = unobstructed idler path, 0 = opaque object, which-path knowledge
/// available and interference destroyed).
inline CoherenceModel which_path_decoherence(const Circuit& c) {
    CoherenceModel model;
    for (std::size_t i = 0; i < c.elements().size(); ++i) {
        if (c.elements()[i].kind != ElementKind::NonlinearCrystal) continue;
        int seg = c.segment_from(static_cast<int>(i), 1);  // idler output
        double weight = 1.0;
        while (seg >= 0) {
            const auto& s = c.segment(seg);
            const Element& next = c.element(s.to_element);
            if (next.kind == ElementKind::NonlinearCrystal && s.to_port == 1) {
                model.register_pair(CoherenceModel::group_for_crystal(static_cast<int>(i)),
                                    CoherenceModel::group_for_crystal(s.to_element), weight);
                break;
            }
            if (next.kind == ElementKind::Obstacle) {
                weight *= next.transmittance;
                seg = c.segment_from(s.to_element, 0);
            } else if (next.kind == ElementKind::Mirror || next.kind == ElementKind::PhaseShifter) {
                seg = c.segment_from(s.to_element, 0);
            } else {
                break;  // idler ends somewhere that cannot re-align it
            }
        }
    }
    return model;
}

/// One amplitude contribution at a detector.
struct BranchHit {
    Amplitude amplitude;
    double time;
    int group;
};

/// Full analytic outcome of a circuit: the probability-wave picture evaluated
/// exactly, with coherent branches summed as amplitudes and incoherent ones
/// as intensities.
struct Propagation {
    OutcomeDistribution distribution;             // every detector label, plus absorption outcomes with p > 0
    std::map<std::string, double> outcome_time;   // outcome label -> event time
    std::map<std::string, double> detector_time;  // detector label -> earliest arrival with p > 0
    std::map<std::string, double> absorbed;       // obstacle element id -> absorbed probability
    std::map<std::string, std::vector<BranchHit>> hits;  // detector label -> raw branch arrivals
};

namespace detail {

struct Front {
    int element;
    int in_port;
    Amplitude amp;
    double time;
    int group;
};

inline void note_time(std::map<std::string, double>& times, const std::string& label, double t) {
    auto [it, inserted] = times.emplace(label, t);
    if (!inserted) it->second = std::min(it->second, t);
}

}  // namespace detail

/// Propagates the source amplitude through the circuit and returns the exact
/// detection statistics: terminal amplitudes per detector, absorbed
/// probability per obstacle, and arrival times. Coherent branches (same
/// group, simultaneous) are summed as complex amplitudes before squaring;
/// branches of different groups contribute cross terms scaled by the
/// coherence model's pairwise weight.
inline Propagation propagate(const Circuit& c) {
    const CoherenceModel model = which_path_decoherence(c);
    Propagation out;

    for (int det : c.detector_indices()) out.distribution.entries[c.element(det).label] = 0.0;

    std::vector<detail::Front> stack;

    auto forward = [&](int element, int port, const Amplitude& amp, double time, int group) {
        const int seg = c.segment_from(element, port);
        if (seg < 0) {
            // Unconnected output: the wave exits the apparatus. Keep the
            // weight booked so the distribution still sums to one.
            const double w = intensity(amp);
            if (w > 0.0) {
                const std::string label = "Lost:" + c.element(element).id + ".out" + std::to_string(port);
                out.distribution.entries[label] += w;
                detail::note_time(out.outcome_time, label, time);
            }
            return;
        }
        const auto& s = c.segment(seg);
        stack.push_back({s.to_element, s.to_port, amp, time + s.delay, group});
    };

    forward(c.source_index(), 0, Amplitude{1.0, 0.0}, 0.0, 0);

    while (!stack.empty()) {
        const detail::Front f = stack.back();
        stack.pop_back();
        const Element& e = c.element(f.element);
        switch (e.kind) {
            case ElementKind::Detector:
                out.hits[e.label].push_back({f.amp, f.time, f.group});
                break;
            case ElementKind::Mirror:
                forward(f.element, 0, f.amp, f.time, f.group);
                break;
            case ElementKind::PhaseShifter:
                forward(f.element, 0, f.amp * std::polar(1.0, e.phase), f.time, f.group);
                break;
            case ElementKind::Obstacle: {
                const double t = e.transmittance;
                const double w = (1.0 - t) * intensity(f.amp);
                if (w > 0.0) {
                    out.absorbed[e.id] += w;
                    detail::note_time(out.outcome_time, e.is_bomb() && e.usable ? "Explosion" : "Absorbed:" + e.id,
                                      f.time);
                }
                if (t > 0.0) forward(f.element, 0, f.amp * std::sqrt(t), f.time, f.group);
                break;
            }
            case ElementKind::BeamSplitter: {
                const SplitterUnitary u(e.reflectivity);
                const Amplitude refl = Amplitude{0.0, u.root_r} * f.amp;
                const Amplitude trans = u.root_t * f.amp;
                forward(f.element, 0, f.in_port == 0 ? trans : refl, f.time, f.group);
                forward(f.element, 1, f.in_port == 0 ? refl : trans, f.time, f.group);
                break;
            }
            case ElementKind::NonlinearCrystal:
                // Pump converts to the signal branch; the idler carries no
                // outcome probability of its own (its influence enters through
                // the coherence model). Idler injections (in1) do not flow on.
                if (f.in_port == 0)
                    forward(f.element, 0, f.amp, f.time, CoherenceModel::group_for_crystal(f.element));
                break;
            case ElementKind::Source:
                forward(f.element, 0, f.amp, f.time, f.group);
                break;
        }
    }

    // Detector probabilities: cluster hits by arrival time, then sum
    // P = sum_ij w(g_i, g_j) Re(conj(a_i) a_j) within each cluster.
    for (auto& [label, hits] : out.hits) {
        std::sort(hits.begin(), hits.end(), [](const BranchHit& a, const BranchHit& b) { return a.time < b.time; });
        double p = 0.0;
        std::size_t i = 0;
        while (i < hits.size()) {
            std::size_t j = i;
            while (j < hits.size() && hits[j].time - hits[i].time <= kTimeEps) ++j;
            double cluster = 0.0;
            for (std::size_t a = i; a < j; ++a)
                for (std::size_t b = i; b < j; ++b)
                    cluster += model.weight(hits[a].group, hits[b].group) *
                               (std::conj(hits[a].amplitude) * hits[b].amplitude).real();
            if (cluster > 1e-12) {
                if (!out.detector_time.count(label)) out.detector_time[label] = hits[i].time;
                p += cluster;
            }
            i = j;
        }
        if (p < 1e-12) p = 0.0;  // clamp interference dust so dark ports are exactly dark
        out.distribution.entries[label] = std::min(p, 1.0);
        if (p > 0.0) detail::note_time(out.outcome_time, label, out.detector_time[label]);
    }

    for (const auto& [elem_id, w] : out.absorbed) {
        const Element& e = c.element(c.element_index(elem_id));
        out.distribution.entries[e.is_bomb() && e.usable ? "Explosion" : "Absorbed:" + elem_id] += w;
    }

    return out;
}

/// State of the probability wave: the branch collection plus collapse flag.
/// carries_acron is always false here; there is no corpuscle in this picture.
struct OrthodoxState {
    std::vector<WavePacket> branches;
    bool collapsed = false;
    std::uint64_t rng_seed = 0;
};

class AllPathsBlocked : public std::runtime_error {
public:
    AllPathsBlocked() : std::runtime_error("AllPathsBlocked: every branch is absorbed; conditional state undefined") {}
};

/// Conditional state given that no obstacle absorbed the photon: the branch
/// set is snapshotted at the latest obstacle arrival time, fully blocked
/// branches are removed and the survivors renormalized to weight 1. When
/// nothing is absorbed (fake bomb, transparent object) the reduction is the
/// identity. Obstacle-free circuits also reduce to the identity: the
/// undisturbed wave just after the source. Throws AllPathsBlocked when every
/// branch is absorbed.
inline OrthodoxState blocked_path_reduction(const Circuit& c) {
    struct Walk {
        int element;
        int in_port;
        Amplitude amp;
        double time;
        std::vector<std::pair<int, double>> timeline;  // (segment, enter time)
        bool absorbed = false;
    };

    OrthodoxState state;
    bool any_obstacle = false;
    for (const auto& e : c.elements()) any_obstacle |= (e.kind == ElementKind::Obstacle);
    if (!any_obstacle) {
        WavePacket p;
        p.amplitude = Amplitude{1.0, 0.0};
        p.segment = c.segment_from(c.source_index(), 0);
        state.branches.push_back(p);
        return state;
    }

    std::vector<Walk> done;
    std::vector<Walk> stack;
    double slice = 0.0;  // latest obstacle arrival

    auto follow = [&](const Walk& w, int port, const Amplitude& amp) {
        const int seg = c.segment_from(w.element, port);
        if (seg < 0) return;  // exits the apparatus
        Walk next = w;
        next.timeline.push_back({seg, next.time});
        next.amp = amp;
        next.time += c.segment(seg).delay;
        next.element = c.segment(seg).to_element;
        next.in_port = c.segment(seg).to_port;
        stack.push_back(std::move(next));
    };

    stack.push_back({c.source_index(), 0, Amplitude{1.0, 0.0}, 0.0, {}, false});
    while (!stack.empty()) {
        Walk w = std::move(stack.back());
        stack.pop_back();
        const Element& e = c.element(w.element);
        switch (e.kind) {
            case ElementKind::Detector:
                done.push_back(std::move(w));
                break;
            case ElementKind::Mirror:
                follow(w, 0, w.amp);
                break;
            case ElementKind::PhaseShifter:
                follow(w, 0, w.amp * std::polar(1.0, e.phase));
                break;
            case ElementKind::Obstacle:
                slice = std::max(slice, w.time);
                if (e.transmittance == 0.0) {
                    w.absorbed = true;
                    done.push_back(std::move(w));
                } else {
                    follow(w, 0, w.amp * std::sqrt(e.transmittance));
                }
                break;
            case ElementKind::BeamSplitter: {
                const SplitterUnitary u(e.reflectivity);
                const Amplitude refl = Amplitude{0.0, u.root_r} * w.amp;
                const Amplitude trans = u.root_t * w.amp;
                follow(w, 0, w.in_port == 0 ? trans : refl);
                follow(w, 1, w.in_port == 0 ? refl : trans);
                break;
            }
            case ElementKind::NonlinearCrystal:
                if (w.in_port == 0) follow(w, 0, w.amp);
                break;
            case ElementKind::Source:
                follow(w, 0, w.amp);
                break;
        }
    }

    double surviving = 0.0;
    std::map<int, WavePacket> merged;  // by occupied segment at the slice time
    for (const auto& w : done) {
        if (w.absorbed || w.timeline.empty()) continue;
        surviving += intensity(w.amp);
        // First segment whose exit time lies after the slice; if the branch
        // already terminated, it stays on its final segment.
        int seg = w.timeline.back().first;
        for (const auto& [s, enter] : w.timeline) {
            if (slice < enter + c.segment(s).delay) {
                seg = s;
                break;
            }
        }
        auto& p = merged[seg];
        p.amplitude += w.amp;
        p.segment = seg;
        p.arrival_time = slice;
    }

    if (surviving <= 0.0) throw AllPathsBlocked();

    state.collapsed = surviving < 1.0 - 1e-12;
    const double scale = state.collapsed ? 1.0 / std::sqrt(surviving) : 1.0;
    for (auto& [seg, p] : merged) {
        p.amplitude *= scale;
        state.branches.push_back(p);
    }
    return state;
}

/// Samples the circuit's analytic distribution once per trial and renders the
/// event timeline. When the sampled outcome is a detection strictly later
/// than the earliest possible detection, a NegativeCollapse event marks the
/// silent earlier window: the wave collapsed there without any interaction.
class Engine {
public:
    explicit Engine(Circuit circuit) : circuit_(std::move(circuit)), prop_(propagate(circuit_)) {
        for (const auto& [label, p] : prop_.distribution.entries) {
            if (p <= 0.0) continue;
            labels_.push_back(label);
            total_ += p;
            cumulative_.push_back(total_);
        }
        for (const auto& [label, t] : prop_.detector_time) {
            if (earliest_label_.empty() || t < earliest_time_) {
                earliest_label_ = label;
                earliest_time_ = t;
            }
        }
    }

    const Propagation& propagation() const { return prop_; }

    std::vector<TrialEvent> sample_trial(TrialRng& rng, std::int64_t trial_index = 0) const {
        const double u = rng.uniform01() * total_;
        std::size_t k = 0;
        while (k + 1 < cumulative_.size() && u >= cumulative_[k]) ++k;
        const std::string& label = labels_[k];

        std::vector<TrialEvent> events;
        const double t_outcome = prop_.outcome_time.count(label) ? prop_.outcome_time.at(label) : 0.0;
        const bool is_detection = prop_.detector_time.count(label) > 0;
        if (is_detection && t_outcome > earliest_time_ + kTimeEps) {
            // Negative result: the earlier detector stayed silent, which
            // already excludes its branch before the click happens.
            events.push_back({earliest_time_, EventKind::NegativeCollapse, earliest_label_, false, trial_index});
        }
        if (is_detection) {
            events.push_back({t_outcome, EventKind::Click, label, true, trial_index});
        } else if (label == "Explosion") {
            events.push_back({t_outcome, EventKind::Explosion, explosion_element_id(), true, trial_index});
        } else {
            // "Absorbed:<id>" or "Lost:<port>"
            const auto colon = label.find(':');
            events.push_back({t_outcome, EventKind::Absorption, label.substr(colon + 1), true, trial_index});
        }
        return events;
    }

private:
    std::string explosion_element_id() const {
        for (const auto& e : circuit_.elements())
            if (e.is_bomb() && e.usable) return e.id;
        return "bomb";
    }

    Circuit circuit_;  // declared before prop_: construction propagates through it
    Propagation prop_;
    std::vector<std::string> labels_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
    std::string earliest_label_;
    double earliest_time_ = 0.0;
};

/// One-shot convenience matching the operation signature; heavy callers keep
/// an Engine and reuse its cached propagation.
inline std::vector<TrialEvent> sample_trial(const Circuit& c, TrialRng& rng, std::int64_t trial_index = 0) {
    return Engine(c).sample_trial(rng, trial_index);
}

}  // namespace thetasim::orthodox
