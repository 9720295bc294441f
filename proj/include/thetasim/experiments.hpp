#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "thetasim/circuit.hpp"
#include "thetasim/events.hpp"

namespace thetasim {

enum class ExperimentKind { Renninger, RenningerFiber, MachZehnder, BombTester, InducedCoherence };
enum class BombState { Absent, Fake, Usable };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Renninger: return "renninger";
        case ExperimentKind::RenningerFiber: return "renninger-fiber";
        case ExperimentKind::MachZehnder: return "mach-zehnder";
        case ExperimentKind::BombTester: return "bomb-tester";
        case ExperimentKind::InducedCoherence: return "induced-coherence";
    }
    return "?";
}

inline const char* to_string(BombState b) {
    switch (b) {
        case BombState::Absent: return "absent";
        case BombState::Fake: return "fake";
        case BombState::Usable: return "usable";
    }
    return "?";
}

class ExperimentError : public std::runtime_error {
public:
    explicit ExperimentError(const std::string& msg) : std::runtime_error("BadParams: " + msg) {}
};

/// One of the five shipped setups plus its variant parameters. Construct via
/// the named factories; construction validates the parameter ranges.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Renninger;
    BombState bomb = BombState::Absent;  // bomb tester
    double transmittance = 1.0;          // induced coherence, object in the idler path
    double phase = 0.0;                  // Mach-Zehnder phase shifter
    double delay_short = 1.0;            // Renninger family
    double delay_long = 3.0;

    static ExperimentSpec renninger(double d_short = 1.0, double d_long = 3.0) {
        if (!(d_short >= 0.0) || !(d_long > d_short))
            throw ExperimentError("renninger delays must satisfy 0 <= short < long");
        ExperimentSpec s;
        s.kind = ExperimentKind::Renninger;
        s.delay_short = d_short;
        s.delay_long = d_long;
        return s;
    }

    /// Fiber variant: same statistics, much longer second arm.
    static ExperimentSpec renninger_fiber(double d_short = 1.0, double d_long = 100.0) {
        ExperimentSpec s = renninger(d_short, d_long);
        s.kind = ExperimentKind::RenningerFiber;
        return s;
    }

    static ExperimentSpec mach_zehnder(double phase = 0.0) {
        if (!std::isfinite(phase)) throw ExperimentError("mach-zehnder phase must be finite");
        ExperimentSpec s;
        s.kind = ExperimentKind::MachZehnder;
        s.phase = phase;
        return s;
    }

    static ExperimentSpec bomb_tester(BombState bomb) {
        ExperimentSpec s;
        s.kind = ExperimentKind::BombTester;
        s.bomb = bomb;
        return s;
    }

    static ExperimentSpec induced_coherence(double transmittance) {
        if (!(transmittance >= 0.0 && transmittance <= 1.0))
            throw ExperimentError("induced-coherence transmittance must lie in [0,1]");
        ExperimentSpec s;
        s.kind = ExperimentKind::InducedCoherence;
        s.transmittance = transmittance;
        return s;
    }

    bool operator==(const ExperimentSpec& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case ExperimentKind::Renninger:
            case ExperimentKind::RenningerFiber:
                return delay_short == o.delay_short && delay_long == o.delay_long;
            case ExperimentKind::MachZehnder: return phase == o.phase;
            case ExperimentKind::BombTester: return bomb == o.bomb;
            case ExperimentKind::InducedCoherence: return transmittance == o.transmittance;
        }
        return false;
    }

    std::string label() const {
        switch (kind) {
            case ExperimentKind::Renninger:
            case ExperimentKind::RenningerFiber: return std::string(to_string(kind));
            case ExperimentKind::MachZehnder:
                return phase == 0.0 ? std::string(to_string(kind))
                                    : std::string(to_string(kind)) + "{phi=" + std::to_string(phase) + "}";
            case ExperimentKind::BombTester: return std::string(to_string(kind)) + "{" + to_string(bomb) + "}";
            case ExperimentKind::InducedCoherence:
                return std::string(to_string(kind)) + "{t=" + std::to_string(transmittance) + "}";
        }
        return "?";
    }
};

namespace experiments {

/// Renninger arrangement: one splitter, a short reflected arm to D1 and a
/// long transmitted arm to D2.
inline Circuit build_renninger(const ExperimentSpec& s) {
    CircuitBuilder b(std::string(to_string(s.kind)));
    b.source("SPS").beamsplitter("BS", 0.5).detector("D1").detector("D2");
    b.connect("SPS.out0", "BS.in0", 0.0);
    b.connect("BS.out1", "D1.in0", s.delay_short);  // reflected, shorter route
    b.connect("BS.out0", "D2.in0", s.delay_long);   // transmitted, longer route
    return b.build();
}

/// Mach-Zehnder with equal arms; the upper arm carries the phase shifter.
inline Circuit build_mach_zehnder(const ExperimentSpec& s) {
    CircuitBuilder b(std::string(to_string(s.kind)));
    b.source("SPS").beamsplitter("BS1", 0.5).mirror("M1").phase_shifter("PS", s.phase).mirror("M2");
    b.beamsplitter("BS2", 0.5).detector("D1").detector("D2");
    b.connect("SPS.out0", "BS1.in0", 0.0);
    b.connect("BS1.out1", "M1.in0", 0.5);  // reflected -> upper arm
    b.connect("M1.out0", "PS.in0", 0.0);
    b.connect("PS.out0", "BS2.in1", 0.5);
    b.connect("BS1.out0", "M2.in0", 0.5);  // transmitted -> lower arm
    b.connect("M2.out0", "BS2.in0", 0.5);
    b.connect("BS2.out0", "D1.in0", 0.5);
    b.connect("BS2.out1", "D2.in0", 0.5);
    return b.build();
}

/// Bomb tester: Mach-Zehnder with the obstacle in the lower arm. A usable
/// bomb blocks completely; a fake one is transparent; absent omits it.
inline Circuit build_bomb_tester(const ExperimentSpec& s) {
    CircuitBuilder b(std::string(to_string(s.kind)));
    b.source("SPS").beamsplitter("BS1", 0.5).mirror("M1").mirror("M2").beamsplitter("BS2", 0.5);
    b.detector("D1").detector("D2");
    b.connect("SPS.out0", "BS1.in0", 0.0);
    b.connect("BS1.out1", "M1.in0", 0.5);
    b.connect("M1.out0", "BS2.in1", 1.0);
    b.connect("BS1.out0", "M2.in0", 0.5);
    if (s.bomb == BombState::Absent) {
        b.connect("M2.out0", "BS2.in0", 1.0);
    } else {
        b.obstacle("B", ObstacleCategory::Bomb, s.bomb == BombState::Usable ? 0.0 : 1.0,
                   /*usable=*/s.bomb == BombState::Usable);
        b.connect("M2.out0", "B.in0", 0.25);
        b.connect("B.out0", "BS2.in0", 0.75);
    }
    b.connect("BS2.out0", "D1.in0", 0.5);
    b.connect("BS2.out1", "D2.in0", 0.5);
    return b.build();
}

/// Two-crystal interferometer: the idler of the upper crystal is aligned
/// through the lower one, with the object O in between. t = 1 means the
/// object is absent. The combined idler leaves NL2.out1 undetected.
inline Circuit build_induced_coherence(const ExperimentSpec& s) {
    CircuitBuilder b(std::string(to_string(s.kind)));
    b.source("SPS").beamsplitter("BS1", 0.5).crystal("NL1").crystal("NL2").beamsplitter("BS2", 0.5);
    b.detector("D1").detector("D2");
    b.connect("SPS.out0", "BS1.in0", 0.0);
    b.connect("BS1.out1", "NL1.in0", 0.5);  // upper pump
    b.connect("BS1.out0", "NL2.in0", 1.0);  // lower pump
    b.connect("NL1.out0", "BS2.in1", 1.0);  // upper signal
    if (s.transmittance == 1.0) {
        b.connect("NL1.out1", "NL2.in1", 0.5);
    } else {
        b.obstacle("O", ObstacleCategory::Opaque, s.transmittance);
        b.connect("NL1.out1", "O.in0", 0.25);
        b.connect("O.out0", "NL2.in1", 0.25);
    }
    b.connect("NL2.out0", "BS2.in0", 0.5);  // lower signal
    b.connect("BS2.out0", "D1.in0", 0.5);
    b.connect("BS2.out1", "D2.in0", 0.5);
    return b.build();
}

}  // namespace experiments

/// Builds the circuit for a validated experiment spec.
inline Circuit build(const ExperimentSpec& s) {
    switch (s.kind) {
        case ExperimentKind::Renninger:
        case ExperimentKind::RenningerFiber: return experiments::build_renninger(s);
        case ExperimentKind::MachZehnder: return experiments::build_mach_zehnder(s);
        case ExperimentKind::BombTester: return experiments::build_bomb_tester(s);
        case ExperimentKind::InducedCoherence: return experiments::build_induced_coherence(s);
    }
    throw ExperimentError("unknown experiment kind");
}

/// Closed-form outcome distribution, derived by hand independently of either
/// engine. This is the oracle the engines are tested against.
inline OutcomeDistribution expected_distribution(const ExperimentSpec& s) {
    OutcomeDistribution d;
    switch (s.kind) {
        case ExperimentKind::Renninger:
        case ExperimentKind::RenningerFiber:
            d.entries["D1"] = 0.5;
            d.entries["D2"] = 0.5;
            break;
        case ExperimentKind::MachZehnder: {
            const double sh = std::sin(s.phase / 2.0);
            const double ch = std::cos(s.phase / 2.0);
            d.entries["D1"] = sh * sh;
            d.entries["D2"] = ch * ch;
            break;
        }
        case ExperimentKind::BombTester:
            if (s.bomb == BombState::Usable) {
                d.entries["Explosion"] = 0.5;
                d.entries["D1"] = 0.25;
                d.entries["D2"] = 0.25;
            } else {
                d.entries["D1"] = 0.0;
                d.entries["D2"] = 1.0;
            }
            break;
        case ExperimentKind::InducedCoherence:
            d.entries["D1"] = (1.0 - s.transmittance) / 2.0;
            d.entries["D2"] = (1.0 + s.transmittance) / 2.0;
            break;
    }
    return d;
}

}  // namespace thetasim
