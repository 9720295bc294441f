#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

namespace thetasim {

/// Complex amplitude of one wave branch.
using Amplitude = std::complex<double>;

inline double intensity(const Amplitude& a) { return std::norm(a); }

/// Beam-splitter convention used project-wide: symmetric unitary with the
/// factor i on reflection,
///
///   out0 = sqrt(1-r)*in0 + i*sqrt(r)*in1
///   out1 = i*sqrt(r)*in0 + sqrt(1-r)*in1
///
/// r is the reflectivity. Port pairing: in0 transmits to out0, in1 to out1.
struct SplitterUnitary {
    double root_t;  // sqrt(1 - r)
    double root_r;  // sqrt(r)

    explicit SplitterUnitary(double reflectivity) {
        if (!(reflectivity >= 0.0 && reflectivity <= 1.0))
            throw std::invalid_argument("beam-splitter reflectivity outside [0,1]");
        root_r = std::sqrt(reflectivity);
        root_t = std::sqrt(1.0 - reflectivity);
    }

    std::pair<Amplitude, Amplitude> apply(const Amplitude& in0, const Amplitude& in1) const {
        const Amplitude i_r{0.0, root_r};
        return {root_t * in0 + i_r * in1, i_r * in0 + root_t * in1};
    }
};

/// Transforms an input amplitude pair through a beam splitter of the given
/// reflectivity. Total intensity is conserved.
inline std::pair<Amplitude, Amplitude> beamsplitter_transform(const Amplitude& in0,
                                                              const Amplitude& in1,
                                                              double reflectivity) {
    return SplitterUnitary(reflectivity).apply(in0, in1);
}

}  // namespace thetasim
