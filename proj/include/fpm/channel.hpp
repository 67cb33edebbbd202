#pragma once

#include <cstdint>

#include "fpm/core.hpp"
#include "fpm/rng.hpp"

namespace fpm::channel {

/// Gaussian approximation of Poisson noise. m scales signal-to-noise:
/// larger m, less noise.
struct NoiseSpec {
    double m = 1.0;
    uint64_t seed = 0;

    void validate() const {
        if (!(m > 0)) throw ConfigError("noise factor m must be positive");
    }
};

/// Per-pixel noise draw applied to a non-negative intensity image:
///   out = max((sqrt(I*m)*g + I*m) / m, 0),  g ~ N(0,1) fresh per call.
/// The caller owns the stream, so identical (image, m, stream state)
/// reproduce identical output. m = +infinity passes the image through.
Grid2D apply_noise(const Grid2D& image, const NoiseSpec& spec, rng::Stream& stream);

/// Derivative of the noise output with respect to the clean intensity,
/// holding the draw g fixed: 1 + g / (2*sqrt(I*m)) away from the clip,
/// 0 where the output was clipped, 1 at I = 0 where the stochastic term
/// has no defined derivative.
double noise_gradient(double intensity, double m, double g, double unclipped);

}  // namespace fpm::channel
