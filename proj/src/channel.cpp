#include "fpm/channel.hpp"

#include <cmath>
#include <limits>

namespace fpm::channel {

Grid2D apply_noise(const Grid2D& image, const NoiseSpec& spec, rng::Stream& stream) {
    spec.validate();
    Grid2D out(image.rows, image.cols);
    const bool noiseless = std::isinf(spec.m);
    for (size_t i = 0; i < image.v.size(); ++i) {
        const double intensity = image.v[i];
        if (!std::isfinite(intensity))
            throw NumericError("apply_noise: non-finite input pixel at index " + std::to_string(i));
        if (intensity < 0)
            throw NumericError("apply_noise: negative input pixel at index " + std::to_string(i));
        if (noiseless) {
            out.v[i] = intensity;
            continue;
        }
        const double g = stream.normal();
        const double unclipped = intensity + g * std::sqrt(intensity / spec.m);
        out.v[i] = unclipped > 0.0 ? unclipped : 0.0;
    }
    return out;
}

double noise_gradient(double intensity, double m, double g, double unclipped) {
    if (unclipped <= 0.0) return 0.0;
    if (std::isinf(m) || intensity <= 0.0) return 1.0;
    return 1.0 + g / (2.0 * std::sqrt(intensity * m));
}

}  // namespace fpm::channel
