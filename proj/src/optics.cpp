#include "fpm/optics.hpp"

#include <cmath>

#include "fpm/fft.hpp"

namespace fpm::optics {

int OpticalConfig::downsample_factor() const {
    const double sensor_referred = sensor_pixel / magnification;
    const double highres = object_extent / highres_pixels;
    const double k = sensor_referred / highres;
    const int ki = static_cast<int>(std::lround(k));
    if (ki < 1 || std::fabs(k - ki) > 1e-9 * k)
        throw ConfigError("downsample factor " + std::to_string(k) + " is not a positive integer");
    return ki;
}

int OpticalConfig::active_led_count() const {
    int n = 0;
    for (bool b : active_led_mask) n += b ? 1 : 0;
    return n;
}

void OpticalConfig::validate() const {
    if (wavelength <= 0 || sensor_pixel <= 0 || object_extent <= 0 || led_pitch <= 0 || led_height <= 0)
        throw ConfigError("all lengths must be positive");
    if (objective_na <= 0 || objective_na > 1) throw ConfigError("objective NA must lie in (0, 1]");
    if (magnification <= 0) throw ConfigError("magnification must be positive");
    if (highres_pixels <= 0 || led_grid <= 0) throw ConfigError("grid sizes must be positive");
    if (static_cast<int>(active_led_mask.size()) != led_grid * led_grid)
        throw ConfigError("active LED mask size " + std::to_string(active_led_mask.size()) +
                          " does not match " + std::to_string(led_grid) + "^2 grid");
    if (active_led_count() == 0) throw ConfigError("no active LEDs");
    if (highres_pixels % downsample_factor() != 0)
        throw ConfigError("high-res grid not divisible by downsample factor");
}

LedGeometry LedGeometry::from_config(const OpticalConfig& cfg) {
    LedGeometry geo;
    const double half = (cfg.led_grid - 1) / 2.0;
    for (int r = 0; r < cfg.led_grid; ++r) {
        for (int c = 0; c < cfg.led_grid; ++c) {
            if (!cfg.active_led_mask[static_cast<size_t>(r) * cfg.led_grid + c]) continue;
            geo.positions.push_back({(c - half) * cfg.led_pitch, (r - half) * cfg.led_pitch, cfg.led_height});
        }
    }
    return geo;
}

std::pair<double, double> led_spatial_frequency(const LedPosition& pos, double wavelength) {
    if (wavelength <= 0) throw ConfigError("wavelength must be positive");
    const double norm = std::sqrt(pos.x * pos.x + pos.y * pos.y + pos.z * pos.z);
    if (norm == 0.0 || pos.z <= 0) throw ConfigError("degenerate LED position");
    return {-pos.x / (wavelength * norm), -pos.y / (wavelength * norm)};
}

double synthetic_na(const OpticalConfig& cfg) {
    const auto geo = LedGeometry::from_config(cfg);
    if (geo.positions.empty()) throw ConfigError("no active LEDs");
    double max_sin = 0.0;
    for (const auto& p : geo.positions) {
        const double r = std::hypot(p.x, p.y);
        max_sin = std::max(max_sin, r / std::hypot(r, p.z));
    }
    return cfg.objective_na + max_sin;
}

PupilFunction frequency_mask(const OpticalConfig& cfg, int grid_side, double cutoff) {
    PupilFunction p;
    p.cutoff = cutoff;
    p.mask = Grid2D(grid_side, grid_side);
    const double du = 1.0 / cfg.object_extent;
    const double cut2 = cutoff * cutoff;
    for (int r = 0; r < grid_side; ++r) {
        const double ur = fft::freq_index(r, grid_side) * du;
        for (int c = 0; c < grid_side; ++c) {
            const double uc = fft::freq_index(c, grid_side) * du;
            p.mask.at(r, c) = (ur * ur + uc * uc <= cut2) ? 1.0 : 0.0;
        }
    }
    return p;
}

PupilFunction pupil_mask(const OpticalConfig& cfg, int grid_side) {
    if (grid_side != cfg.highres_pixels)
        throw ShapeError("pupil grid must match the high-resolution field grid");
    return frequency_mask(cfg, grid_side, cfg.objective_na / cfg.wavelength);
}

Grid2D block_mean(const Grid2D& in, int k) {
    if (k <= 0 || in.rows % k != 0 || in.cols % k != 0)
        throw ShapeError("block_mean: grid not divisible by block size");
    Grid2D out(in.rows / k, in.cols / k);
    const double inv = 1.0 / (k * k);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            double s = 0.0;
            for (int dr = 0; dr < k; ++dr)
                for (int dc = 0; dc < k; ++dc) s += in.at(r * k + dr, c * k + dc);
            out.at(r, c) = s * inv;
        }
    return out;
}

namespace {

// Rounded frequency-bin shift for one LED, with a bandwidth check: the
// pupil support moved by the shift must stay inside the representable
// frequency range, otherwise the shifted spectrum would wrap.
std::pair<int, int> led_bin_shift(const OpticalConfig& cfg, const LedPosition& pos) {
    const auto [ux, uy] = led_spatial_frequency(pos, cfg.wavelength);
    const double du = 1.0 / cfg.object_extent;
    const int sc = static_cast<int>(std::lround(ux / du));  // x shifts columns
    const int sr = static_cast<int>(std::lround(uy / du));  // y shifts rows
    const int n = cfg.highres_pixels;
    const int pupil_bins = static_cast<int>(std::floor(cfg.objective_na / cfg.wavelength / du));
    if (std::abs(sc) + pupil_bins > n / 2 - 1 || std::abs(sr) + pupil_bins > n / 2 - 1)
        throw ConfigError("LED frequency shift exceeds representable grid bandwidth");
    return {sr, sc};
}

}  // namespace

Grid2D forward_single_led(const ComplexField& object, int led_index, const OpticalConfig& cfg) {
    object.check();
    if (object.rows() != cfg.highres_pixels || object.cols() != cfg.highres_pixels)
        throw ShapeError("object grid does not match config.highres_pixels");
    const auto geo = LedGeometry::from_config(cfg);
    if (led_index < 0 || led_index >= static_cast<int>(geo.positions.size()))
        throw ConfigError("LED index out of range");

    Grid2D re = object.re, im = object.im;
    fft::fft2(re, im, false);

    const auto [sr, sc] = led_bin_shift(cfg, geo.positions[led_index]);
    Grid2D sre, sim;
    fft::circular_shift(re, sre, sr, sc);
    fft::circular_shift(im, sim, sr, sc);

    const auto pupil = pupil_mask(cfg, cfg.highres_pixels);
    for (size_t i = 0; i < sre.v.size(); ++i) {
        sre.v[i] *= pupil.mask.v[i];
        sim.v[i] *= pupil.mask.v[i];
    }

    fft::fft2(sre, sim, true);
    Grid2D intensity(cfg.highres_pixels, cfg.highres_pixels);
    for (size_t i = 0; i < intensity.v.size(); ++i)
        intensity.v[i] = sre.v[i] * sre.v[i] + sim.v[i] * sim.v[i];

    return block_mean(intensity, cfg.downsample_factor());
}

Grid2D forward_pattern(const ComplexField& object, const LedPattern& pattern, const OpticalConfig& cfg) {
    const auto geo = LedGeometry::from_config(cfg);
    if (pattern.weights.size() != geo.positions.size())
        throw ShapeError("pattern length does not match active LED count");
    for (double w : pattern.weights)
        if (w < 0) throw ConfigError("negative LED weight");

    const int n = cfg.lowres_pixels();
    Grid2D out(n, n);
    for (size_t l = 0; l < pattern.weights.size(); ++l) {
        if (pattern.weights[l] == 0.0) continue;
        const Grid2D img = forward_single_led(object, static_cast<int>(l), cfg);
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += pattern.weights[l] * img.v[i];
    }
    return out;
}

Grid2D pattern_jacobian(const ComplexField& object, const OpticalConfig& cfg) {
    const auto geo = LedGeometry::from_config(cfg);
    const int n = cfg.lowres_pixels();
    const int pixels = n * n;
    Grid2D jac(pixels, static_cast<int>(geo.positions.size()));
    for (size_t l = 0; l < geo.positions.size(); ++l) {
        const Grid2D img = forward_single_led(object, static_cast<int>(l), cfg);
        for (int p = 0; p < pixels; ++p) jac.at(p, static_cast<int>(l)) = img.v[p];
    }
    return jac;
}

}  // namespace fpm::optics
