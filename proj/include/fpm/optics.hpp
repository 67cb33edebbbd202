#pragma once

#include <utility>
#include <vector>

#include "fpm/core.hpp"

namespace fpm::optics {

/// Geometry and sampling of the simulated microscope. All lengths in meters.
struct OpticalConfig {
    double wavelength = 0.0;
    double objective_na = 0.0;
    double magnification = 0.0;
    double sensor_pixel = 0.0;    // at the sensor plane
    double object_extent = 0.0;   // side length of the high-res field of view
    int highres_pixels = 0;       // per side
    double led_pitch = 0.0;
    int led_grid = 0;             // per side
    double led_height = 0.0;      // z distance of LED plane from the sample
    std::vector<bool> active_led_mask;  // row-major led_grid x led_grid

    /// Integer ratio between the sensor-referred pixel and the high-res pixel.
    int downsample_factor() const;
    int lowres_pixels() const { return highres_pixels / downsample_factor(); }
    int active_led_count() const;
    double highres_pitch() const { return object_extent / highres_pixels; }

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

struct LedPosition {
    double x = 0.0, y = 0.0, z = 0.0;
};

/// Positions of the active LEDs, grid centered on the optical axis,
/// row-major scan order over the mask.
struct LedGeometry {
    std::vector<LedPosition> positions;
    static LedGeometry from_config(const OpticalConfig& cfg);
};

/// Per-LED illumination intensities, one weight per active LED.
struct LedPattern {
    std::vector<double> weights;

    static LedPattern uniform(int count, double value = 1.0) {
        LedPattern p;
        p.weights.assign(count, value);
        return p;
    }
};

/// Binary low-pass mask in frequency space, FFT bin order (DC at [0][0]).
struct PupilFunction {
    Grid2D mask;
    double cutoff = 0.0;  // spatial frequency in 1/m
};

/// Illumination plane-wave spatial frequency (u_x, u_y) in 1/m for an LED
/// at the given position. Magnitude is strictly below 1/wavelength.
std::pair<double, double> led_spatial_frequency(const LedPosition& pos, double wavelength);

/// Objective NA plus the largest illumination NA over active LEDs.
double synthetic_na(const OpticalConfig& cfg);

/// Pupil of the objective on a grid_side x grid_side frequency grid matching
/// the high-resolution field sampling.
PupilFunction pupil_mask(const OpticalConfig& cfg, int grid_side);

/// Low-pass mask of arbitrary cutoff on the same frequency grid.
PupilFunction frequency_mask(const OpticalConfig& cfg, int grid_side, double cutoff);

/// Low-resolution intensity image for illumination by one active LED:
/// spectrum shift to the nearest frequency bin, pupil filtering, squared
/// modulus, then block-mean binning to the sensor grid.
Grid2D forward_single_led(const ComplexField& object, int led_index, const OpticalConfig& cfg);

/// Incoherent weighted sum of per-LED intensity images.
Grid2D forward_pattern(const ComplexField& object, const LedPattern& pattern, const OpticalConfig& cfg);

/// Jacobian of forward_pattern with respect to the LED weights:
/// rows are low-res pixels, column l is forward_single_led(object, l)
/// flattened. forward_pattern equals jacobian * weights exactly.
Grid2D pattern_jacobian(const ComplexField& object, const OpticalConfig& cfg);

/// Mean over k x k blocks.
Grid2D block_mean(const Grid2D& in, int k);

}  // namespace fpm::optics
