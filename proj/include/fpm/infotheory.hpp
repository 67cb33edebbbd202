#pragma once

#include <cstdint>
#include <vector>

#include "fpm/channel.hpp"
#include "fpm/data.hpp"
#include "fpm/optics.hpp"

namespace fpm::infotheory {

struct MiEstimate {
    double bits = 0.0;
    int64_t samples_per_object = 0;
    double bin_width = 0.0;
    int bin_count = 0;
    int y_dimensions = 0;
    bool under_resolved = false;  // every object parks >1% of its mass in one bin

    static std::string csv_header() { return "snapshot,bits,samples,bins,bin_width"; }
};

/// Histogram Monte-Carlo estimate of the mutual information between a
/// uniformly drawn dataset object and its noisy low-resolution measurement
/// under the given LED pattern. Designed for measurements of at most 4
/// pixels; binning is uniform, shared across objects, spanning
/// [0, 1.25 * max observed sample]. Noise draws are counter-based on
/// (seed, object, sample), so estimates are reproducible and object order
/// does not matter.
MiEstimate estimate_mi(const data::ComplexDataset& dataset, const optics::LedPattern& pattern,
                       const optics::OpticalConfig& cfg, const channel::NoiseSpec& noise, int64_t samples,
                       int bins = 256);

/// Same estimator over precomputed clean measurements (one row per object,
/// y_dim values each).
MiEstimate estimate_mi_from_clean(const std::vector<std::vector<double>>& clean_y, const channel::NoiseSpec& noise,
                                  int64_t samples, int bins = 256);

}  // namespace fpm::infotheory
