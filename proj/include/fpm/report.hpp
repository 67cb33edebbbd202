#pragma once

#include <string>

#include "fpm/core.hpp"
#include "fpm/optics.hpp"

namespace fpm::report {

/// Renders the review panels for up to max_examples test objects of a
/// finished run into <run_dir>/reports/: actual and reconstructed
/// amplitude/phase, initial and final LED grids, and the clean/noisy
/// low-resolution measurements. Eight PGM files per example; phase uses a
/// fixed [-pi, pi] scale.
void render_run(const std::string& run_dir, int max_examples);

/// LED weights placed on their grid positions as a small heatmap image,
/// inactive positions zero, fixed [0,1] scale.
Grid2D led_heatmap(const optics::OpticalConfig& cfg, const std::vector<double>& weights);

}  // namespace fpm::report
