#include "fpm/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fpm/rng.hpp"

namespace fpm::infotheory {

namespace {

// One noisy measurement of a clean y vector. Draws are keyed by the draw
// index alone: every object sees the same g sequence, which makes the
// estimate exactly invariant to dataset order, and the counter-based key
// makes the two passes (range scan, histogram fill) see identical draws.
void sample_measurement(const std::vector<double>& clean, double m, uint64_t seed, int64_t draw,
                        std::vector<double>& out) {
    rng::Stream s(seed, rng::stream_id(rng::Purpose::mi_noise, static_cast<uint64_t>(draw)));
    out.resize(clean.size());
    for (size_t i = 0; i < clean.size(); ++i) {
        if (std::isinf(m)) {
            out[i] = clean[i];
            continue;
        }
        const double g = s.normal();
        const double unclipped = clean[i] + g * std::sqrt(clean[i] / m);
        out[i] = unclipped > 0.0 ? unclipped : 0.0;
    }
}

}  // namespace

MiEstimate estimate_mi_from_clean(const std::vector<std::vector<double>>& clean_y, const channel::NoiseSpec& noise,
                                  int64_t samples, int bins) {
    noise.validate();
    if (samples <= 0) throw ConfigError("estimate_mi: samples must be positive");
    if (bins <= 0 || bins > 4096) throw ConfigError("estimate_mi: bin count out of range");
    if (clean_y.empty()) throw ConfigError("estimate_mi: empty dataset");
    const int y_dim = static_cast<int>(clean_y[0].size());
    if (y_dim < 1 || y_dim > 4)
        throw ConfigError("estimate_mi: measurement has " + std::to_string(y_dim) +
                          " pixels; the histogram estimator accepts at most 4");
    for (const auto& row : clean_y)
        if (static_cast<int>(row.size()) != y_dim) throw ShapeError("estimate_mi: ragged clean_y rows");
    for (const auto& row : clean_y)
        for (double v : row)
            if (!(v >= 0.0)) throw NumericError("estimate_mi: clean measurement must be non-negative");

    const int n_obj = static_cast<int>(clean_y.size());
    std::vector<double> y(y_dim);

    // pass 1: measurement range
    double y_max = 0.0;
    for (int x = 0; x < n_obj; ++x)
        for (int64_t j = 0; j < samples; ++j) {
            sample_measurement(clean_y[x], noise.m, noise.seed, j, y);
            for (double v : y) y_max = std::max(y_max, v);
        }
    const double span = y_max > 0.0 ? 1.25 * y_max : 1.0;
    const double bin_width = span / bins;

    // pass 2: per-object histograms over packed multi-dimensional bins
    auto bin_of = [&](double v) {
        int b = static_cast<int>(v / bin_width);
        return std::min(b, bins - 1);
    };
    std::vector<std::map<uint64_t, int64_t>> hist(n_obj);
    for (int x = 0; x < n_obj; ++x)
        for (int64_t j = 0; j < samples; ++j) {
            sample_measurement(clean_y[x], noise.m, noise.seed, j, y);
            uint64_t key = 0;
            for (double v : y) key = (key << 12) | static_cast<uint64_t>(bin_of(v));
            ++hist[x][key];
        }

    // p(x) uniform; p(x,y) = p(y|x)/n; MI in bits with 0 log 0 := 0.
    // Marginal counts stay integral so summation order cannot perturb them.
    std::map<uint64_t, int64_t> counts_y;
    for (int x = 0; x < n_obj; ++x)
        for (const auto& [key, count] : hist[x]) counts_y[key] += count;

    const double inv_n = 1.0 / n_obj;
    const double inv_samples = 1.0 / static_cast<double>(samples);
    const double inv_total = inv_samples * inv_n;
    double bits = 0.0;
    for (int x = 0; x < n_obj; ++x)
        for (const auto& [key, count] : hist[x]) {
            const double p_y_given_x = count * inv_samples;
            const double p_joint = p_y_given_x * inv_n;
            bits += p_joint * std::log2(p_y_given_x / (counts_y[key] * inv_total));
        }

    MiEstimate est;
    est.bits = bits;
    est.samples_per_object = samples;
    est.bin_width = bin_width;
    est.bin_count = bins;
    est.y_dimensions = y_dim;

    // coarse-binning warning: the modal bin of every object holds >1% of
    // that object's mass
    est.under_resolved = true;
    for (int x = 0; x < n_obj && est.under_resolved; ++x) {
        int64_t peak = 0;
        for (const auto& [key, count] : hist[x]) peak = std::max(peak, count);
        if (peak * inv_samples <= 0.01) est.under_resolved = false;
    }
    return est;
}

MiEstimate estimate_mi(const data::ComplexDataset& dataset, const optics::LedPattern& pattern,
                       const optics::OpticalConfig& cfg, const channel::NoiseSpec& noise, int64_t samples,
                       int bins) {
    dataset.check();
    std::vector<std::vector<double>> clean;
    clean.reserve(dataset.objects.size());
    for (const auto& obj : dataset.objects) {
        const auto img = optics::forward_pattern(obj, pattern, cfg);
        clean.push_back(img.v);
    }
    return estimate_mi_from_clean(clean, noise, samples, bins);
}

}  // namespace fpm::infotheory
