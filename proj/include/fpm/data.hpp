#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "fpm/core.hpp"
#include "fpm/optics.hpp"

namespace fpm::data {

enum class Split : uint8_t { train = 0, val = 1, test = 2 };

/// Complex-object dataset tied to the optical preset that band-limited it.
/// Every stored object has already been low-pass filtered by the preset's
/// synthetic NA.
struct ComplexDataset {
    std::vector<ComplexField> objects;
    std::vector<Split> splits;
    std::string provenance;  // mnist | binary16 | image_dir
    std::string preset_id;   // builtin name or "custom"
    optics::OpticalConfig config;

    std::vector<int> indices(Split s) const;
    std::vector<int> all_indices() const;
    void check() const;
};

/// Phase-only encoding of a [0,1] intensity pixel: exp(-i*pi/2 * p0).
std::complex<double> encode_mnist(double p0);

/// Phase-only encoding of a summed three-channel pixel in [0,765]:
/// exp(i*pi*(765 - p0)/765).
std::complex<double> encode_ucsb(double p0);

/// Fourier mask at the setup's synthetic NA applied to the field.
ComplexField lowpass_by_synthetic_na(const ComplexField& object, const optics::OpticalConfig& cfg);

/// The fixed 16-pattern toy dataset: distinct 4x4 binary images, encoded
/// like intensity pixels and band-limited by the preset. The seeded search
/// retries (and logs) if filtering ever collapses two patterns together.
ComplexDataset make_binary16(const optics::OpticalConfig& cfg, const std::string& preset_id);

/// Raw 4x4 binary patterns behind make_binary16, for inspection.
std::vector<std::vector<int>> binary16_patterns();

/// MNIST IDX ingestion: images are zero-padded to the preset's field size,
/// encoded, and band-limited. The 60k train file splits 55000/5000 into
/// train/val; smaller files reserve one twelfth for validation.
ComplexDataset ingest_mnist(const std::string& train_images_path, const std::string& test_images_path,
                            const optics::OpticalConfig& cfg, const std::string& preset_id);

/// Directory of grayscale/color images (PGM/PPM/PNG), center-cropped to the
/// preset's field size, channel-summed, encoded, band-limited.
/// Files sort lexically; splits follow train/val/test fractions 34/12/12
/// style proportions: roughly 60/20/20 with at least one file per split
/// when possible.
ComplexDataset ingest_image_dir(const std::string& dir, const optics::OpticalConfig& cfg,
                                const std::string& preset_id);

/// Raw IDX image file reader (big-endian, magic 2051). Pixels in [0,1].
std::vector<Grid2D> read_idx_images(const std::string& path);

void save_archive(const ComplexDataset& ds, const std::string& path);
ComplexDataset load_archive(const std::string& path);

}  // namespace fpm::data
