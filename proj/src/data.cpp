#include "fpm/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fpm/checkpoint.hpp"
#include "fpm/fft.hpp"
#include "fpm/image_io.hpp"
#include "fpm/presets.hpp"
#include "fpm/rng.hpp"

namespace fpm::data {

namespace fs = std::filesystem;

std::vector<int> ComplexDataset::indices(Split s) const {
    std::vector<int> idx;
    for (size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == s) idx.push_back(static_cast<int>(i));
    return idx;
}

std::vector<int> ComplexDataset::all_indices() const {
    std::vector<int> idx(objects.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return idx;
}

void ComplexDataset::check() const {
    if (objects.size() != splits.size()) throw ShapeError("dataset: split labels do not match object count");
    for (const auto& o : objects) {
        o.check();
        if (o.rows() != config.highres_pixels || o.cols() != config.highres_pixels)
            throw ShapeError("dataset: object shape does not match preset field size");
    }
}

std::complex<double> encode_mnist(double p0) {
    if (p0 < 0.0 || p0 > 1.0) throw ConfigError("encode_mnist: pixel " + std::to_string(p0) + " outside [0,1]");
    const double phase = -0.5 * M_PI * p0;
    return {std::cos(phase), std::sin(phase)};
}

std::complex<double> encode_ucsb(double p0) {
    if (p0 < 0.0 || p0 > 765.0) throw ConfigError("encode_ucsb: pixel " + std::to_string(p0) + " outside [0,765]");
    const double phase = M_PI * (765.0 - p0) / 765.0;
    return {std::cos(phase), std::sin(phase)};
}

ComplexField lowpass_by_synthetic_na(const ComplexField& object, const optics::OpticalConfig& cfg) {
    object.check();
    if (object.rows() != cfg.highres_pixels || object.cols() != cfg.highres_pixels)
        throw ShapeError("lowpass: object does not match config field size");
    const double cutoff = optics::synthetic_na(cfg) / cfg.wavelength;
    const auto mask = optics::frequency_mask(cfg, cfg.highres_pixels, cutoff);

    ComplexField out = object;
    fft::fft2(out.re, out.im, false);
    for (size_t i = 0; i < out.re.v.size(); ++i) {
        out.re.v[i] *= mask.mask.v[i];
        out.im.v[i] *= mask.mask.v[i];
    }
    fft::fft2(out.re, out.im, true);
    return out;
}

namespace {

ComplexField encode_and_filter(const Grid2D& pixels, const optics::OpticalConfig& cfg, bool ucsb) {
    ComplexField f(pixels.rows, pixels.cols, cfg.highres_pitch());
    for (size_t i = 0; i < pixels.v.size(); ++i) {
        const auto z = ucsb ? encode_ucsb(pixels.v[i]) : encode_mnist(pixels.v[i]);
        f.re.v[i] = z.real();
        f.im.v[i] = z.imag();
    }
    return lowpass_by_synthetic_na(f, cfg);
}

double field_distance(const ComplexField& a, const ComplexField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.re.v.size(); ++i) {
        const double dr = a.re.v[i] - b.re.v[i];
        const double di = a.im.v[i] - b.im.v[i];
        s += dr * dr + di * di;
    }
    return std::sqrt(s);
}

}  // namespace

namespace {

// Deterministic seeded search; the first seed that yields 16 raw-distinct
// patterns surviving the band limit as distinct fields wins. Collisions
// advance the seed and are logged.
std::vector<std::vector<int>> search_binary16(const optics::OpticalConfig& cfg) {
    for (uint64_t seed = 0;; ++seed) {
        rng::Stream s(seed, rng::stream_id(rng::Purpose::data_synth));
        std::vector<uint16_t> raw;
        while (raw.size() < 16) {
            uint16_t bits = 0;
            for (int b = 0; b < 16; ++b) bits = static_cast<uint16_t>((bits << 1) | (s.uniform() < 0.5 ? 0 : 1));
            if (std::find(raw.begin(), raw.end(), bits) == raw.end()) raw.push_back(bits);
        }

        std::vector<ComplexField> fields;
        for (uint16_t bits : raw) {
            Grid2D img(4, 4);
            for (int i = 0; i < 16; ++i) img.v[i] = (bits >> (15 - i)) & 1;
            fields.push_back(encode_and_filter(img, cfg, false));
        }
        bool distinct = true;
        for (size_t i = 0; i < fields.size() && distinct; ++i)
            for (size_t j = i + 1; j < fields.size(); ++j)
                if (field_distance(fields[i], fields[j]) < 1e-9) {
                    distinct = false;
                    break;
                }
        if (!distinct) {
            std::cerr << "binary16: post-filter collision at seed " << seed << ", retrying\n";
            continue;
        }

        std::vector<std::vector<int>> out;
        for (uint16_t bits : raw) {
            std::vector<int> p(16);
            for (int i = 0; i < 16; ++i) p[i] = (bits >> (15 - i)) & 1;
            out.push_back(std::move(p));
        }
        return out;
    }
}

}  // namespace

std::vector<std::vector<int>> binary16_patterns() { return search_binary16(presets::builtin("table3")); }

ComplexDataset make_binary16(const optics::OpticalConfig& cfg, const std::string& preset_id) {
    if (cfg.highres_pixels != 4) throw ConfigError("make_binary16: preset must use a 4x4 field");
    ComplexDataset ds;
    ds.provenance = "binary16";
    ds.preset_id = preset_id;
    ds.config = cfg;
    for (const auto& pattern : search_binary16(cfg)) {
        Grid2D img(4, 4);
        for (int i = 0; i < 16; ++i) img.v[i] = pattern[i];
        ds.objects.push_back(encode_and_filter(img, cfg, false));
        ds.splits.push_back(Split::train);
    }
    ds.check();
    return ds;
}

// ---- IDX -------------------------------------------------------------------

namespace {

uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4)
        throw IoError("IDX read failure in " + path + " at offset " +
                      std::to_string(static_cast<long long>(in.tellg())));
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | b[3];
}

}  // namespace

std::vector<Grid2D> read_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open IDX file: " + path);
    const uint32_t magic = read_be32(in, path);
    if (magic != 2051)
        throw IoError("IDX file " + path + ": bad magic " + std::to_string(magic) + " at offset 0, expected 2051");
    const uint32_t count = read_be32(in, path);
    const uint32_t rows = read_be32(in, path);
    const uint32_t cols = read_be32(in, path);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
        throw IoError("IDX file " + path + ": implausible dimensions at offset 8");

    std::vector<Grid2D> images;
    images.reserve(count);
    std::vector<unsigned char> buf(static_cast<size_t>(rows) * cols);
    for (uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<size_t>(in.gcount()) != buf.size())
            throw IoError("IDX file " + path + ": truncated image " + std::to_string(i) + " at offset " +
                          std::to_string(16 + static_cast<long long>(i) * rows * cols));
        Grid2D img(static_cast<int>(rows), static_cast<int>(cols));
        for (size_t p = 0; p < buf.size(); ++p) img.v[p] = buf[p] / 255.0;
        images.push_back(std::move(img));
    }
    return images;
}

namespace {

Grid2D pad_center(const Grid2D& img, int side) {
    if (img.rows > side || img.cols > side)
        throw ConfigError("image " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                          " exceeds the preset field size " + std::to_string(side));
    Grid2D out(side, side, 0.0);
    const int r0 = (side - img.rows) / 2;
    const int c0 = (side - img.cols) / 2;
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) out.at(r0 + r, c0 + c) = img.at(r, c);
    return out;
}

Grid2D crop_center(const Grid2D& img, int side) {
    if (img.rows < side || img.cols < side)
        throw ConfigError("image " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                          " smaller than the preset field size " + std::to_string(side));
    Grid2D out(side, side);
    const int r0 = (img.rows - side) / 2;
    const int c0 = (img.cols - side) / 2;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) out.at(r, c) = img.at(r0 + r, c0 + c);
    return out;
}

}  // namespace

ComplexDataset ingest_mnist(const std::string& train_images_path, const std::string& test_images_path,
                            const optics::OpticalConfig& cfg, const std::string& preset_id) {
    const auto train_imgs = read_idx_images(train_images_path);
    const auto test_imgs = read_idx_images(test_images_path);
    if (train_imgs.empty()) throw IoError("empty IDX file: " + train_images_path);

    // 60000 -> 55000/5000; shorter files keep one twelfth for validation
    const size_t val_count = train_imgs.size() == 60000 ? 5000 : std::max<size_t>(1, train_imgs.size() / 12);
    const size_t train_count = train_imgs.size() - val_count;

    ComplexDataset ds;
    ds.provenance = "mnist";
    ds.preset_id = preset_id;
    ds.config = cfg;
    ds.objects.reserve(train_imgs.size() + test_imgs.size());

    for (size_t i = 0; i < train_imgs.size(); ++i) {
        ds.objects.push_back(encode_and_filter(pad_center(train_imgs[i], cfg.highres_pixels), cfg, false));
        ds.splits.push_back(i < train_count ? Split::train : Split::val);
    }
    for (const auto& img : test_imgs) {
        ds.objects.push_back(encode_and_filter(pad_center(img, cfg.highres_pixels), cfg, false));
        ds.splits.push_back(Split::test);
    }
    ds.check();
    return ds;
}

ComplexDataset ingest_image_dir(const std::string& dir, const optics::OpticalConfig& cfg,
                                const std::string& preset_id) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png") files.push_back(e.path().string());
    }
    if (files.empty()) throw IoError("no images found in directory: " + dir);
    std::sort(files.begin(), files.end());

    ComplexDataset ds;
    ds.provenance = "image_dir";
    ds.preset_id = preset_id;
    ds.config = cfg;

    const size_t n = files.size();
    const size_t n_train = std::max<size_t>(1, (n * 3) / 5);
    const size_t n_val = std::max<size_t>(n > 2 ? 1 : 0, (n - n_train) / 2);
    for (size_t i = 0; i < n; ++i) {
        const auto sum = image_io::read_channel_sum(files[i]);
        ds.objects.push_back(encode_and_filter(crop_center(sum, cfg.highres_pixels), cfg, true));
        ds.splits.push_back(i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test));
    }
    ds.check();
    return ds;
}

// ---- archive ------------------------------------------------------------------

void save_archive(const ComplexDataset& ds, const std::string& path) {
    ds.check();
    checkpoint::Writer w;
    w.set("kind", "fpm-dataset");
    w.set("provenance", ds.provenance);
    w.set("preset_id", ds.preset_id);
    w.set_i64("count", static_cast<int64_t>(ds.objects.size()));
    w.set_i64("side", ds.config.highres_pixels);
    w.set_f64("wavelength_m", ds.config.wavelength);
    w.set_f64("objective_na", ds.config.objective_na);
    w.set_f64("magnification", ds.config.magnification);
    w.set_f64("sensor_pixel_m", ds.config.sensor_pixel);
    w.set_f64("object_extent_m", ds.config.object_extent);
    w.set_i64("highres_pixels", ds.config.highres_pixels);
    w.set_f64("led_pitch_m", ds.config.led_pitch);
    w.set_i64("led_grid", ds.config.led_grid);
    w.set_f64("led_height_m", ds.config.led_height);
    std::string mask;
    for (bool b : ds.config.active_led_mask) mask += b ? '1' : '0';
    w.set("active_led_mask", mask);

    std::vector<double> splits(ds.splits.size());
    for (size_t i = 0; i < splits.size(); ++i) splits[i] = static_cast<double>(ds.splits[i]);
    w.add_array("splits", splits);

    std::vector<double> re, im;
    for (const auto& o : ds.objects) {
        re.insert(re.end(), o.re.v.begin(), o.re.v.end());
        im.insert(im.end(), o.im.v.begin(), o.im.v.end());
    }
    w.add_array("re", re);
    w.add_array("im", im);
    w.write(path);
}

ComplexDataset load_archive(const std::string& path) {
    checkpoint::Reader r(path);
    if (r.get("kind") != "fpm-dataset") throw IoError("not a dataset archive: " + path);

    ComplexDataset ds;
    ds.provenance = r.get("provenance");
    ds.preset_id = r.get("preset_id");
    ds.config.wavelength = r.get_f64("wavelength_m");
    ds.config.objective_na = r.get_f64("objective_na");
    ds.config.magnification = r.get_f64("magnification");
    ds.config.sensor_pixel = r.get_f64("sensor_pixel_m");
    ds.config.object_extent = r.get_f64("object_extent_m");
    ds.config.highres_pixels = static_cast<int>(r.get_i64("highres_pixels"));
    ds.config.led_pitch = r.get_f64("led_pitch_m");
    ds.config.led_grid = static_cast<int>(r.get_i64("led_grid"));
    ds.config.led_height = r.get_f64("led_height_m");
    for (char c : r.get("active_led_mask")) ds.config.active_led_mask.push_back(c == '1');
    ds.config.validate();

    const int64_t count = r.get_i64("count");
    const int side = static_cast<int>(r.get_i64("side"));
    const auto& splits = r.array("splits");
    const auto& re = r.array("re");
    const auto& im = r.array("im");
    if (static_cast<int64_t>(splits.size()) != count ||
        static_cast<int64_t>(re.size()) != count * side * side || re.size() != im.size())
        throw IoError("dataset archive " + path + ": inconsistent array lengths");

    const double pitch = ds.config.highres_pitch();
    for (int64_t i = 0; i < count; ++i) {
        ComplexField f(side, side, pitch);
        std::copy(re.begin() + i * side * side, re.begin() + (i + 1) * side * side, f.re.v.begin());
        std::copy(im.begin() + i * side * side, im.begin() + (i + 1) * side * side, f.im.v.begin());
        ds.objects.push_back(std::move(f));
        ds.splits.push_back(static_cast<Split>(static_cast<int>(splits[i])));
    }
    ds.check();
    return ds;
}

}  // namespace fpm::data
