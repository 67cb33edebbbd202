#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fpm/data.hpp"
#include "fpm/fft.hpp"
#include "fpm/image_io.hpp"
#include "fpm/presets.hpp"
#include "fpm/rng.hpp"

using namespace fpm;
using namespace fpm::data;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_idx(const std::string& path, int count, int rows, int cols, unsigned seed) {
    std::ofstream out(path, std::ios::binary);
    auto be32 = [&out](uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    be32(2051);
    be32(static_cast<uint32_t>(count));
    be32(static_cast<uint32_t>(rows));
    be32(static_cast<uint32_t>(cols));
    uint32_t state = seed * 2654435761u + 1;
    for (int i = 0; i < count * rows * cols; ++i) {
        state = state * 1664525u + 1013904223u;
        out.put(static_cast<char>(state >> 24));
    }
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("intensity encoders: endpoints and midpoints") {
    auto z0 = encode_mnist(0.0);
    CHECK(z0.real() == doctest::Approx(1.0));
    CHECK(z0.imag() == doctest::Approx(0.0));
    auto z1 = encode_mnist(1.0);
    CHECK(z1.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z1.imag() == doctest::Approx(-1.0));
    auto zh = encode_mnist(0.5);
    CHECK(zh.real() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(zh.imag() == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-12));

    auto u1 = encode_ucsb(765.0);
    CHECK(u1.real() == doctest::Approx(1.0));
    CHECK(u1.imag() == doctest::Approx(0.0).epsilon(1e-12));
    auto u0 = encode_ucsb(0.0);
    CHECK(u0.real() == doctest::Approx(-1.0));
    auto uh = encode_ucsb(382.5);
    CHECK(uh.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(uh.imag() == doctest::Approx(1.0));

    CHECK_THROWS_AS(encode_mnist(-0.01), ConfigError);
    CHECK_THROWS_AS(encode_mnist(1.01), ConfigError);
    CHECK_THROWS_AS(encode_ucsb(800.0), ConfigError);
}

TEST_CASE("encoded pixels are unit modulus") {
    for (double p = 0.0; p <= 1.0; p += 0.1)
        CHECK(std::abs(encode_mnist(p)) == doctest::Approx(1.0).epsilon(1e-12));
    for (double p = 0.0; p <= 765.0; p += 50.0)
        CHECK(std::abs(encode_ucsb(p)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lowpass: constants pass, repeated application is stable, tones above cutoff die") {
    const auto cfg = presets::builtin("table1");
    ComplexField flat(32, 32, cfg.highres_pitch());
    for (auto& v : flat.re.v) v = 0.8;
    for (auto& v : flat.im.v) v = -0.1;
    const auto f1 = lowpass_by_synthetic_na(flat, cfg);
    for (size_t i = 0; i < f1.re.v.size(); ++i) {
        CHECK(f1.re.v[i] == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(f1.im.v[i] == doctest::Approx(-0.1).epsilon(1e-12));
    }

    // band-limited input: second application changes nothing beyond roundoff
    ComplexField noisy(32, 32, cfg.highres_pitch());
    rng::Stream s(5, 5);
    for (auto& v : noisy.re.v) v = s.uniform();
    const auto once = lowpass_by_synthetic_na(noisy, cfg);
    const auto twice = lowpass_by_synthetic_na(once, cfg);
    for (size_t i = 0; i < once.re.v.size(); ++i) {
        CHECK(twice.re.v[i] == doctest::Approx(once.re.v[i]).epsilon(1e-12));
        CHECK(twice.im.v[i] == doctest::Approx(once.im.v[i]).epsilon(1e-12));
    }

    // pure tone beyond the synthetic NA vanishes
    ComplexField tone(32, 32, cfg.highres_pitch());
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) {
            tone.re.at(r, c) = std::cos(2.0 * M_PI * 12.0 * c / 32.0);
            tone.im.at(r, c) = std::sin(2.0 * M_PI * 12.0 * c / 32.0);
        }
    const auto gone = lowpass_by_synthetic_na(tone, cfg);
    for (double v : gone.re.v) CHECK(std::fabs(v) < 1e-10);
    for (double v : gone.im.v) CHECK(std::fabs(v) < 1e-10);
}

TEST_CASE("lowpass never increases Fourier energy") {
    const auto cfg = presets::builtin("table1");
    rng::Stream s(9, 9);
    ComplexField f(32, 32, cfg.highres_pitch());
    for (auto& v : f.re.v) v = s.uniform() - 0.5;
    for (auto& v : f.im.v) v = s.uniform() - 0.5;
    double before = 0.0;
    for (size_t i = 0; i < f.re.v.size(); ++i) before += f.re.v[i] * f.re.v[i] + f.im.v[i] * f.im.v[i];
    const auto g = lowpass_by_synthetic_na(f, cfg);
    double after = 0.0;
    for (size_t i = 0; i < g.re.v.size(); ++i) after += g.re.v[i] * g.re.v[i] + g.im.v[i] * g.im.v[i];
    CHECK(after <= before * (1 + 1e-12));
}

TEST_CASE("binary16: sixteen distinct 4x4 objects, deterministic") {
    const auto cfg = presets::builtin("table3");
    const auto ds = make_binary16(cfg, "table3");
    CHECK(ds.objects.size() == 16);
    CHECK(ds.provenance == "binary16");
    for (const auto& o : ds.objects) {
        CHECK(o.rows() == 4);
        CHECK(o.cols() == 4);
    }
    // pairwise distinct after band-limiting
    for (size_t i = 0; i < 16; ++i)
        for (size_t j = i + 1; j < 16; ++j) {
            double d = 0.0;
            for (size_t k = 0; k < ds.objects[i].re.v.size(); ++k) {
                const double dr = ds.objects[i].re.v[k] - ds.objects[j].re.v[k];
                const double di = ds.objects[i].im.v[k] - ds.objects[j].im.v[k];
                d += dr * dr + di * di;
            }
            CHECK(d > 1e-18);
        }

    const auto again = make_binary16(cfg, "table3");
    for (size_t i = 0; i < 16; ++i) {
        CHECK(again.objects[i].re.v == ds.objects[i].re.v);
        CHECK(again.objects[i].im.v == ds.objects[i].im.v);
    }

    const auto patterns = binary16_patterns();
    CHECK(patterns.size() == 16);
    for (const auto& p : patterns) {
        CHECK(p.size() == 16);
        for (int b : p) CHECK((b == 0 || b == 1));
    }
}

TEST_CASE("IDX ingestion: split rule and padding") {
    TempDir tmp("fpm_idx_test");
    const auto cfg = presets::builtin("table3");  // 4x4 field

    // the canonical 60000-image file splits 55000/5000
    const std::string train_path = (tmp.path / "train-images.idx").string();
    const std::string test_path = (tmp.path / "t10k-images.idx").string();
    write_idx(train_path, 60000, 4, 4, 1);
    write_idx(test_path, 100, 4, 4, 2);
    const auto ds = ingest_mnist(train_path, test_path, cfg, "table3");
    CHECK(ds.objects.size() == 60100);
    CHECK(ds.indices(Split::train).size() == 55000);
    CHECK(ds.indices(Split::val).size() == 5000);
    CHECK(ds.indices(Split::test).size() == 100);

    // smaller images pad centered with zero intensity (phase-0 field)
    const auto t1 = presets::builtin("table1");  // 32x32 field
    const std::string small_train = (tmp.path / "small-train.idx").string();
    const std::string small_test = (tmp.path / "small-test.idx").string();
    write_idx(small_train, 24, 28, 28, 3);
    write_idx(small_test, 12, 28, 28, 4);
    const auto padded = ingest_mnist(small_train, small_test, t1, "table1");
    CHECK(padded.objects.size() == 36);
    CHECK(padded.indices(Split::val).size() == 2);  // one twelfth of 24
    CHECK(padded.objects[0].rows() == 32);
}

TEST_CASE("IDX ingestion: corrupt files name the file and offset") {
    TempDir tmp("fpm_idx_bad");
    const std::string bad_magic = (tmp.path / "bad_magic.idx").string();
    {
        std::ofstream out(bad_magic, std::ios::binary);
        const char b[4] = {0, 0, 8, 1};
        out.write(b, 4);
        out.write(b, 4);
    }
    CHECK_THROWS_WITH_AS(read_idx_images(bad_magic), doctest::Contains("bad_magic.idx"), IoError);

    const std::string truncated = (tmp.path / "truncated.idx").string();
    write_idx(truncated, 10, 8, 8, 5);
    fs::resize_file(truncated, 16 + 3 * 64 + 10);  // cut inside image 3
    try {
        read_idx_images(truncated);
        CHECK(false);
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("truncated.idx") != std::string::npos);
        CHECK(msg.find("offset") != std::string::npos);
    }
}

TEST_CASE("image directory ingestion: PGM/PPM, sorted, empty dir rejected") {
    TempDir tmp("fpm_imgdir");
    const auto cfg = presets::builtin("table3");

    CHECK_THROWS_AS(ingest_image_dir(tmp.path.string(), cfg, "table3"), IoError);

    // grayscale PGM counts its channel three times; color PPM sums channels
    for (int i = 0; i < 5; ++i) {
        Grid2D img(6, 6);
        for (size_t k = 0; k < img.v.size(); ++k) img.v[k] = (k * 7 + i * 31) % 256;
        image_io::write_pgm((tmp.path / ("img" + std::to_string(i) + ".pgm")).string(), img, 0, 255);
    }
    const auto ds = ingest_image_dir(tmp.path.string(), cfg, "table3");
    CHECK(ds.objects.size() == 5);
    CHECK(ds.objects[0].rows() == 4);  // center crop from 6x6
    CHECK(ds.indices(Split::train).size() == 3);
    CHECK(ds.indices(Split::val).size() == 1);
    CHECK(ds.indices(Split::test).size() == 1);
}

TEST_CASE("archive: round trip and byte determinism") {
    const auto cfg = presets::builtin("table3");
    const auto ds = make_binary16(cfg, "table3");
    TempDir tmp("fpm_archive");
    const std::string p1 = (tmp.path / "a.fpmdata").string();
    const std::string p2 = (tmp.path / "b.fpmdata").string();
    save_archive(ds, p1);
    save_archive(ds, p2);
    CHECK(file_bytes(p1) == file_bytes(p2));

    const auto back = load_archive(p1);
    CHECK(back.objects.size() == ds.objects.size());
    CHECK(back.provenance == ds.provenance);
    CHECK(back.preset_id == ds.preset_id);
    CHECK(back.config.highres_pixels == ds.config.highres_pixels);
    for (size_t i = 0; i < ds.objects.size(); ++i) {
        CHECK(back.objects[i].re.v == ds.objects[i].re.v);
        CHECK(back.objects[i].im.v == ds.objects[i].im.v);
        CHECK(back.splits[i] == ds.splits[i]);
    }
}
