#include "fpm/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#ifdef FPM_HAVE_PNG
#include <png.h>
#endif

namespace fpm::image_io {

namespace {

// PNM token reader that skips whitespace and # comments.
int next_pnm_int(std::istream& in, const std::string& path) {
    for (;;) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(ch)) {
            in.get();
            continue;
        }
        break;
    }
    int v = 0;
    if (!(in >> v)) throw IoError("PNM parse failure in " + path + " at offset " +
                                  std::to_string(static_cast<long long>(in.tellg())));
    return v;
}

Grid2D read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    char p, kind;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
        throw IoError("unsupported PNM type in " + path);
    const bool color = (kind == '3' || kind == '6');
    const bool binary = (kind == '5' || kind == '6');
    const int w = next_pnm_int(in, path);
    const int h = next_pnm_int(in, path);
    const int maxval = next_pnm_int(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError("bad PNM dimensions in " + path);

    const int channels = color ? 3 : 1;
    const double to8 = 255.0 / maxval;
    Grid2D out(h, w);

    if (binary) {
        in.get();  // single whitespace after maxval
        const int bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> row(static_cast<size_t>(w) * channels * bytes_per);
        for (int r = 0; r < h; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
            if (static_cast<size_t>(in.gcount()) != row.size())
                throw IoError("truncated PNM data in " + path + " at offset " +
                              std::to_string(static_cast<long long>(in.tellg())));
            for (int c = 0; c < w; ++c) {
                double sum = 0.0;
                for (int ch = 0; ch < channels; ++ch) {
                    const size_t base = (static_cast<size_t>(c) * channels + ch) * bytes_per;
                    int v = row[base];
                    if (bytes_per == 2) v = (v << 8) | row[base + 1];
                    sum += v * to8;
                }
                out.at(r, c) = channels == 1 ? 3.0 * sum : sum;
            }
        }
    } else {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double sum = 0.0;
                for (int ch = 0; ch < channels; ++ch) sum += next_pnm_int(in, path) * to8;
                out.at(r, c) = channels == 1 ? 3.0 * sum : sum;
            }
    }
    return out;
}

#ifdef FPM_HAVE_PNG
Grid2D read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open image: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("libpng init failure for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("PNG parse failure in " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("unsupported PNG channel count in " + path);
    }

    std::vector<unsigned char> row(static_cast<size_t>(w) * channels);
    Grid2D out(h, w);
    for (int r = 0; r < h; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < w; ++c) {
            double sum = 0.0;
            for (int ch = 0; ch < channels; ++ch) sum += row[static_cast<size_t>(c) * channels + ch];
            out.at(r, c) = channels == 1 ? 3.0 * sum : sum;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return out;
}
#endif

}  // namespace

bool has_png_support() {
#ifdef FPM_HAVE_PNG
    return true;
#else
    return false;
#endif
}

Grid2D read_channel_sum(const std::string& path) {
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "pgm" || ext == "ppm" || ext == "pnm") return read_pnm(path);
    if (ext == "png") {
#ifdef FPM_HAVE_PNG
        return read_png(path);
#else
        throw IoError("PNG support not built in; convert " + path + " to PGM/PPM");
#endif
    }
    throw IoError("unsupported image extension: " + path);
}

void write_pgm(const std::string& path, const Grid2D& img, double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("write_pgm: empty value range");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    const double scale = 255.0 / (hi - lo);
    for (double v : img.v) {
        const double t = std::clamp((v - lo) * scale, 0.0, 255.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t))));
    }
    if (!out) throw IoError("write failure on image: " + path);
}

}  // namespace fpm::image_io
