#include "fpm/presets.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fpm::presets {

namespace {

using nlohmann::json;

std::vector<bool> full_mask(int grid) { return std::vector<bool>(static_cast<size_t>(grid) * grid, true); }

// grid minus the 4 corner LEDs
std::vector<bool> mask_minus_corners(int grid) {
    auto m = full_mask(grid);
    const int last = grid - 1;
    m[0] = m[last] = false;
    m[static_cast<size_t>(last) * grid] = m[static_cast<size_t>(last) * grid + last] = false;
    return m;
}

// grid minus 3 LEDs per corner: the corner and its two edge neighbors
std::vector<bool> mask_minus_corner_triples(int grid) {
    auto m = full_mask(grid);
    const int last = grid - 1;
    auto off = [&](int r, int c) { m[static_cast<size_t>(r) * grid + c] = false; };
    off(0, 0), off(0, 1), off(1, 0);
    off(0, last), off(0, last - 1), off(1, last);
    off(last, 0), off(last, 1), off(last - 1, 0);
    off(last, last), off(last, last - 1), off(last - 1, last);
    return m;
}

}  // namespace

bool is_builtin(const std::string& name) {
    return name == "table1" || name == "table2" || name == "table3";
}

optics::OpticalConfig builtin(const std::string& name) {
    optics::OpticalConfig cfg;
    cfg.wavelength = 630e-9;
    cfg.sensor_pixel = 6.5e-6;
    if (name == "table1") {
        cfg.objective_na = 0.3;
        cfg.magnification = 10.0;
        cfg.object_extent = 5.2e-6;
        cfg.highres_pixels = 32;
        cfg.led_pitch = 4e-3;
        cfg.led_grid = 7;
        cfg.led_height = 25e-3;
        cfg.active_led_mask = mask_minus_corners(7);
    } else if (name == "table2") {
        cfg.objective_na = 0.1;
        cfg.magnification = 5.0;
        cfg.object_extent = 332.8e-6;
        cfg.highres_pixels = 512;
        cfg.led_pitch = 4e-3;
        cfg.led_grid = 9;
        cfg.led_height = 100e-3;
        cfg.active_led_mask = mask_minus_corner_triples(9);
    } else if (name == "table3") {
        cfg.objective_na = 0.8;
        cfg.magnification = 10.0;
        cfg.object_extent = 0.65e-6;
        cfg.highres_pixels = 4;
        cfg.led_pitch = 8e-3;
        cfg.led_grid = 3;
        cfg.led_height = 10e-3;
        cfg.active_led_mask = full_mask(3);
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    cfg.validate();
    return cfg;
}

optics::OpticalConfig resolve(const std::string& name_or_path) {
    if (is_builtin(name_or_path)) return builtin(name_or_path);
    return load_json(name_or_path);
}

std::string to_json(const optics::OpticalConfig& cfg) {
    json j;
    j["wavelength_m"] = cfg.wavelength;
    j["objective_na"] = cfg.objective_na;
    j["magnification"] = cfg.magnification;
    j["sensor_pixel_m"] = cfg.sensor_pixel;
    j["object_extent_m"] = cfg.object_extent;
    j["highres_pixels"] = cfg.highres_pixels;
    j["led_pitch_m"] = cfg.led_pitch;
    j["led_grid"] = cfg.led_grid;
    j["led_height_m"] = cfg.led_height;
    std::vector<int> mask;
    mask.reserve(cfg.active_led_mask.size());
    for (bool b : cfg.active_led_mask) mask.push_back(b ? 1 : 0);
    j["active_led_mask"] = mask;
    return j.dump(2) + "\n";
}

optics::OpticalConfig load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open preset file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("preset parse failure in " + path + ": " + e.what());
    }
    optics::OpticalConfig cfg;
    try {
        cfg.wavelength = j.at("wavelength_m").get<double>();
        cfg.objective_na = j.at("objective_na").get<double>();
        cfg.magnification = j.at("magnification").get<double>();
        cfg.sensor_pixel = j.at("sensor_pixel_m").get<double>();
        cfg.object_extent = j.at("object_extent_m").get<double>();
        cfg.highres_pixels = j.at("highres_pixels").get<int>();
        cfg.led_pitch = j.at("led_pitch_m").get<double>();
        cfg.led_grid = j.at("led_grid").get<int>();
        cfg.led_height = j.at("led_height_m").get<double>();
        for (int b : j.at("active_led_mask").get<std::vector<int>>()) cfg.active_led_mask.push_back(b != 0);
    } catch (const json::exception& e) {
        throw IoError("preset field error in " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_json(const optics::OpticalConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write preset file: " + path);
    out << to_json(cfg);
}

}  // namespace fpm::presets
