#include "fpm/rundir.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fpm::rundir {

namespace fs = std::filesystem;

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec && !fs::is_directory(path)) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string f64_text(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void Manifest::set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void Manifest::set_i64(const std::string& key, int64_t value) { set(key, std::to_string(value)); }
void Manifest::set_f64(const std::string& key, double value) { set(key, f64_text(value)); }

void Manifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path);
    for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
}

Manifest Manifest::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        const auto sep = line.find(" = ");
        if (sep == std::string::npos) continue;
        m.entries_.emplace_back(line.substr(0, sep), line.substr(sep + 3));
    }
    return m;
}

const std::string& Manifest::get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    throw IoError("manifest: missing key " + key);
}

bool Manifest::has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return true;
    return false;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& header) : path_(path) {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);  // fresh file per run
    if (!out) throw IoError("cannot create csv: " + path_);
    buffer_ = header + "\n";
}

void CsvWriter::row(const std::string& line) {
    buffer_ += line;
    buffer_ += '\n';
    if (buffer_.size() > 1 << 20) flush();
}

void CsvWriter::flush() {
    if (buffer_.empty()) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot write csv: " + path_);
    out << buffer_;
    buffer_.clear();
}

std::string led_pattern_csv_header(int led_count) {
    std::string h = "iteration";
    for (int i = 0; i < led_count; ++i) h += ",c" + std::to_string(i);
    return h;
}

std::string led_pattern_csv_row(int64_t iteration, const std::vector<double>& weights) {
    std::string row = std::to_string(iteration);
    for (double w : weights) {
        row += ',';
        row += f64_text(w);
    }
    return row;
}

}  // namespace fpm::rundir
