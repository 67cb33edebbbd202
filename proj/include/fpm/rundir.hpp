#pragma once

#include <string>
#include <vector>

#include "fpm/core.hpp"

namespace fpm::rundir {

/// Experiment directories hold diff-able provenance:
///   manifest.txt    key = value lines
///   losses.csv      iteration,M,G,C,J
///   led_pattern.csv iteration,c0,...,cN per snapshot
///   checkpoints/    model containers
///   reports/        rendered images

void ensure_dir(const std::string& path);

std::string f64_text(double v);  // %.17g, round-trip exact

class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set_i64(const std::string& key, int64_t value);
    void set_f64(const std::string& key, double value);
    void write(const std::string& path) const;
    static Manifest read(const std::string& path);
    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Line-buffered CSV writer with a fixed header.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header);
    void row(const std::string& line);
    void flush();

private:
    std::string path_;
    std::string buffer_;
};

std::string led_pattern_csv_header(int led_count);
std::string led_pattern_csv_row(int64_t iteration, const std::vector<double>& weights);

}  // namespace fpm::rundir
