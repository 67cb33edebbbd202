#include "fpm/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "fpm/core.hpp"

namespace fpm::checkpoint {

namespace {

std::string f64_text(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_token(const std::string& s, const std::string& path) {
    if (s.find('\t') != std::string::npos || s.find('\n') != std::string::npos)
        throw IoError("checkpoint " + path + ": token contains separator: " + s);
}

}  // namespace

void Writer::set(const std::string& key, const std::string& value) { header_.emplace_back(key, value); }
void Writer::set_i64(const std::string& key, int64_t value) { set(key, std::to_string(value)); }
void Writer::set_f64(const std::string& key, double value) { set(key, f64_text(value)); }

void Writer::add_array(const std::string& name, const std::vector<double>& values) {
    arrays_.emplace_back(name, values);
}

void Writer::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << "FPMCKPT 1\n";
    for (const auto& [k, v] : header_) {
        check_token(k, path);
        check_token(v, path);
        out << k << '\t' << v << '\n';
    }
    out << "ARRAYS " << arrays_.size() << '\n';
    for (const auto& [name, values] : arrays_) {
        check_token(name, path);
        out << name << '\t' << values.size() << '\n';
    }
    out << "DATA\n";
    for (const auto& [name, values] : arrays_)
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw IoError("write failure on checkpoint: " + path);
}

Reader::Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "FPMCKPT 1")
        throw IoError("checkpoint " + path + ": bad magic at offset 0");

    std::vector<std::pair<std::string, size_t>> manifest;
    bool in_arrays = false;
    while (std::getline(in, line)) {
        if (line == "DATA") break;
        if (line.rfind("ARRAYS ", 0) == 0) {
            in_arrays = true;
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw IoError("checkpoint " + path + ": malformed line near offset " +
                          std::to_string(static_cast<long long>(in.tellg())));
        if (in_arrays)
            manifest.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
        else
            header_[line.substr(0, tab)] = line.substr(tab + 1);
    }
    if (line != "DATA") throw IoError("checkpoint " + path + ": missing DATA section");

    for (const auto& [name, len] : manifest) {
        std::vector<double> v(len);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(len * sizeof(double)));
        if (static_cast<size_t>(in.gcount()) != len * sizeof(double))
            throw IoError("checkpoint " + path + ": truncated array " + name + " at offset " +
                          std::to_string(static_cast<long long>(in.tellg())));
        arrays_[name] = std::move(v);
        order_.push_back(name);
    }
}

const std::string& Reader::get(const std::string& key) const {
    auto it = header_.find(key);
    if (it == header_.end()) throw IoError("checkpoint " + path_ + ": missing header key " + key);
    return it->second;
}

int64_t Reader::get_i64(const std::string& key) const { return std::stoll(get(key)); }
double Reader::get_f64(const std::string& key) const { return std::stod(get(key)); }

const std::vector<double>& Reader::array(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw IoError("checkpoint " + path_ + ": missing array " + name);
    return it->second;
}

}  // namespace fpm::checkpoint
