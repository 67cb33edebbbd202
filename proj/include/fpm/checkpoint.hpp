#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fpm::checkpoint {

/// Versioned binary container: a structured text header of key/value lines
/// and an array manifest, followed by raw little-endian doubles in declared
/// order. Writing then reading is bit-exact.
///
///   FPMCKPT 1
///   key<TAB>value
///   ...
///   ARRAYS <count>
///   name<TAB>length
///   ...
///   DATA
///   <raw doubles>
class Writer {
public:
    void set(const std::string& key, const std::string& value);
    void set_i64(const std::string& key, int64_t value);
    void set_f64(const std::string& key, double value);
    void add_array(const std::string& name, const std::vector<double>& values);
    void write(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> header_;
    std::vector<std::pair<std::string, std::vector<double>>> arrays_;
};

class Reader {
public:
    explicit Reader(const std::string& path);

    bool has(const std::string& key) const { return header_.count(key) > 0; }
    const std::string& get(const std::string& key) const;
    int64_t get_i64(const std::string& key) const;
    double get_f64(const std::string& key) const;

    bool has_array(const std::string& name) const { return arrays_.count(name) > 0; }
    const std::vector<double>& array(const std::string& name) const;
    const std::vector<std::string>& array_order() const { return order_; }

private:
    std::string path_;
    std::map<std::string, std::string> header_;
    std::map<std::string, std::vector<double>> arrays_;
    std::vector<std::string> order_;
};

}  // namespace fpm::checkpoint
