#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpm {

/// Configuration or geometry that cannot describe a physical setup.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operands whose shapes do not agree, detected before any compute.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File parsing / serialization failures. Messages name the file and,
/// where known, the byte offset.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure at runtime (divergence, non-finite values).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major 2D grid of doubles.
struct Grid2D {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Grid2D() = default;
    Grid2D(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Grid2D& o) const { return rows == o.rows && cols == o.cols; }
};

/// 2D complex amplitude field sampled on a square grid.
/// pixel_pitch is the real-space sample spacing in meters.
struct ComplexField {
    Grid2D re;
    Grid2D im;
    double pixel_pitch = 0.0;

    ComplexField() = default;
    ComplexField(int r, int c, double pitch) : re(r, c), im(r, c), pixel_pitch(pitch) {}

    int rows() const { return re.rows; }
    int cols() const { return re.cols; }

    void check() const {
        if (!re.same_shape(im)) throw ShapeError("ComplexField: re and im shapes differ");
    }
};

inline void require_same_shape(const Grid2D& a, const Grid2D& b, const std::string& what) {
    if (!a.same_shape(b))
        throw ShapeError(what + ": shape mismatch (" + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
}

}  // namespace fpm
