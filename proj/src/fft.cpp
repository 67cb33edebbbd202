#include "fpm/fft.hpp"

#include <cmath>

namespace fpm::fft {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const int n = static_cast<int>(a.size());
    if (!is_pow2(n)) throw ShapeError("fft: length " + std::to_string(n) + " is not a power of two");
    if (n == 1) return;

    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void fft2(Grid2D& re, Grid2D& im, bool inverse) {
    require_same_shape(re, im, "fft2");
    const int rows = re.rows, cols = re.cols;
    if (!is_pow2(rows) || !is_pow2(cols))
        throw ShapeError("fft2: grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " is not power-of-two sized");

    std::vector<std::complex<double>> line(std::max(rows, cols));

    for (int r = 0; r < rows; ++r) {
        line.resize(cols);
        for (int c = 0; c < cols; ++c) line[c] = {re.at(r, c), im.at(r, c)};
        fft_inplace(line, inverse);
        for (int c = 0; c < cols; ++c) {
            re.at(r, c) = line[c].real();
            im.at(r, c) = line[c].imag();
        }
    }
    for (int c = 0; c < cols; ++c) {
        line.resize(rows);
        for (int r = 0; r < rows; ++r) line[r] = {re.at(r, c), im.at(r, c)};
        fft_inplace(line, inverse);
        for (int r = 0; r < rows; ++r) {
            re.at(r, c) = line[r].real();
            im.at(r, c) = line[r].imag();
        }
    }

    const double norm = 1.0 / std::sqrt(static_cast<double>(rows) * cols);
    for (auto& x : re.v) x *= norm;
    for (auto& x : im.v) x *= norm;
}

void circular_shift(const Grid2D& in, Grid2D& out, int shift_r, int shift_c) {
    const int rows = in.rows, cols = in.cols;
    out = Grid2D(rows, cols);
    const int sr = ((shift_r % rows) + rows) % rows;
    const int sc = ((shift_c % cols) + cols) % cols;
    for (int r = 0; r < rows; ++r) {
        const int src_r = (r - sr + rows) % rows;
        for (int c = 0; c < cols; ++c) {
            out.at(r, c) = in.at(src_r, (c - sc + cols) % cols);
        }
    }
}

}  // namespace fpm::fft
