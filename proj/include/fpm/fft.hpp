#pragma once

#include <complex>
#include <vector>

#include "fpm/core.hpp"

namespace fpm::fft {

/// True if n is a power of two (and > 0).
bool is_pow2(int n);

/// In-place radix-2 FFT of length a.size(); length must be a power of two.
/// No normalization is applied here.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

/// 2D FFT of a complex field held as separate re/im grids, in place.
/// Unitary convention: both directions scale by 1/sqrt(rows*cols), so a
/// forward then inverse transform is the exact identity and Parseval holds
/// with equal energies. Grid sides must be powers of two.
void fft2(Grid2D& re, Grid2D& im, bool inverse);

/// Frequency index of FFT bin i on an n-point grid: 0,1,...,n/2-1,-n/2,...,-1.
inline int freq_index(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

/// Circular shift of an FFT-ordered spectrum by (shift_r, shift_c) bins:
/// out[r][c] = in[(r - shift_r) mod n][(c - shift_c) mod n].
void circular_shift(const Grid2D& in, Grid2D& out, int shift_r, int shift_c);

}  // namespace fpm::fft
