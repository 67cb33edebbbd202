#pragma once

// Independent reference implementations used only by tests. These share no
// code with the library paths they check: the DFT oracle evaluates the
// forward model by direct summation, and the finite-difference helper probes
// gradients numerically.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "fpm/core.hpp"
#include "fpm/optics.hpp"

namespace oracle {

// Direct-summation forward model for one LED: naive DFT, exact bin shift,
// pupil by the defining inequality, naive inverse DFT, squared modulus,
// plain-loop block mean. O(N^4), intended for fields up to ~16x16.
inline fpm::Grid2D forward_single_led_dft(const fpm::ComplexField& object, int led_index,
                                          const fpm::optics::OpticalConfig& cfg) {
    using cplx = std::complex<double>;
    const int n = cfg.highres_pixels;
    const double du = 1.0 / cfg.object_extent;

    // naive forward DFT with 1/sqrt(N^2) scaling
    std::vector<cplx> spectrum(static_cast<size_t>(n) * n);
    const double scale = 1.0 / n;
    for (int fr = 0; fr < n; ++fr)
        for (int fc = 0; fc < n; ++fc) {
            cplx acc(0, 0);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    const double ang = -2.0 * M_PI * (static_cast<double>(fr) * r / n + static_cast<double>(fc) * c / n);
                    acc += cplx(object.re.at(r, c), object.im.at(r, c)) * cplx(std::cos(ang), std::sin(ang));
                }
            spectrum[static_cast<size_t>(fr) * n + fc] = acc * scale;
        }

    // LED frequency in bins (x -> columns, y -> rows)
    const auto geo = fpm::optics::LedGeometry::from_config(cfg);
    const auto& p = geo.positions.at(led_index);
    const double norm = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    const double ulx = -p.x / (cfg.wavelength * norm);
    const double uly = -p.y / (cfg.wavelength * norm);
    const int sc = static_cast<int>(std::lround(ulx / du));
    const int sr = static_cast<int>(std::lround(uly / du));

    // shifted spectrum times pupil
    const double cutoff = cfg.objective_na / cfg.wavelength;
    auto freq_of = [n](int i) { return i < (n + 1) / 2 ? i : i - n; };
    std::vector<cplx> filtered(static_cast<size_t>(n) * n, cplx(0, 0));
    for (int fr = 0; fr < n; ++fr)
        for (int fc = 0; fc < n; ++fc) {
            const double ur = freq_of(fr) * du;
            const double uc = freq_of(fc) * du;
            if (ur * ur + uc * uc > cutoff * cutoff) continue;
            const int src_r = ((fr - sr) % n + n) % n;
            const int src_c = ((fc - sc) % n + n) % n;
            filtered[static_cast<size_t>(fr) * n + fc] = spectrum[static_cast<size_t>(src_r) * n + src_c];
        }

    // naive inverse DFT, squared modulus
    fpm::Grid2D intensity(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            cplx acc(0, 0);
            for (int fr = 0; fr < n; ++fr)
                for (int fc = 0; fc < n; ++fc) {
                    const double ang = 2.0 * M_PI * (static_cast<double>(fr) * r / n + static_cast<double>(fc) * c / n);
                    acc += filtered[static_cast<size_t>(fr) * n + fc] * cplx(std::cos(ang), std::sin(ang));
                }
            acc *= scale;
            intensity.at(r, c) = std::norm(acc);
        }

    // block mean
    const int k = cfg.downsample_factor();
    fpm::Grid2D low(n / k, n / k);
    for (int r = 0; r < low.rows; ++r)
        for (int c = 0; c < low.cols; ++c) {
            double s = 0.0;
            for (int dr = 0; dr < k; ++dr)
                for (int dc = 0; dc < k; ++dc) s += intensity.at(r * k + dr, c * k + dc);
            low.at(r, c) = s / (k * k);
        }
    return low;
}

/// Central finite difference of a scalar function at x, one coordinate.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                           size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

/// L2 relative difference between two grids.
inline double rel_l2(const fpm::Grid2D& a, const fpm::Grid2D& b) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        num += d * d;
        den += b.v[i] * b.v[i];
    }
    return std::sqrt(num) / (std::sqrt(den) + 1e-300);
}

/// Deterministic random complex field for tests.
inline fpm::ComplexField random_field(int n, double pitch, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    fpm::ComplexField f(n, n, pitch);
    for (auto& v : f.re.v) v = dist(gen);
    for (auto& v : f.im.v) v = dist(gen);
    return f;
}

}  // namespace oracle
