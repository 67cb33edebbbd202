#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fpm/channel.hpp"

using namespace fpm;
using namespace fpm::channel;

namespace {

// Independent Monte-Carlo reference: same clipped-Gaussian recipe, written
// directly from the formula with its own generator.
struct OracleMoments {
    double mean, var;
};

OracleMoments oracle_moments(double intensity, double m, int64_t draws, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double s = 0.0, s2 = 0.0;
    for (int64_t i = 0; i < draws; ++i) {
        const double g = normal(gen);
        const double out = std::max((std::sqrt(intensity * m) * g + intensity * m) / m, 0.0);
        s += out;
        s2 += out * out;
    }
    const double mean = s / draws;
    return {mean, s2 / draws - mean * mean};
}

}  // namespace

TEST_CASE("zero image maps to zero for any m") {
    Grid2D img(4, 4, 0.0);
    for (double m : {0.25, 1.0, 4.0}) {
        rng::Stream s(1, 2);
        const auto out = apply_noise(img, {m, 1}, s);
        for (double v : out.v) CHECK(v == 0.0);
    }
}

TEST_CASE("sample moments match the Monte-Carlo reference") {
    // Clipping at zero shifts both moments away from (I, I/m) at strong
    // noise, so the reference is the clipped formula itself.
    const int64_t draws = 200000;
    Grid2D img(1, 1);
    img.v[0] = 1.0;
    for (double m : {0.25, 1.0, 4.0}) {
        const auto want = oracle_moments(1.0, m, draws, 77);
        rng::Stream s(123, 9);
        double sum = 0.0, sum2 = 0.0;
        for (int64_t i = 0; i < draws; ++i) {
            const auto out = apply_noise(img, {m, 123}, s);
            sum += out.v[0];
            sum2 += out.v[0] * out.v[0];
        }
        const double mean = sum / draws;
        const double var = sum2 / draws - mean * mean;
        CHECK(mean == doctest::Approx(want.mean).epsilon(0.01));
        CHECK(var == doctest::Approx(want.var).epsilon(0.02));
    }
}

TEST_CASE("vanishing-noise limit: huge m returns the input") {
    Grid2D img(3, 3);
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = 0.1 * (i + 1);
    rng::Stream s(5, 5);
    const auto out = apply_noise(img, {1e8, 5}, s);
    for (size_t i = 0; i < img.v.size(); ++i)
        CHECK(out.v[i] == doctest::Approx(img.v[i]).epsilon(1e-3));
}

TEST_CASE("identical (image, m, stream) reproduce identical output") {
    Grid2D img(4, 4);
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = 0.5 + 0.01 * i;
    rng::Stream s1(99, 7), s2(99, 7);
    const auto a = apply_noise(img, {0.5, 99}, s1);
    const auto b = apply_noise(img, {0.5, 99}, s2);
    for (size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
}

TEST_CASE("output is non-negative for all inputs and seeds") {
    Grid2D img(2, 2);
    img.v = {0.0, 0.01, 1.0, 10.0};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        rng::Stream s(seed, 1);
        const auto out = apply_noise(img, {0.25, seed}, s);
        for (double v : out.v) CHECK(v >= 0.0);
    }
}

TEST_CASE("empirical variance decreases as m grows") {
    const int64_t draws = 100000;
    Grid2D img(1, 1);
    img.v[0] = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double m : {0.25, 1.0, 4.0, 16.0}) {
        rng::Stream s(321, 2);
        double sum = 0.0, sum2 = 0.0;
        for (int64_t i = 0; i < draws; ++i) {
            const auto out = apply_noise(img, {m, 321}, s);
            sum += out.v[0];
            sum2 += out.v[0] * out.v[0];
        }
        const double var = sum2 / draws - (sum / draws) * (sum / draws);
        CHECK(var < prev);
        prev = var;
    }
}

TEST_CASE("non-finite input pixel raises") {
    Grid2D img(2, 2, 1.0);
    img.v[3] = std::numeric_limits<double>::quiet_NaN();
    rng::Stream s(1, 1);
    CHECK_THROWS_AS(apply_noise(img, {1.0, 1}, s), NumericError);
}

TEST_CASE("m must be positive") {
    NoiseSpec bad{0.0, 1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("noise_gradient: fixed-draw derivative, clip masking, I=0 rule") {
    const double m = 0.5, g = 0.7;
    auto f = [&](double intensity) {
        const double unclipped = intensity + g * std::sqrt(intensity / m);
        return std::max(unclipped, 0.0);
    };
    for (double intensity : {0.2, 1.0, 3.0}) {
        const double h = 1e-6;
        const double fd = (f(intensity + h) - f(intensity - h)) / (2 * h);
        const double unclipped = intensity + g * std::sqrt(intensity / m);
        CHECK(noise_gradient(intensity, m, g, unclipped) == doctest::Approx(fd).epsilon(1e-5));
    }
    // clipped pixel: negative unclipped value masks the gradient
    CHECK(noise_gradient(1.0, 0.25, -3.0, 1.0 + -3.0 * 2.0) == 0.0);
    // I = 0: stochastic term undefined, passthrough slope of the mean path
    CHECK(noise_gradient(0.0, 1.0, 0.3, 0.0) == 0.0);  // unclipped == 0 counts as clipped
    CHECK(noise_gradient(0.0, 1.0, 0.3, 0.1) == 1.0);
}
