#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fpm/objective.hpp"

using namespace fpm;
using namespace fpm::objective;

namespace {

ComplexField random_field(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1, 1);
    ComplexField f(n, n, 1e-6);
    for (auto& v : f.re.v) v = dist(gen);
    for (auto& v : f.im.v) v = dist(gen);
    return f;
}

}  // namespace

TEST_CASE("loss_M: zero for equal fields, one for a unit offset") {
    const auto a = random_field(5, 1);
    CHECK(loss_M(a, a) == 0.0);

    auto b = a;
    for (auto& v : b.re.v) v += 1.0;
    CHECK(loss_M(b, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss_M matches a scalar-loop reference") {
    const auto a = random_field(6, 2);
    const auto b = random_field(6, 3);
    double want = 0.0;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
            const double dr = a.re.at(r, c) - b.re.at(r, c);
            const double di = a.im.at(r, c) - b.im.at(r, c);
            want += dr * dr + di * di;
        }
    want /= 36.0;
    CHECK(loss_M(a, b) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("loss_G: zero for equal fields and for constant offsets") {
    const auto a = random_field(5, 4);
    CHECK(loss_G(a, a) == 0.0);

    auto b = a;
    for (auto& v : b.re.v) v += 0.7;
    for (auto& v : b.im.v) v -= 0.2;
    CHECK(loss_G(b, a) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("loss_G: 3x3 ramp against a flat field of equal mean") {
    // pred rises one unit per row; the flat field shares its mean, so M is
    // finite but every vertical difference of pred is 1 and of actual is 0.
    ComplexField pred(3, 3, 1e-6), actual(3, 3, 1e-6);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            pred.re.at(r, c) = r;
            actual.re.at(r, c) = 1.0;
        }
    // vertical term: (1-0)^2 over all six valid sites -> 1; horizontal: 0
    CHECK(loss_G(pred, actual) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loss_M(pred, actual) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("loss_C: ln 2 at zero logit, vanishing when fully fooled") {
    CHECK(loss_C(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(loss_C(40.0) < 1e-8);
    CHECK(loss_C(-1000.0) == doctest::Approx(1000.0).epsilon(1e-12));  // stable, no overflow
}

TEST_CASE("loss_D: near zero under perfect classification") {
    CHECK(loss_D(-20.0, 20.0) < 1e-8);
    CHECK(loss_D(0.0, 0.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("losses are non-negative") {
    for (unsigned s = 0; s < 5; ++s) {
        const auto a = random_field(4, 10 + s);
        const auto b = random_field(4, 20 + s);
        CHECK(loss_M(a, b) >= 0.0);
        CHECK(loss_G(a, b) >= 0.0);
    }
    CHECK(loss_C(3.7) >= 0.0);
    CHECK(loss_D(1.1, -0.3) >= 0.0);
}

TEST_CASE("graph losses agree with the scalar forms") {
    const auto a = random_field(4, 30);
    const auto b = random_field(4, 31);
    tensor::Graph g;
    const int pr = g.constant({1, 1, 4, 4}, a.re.v);
    const int pi = g.constant({1, 1, 4, 4}, a.im.v);
    const int ar = g.constant({1, 1, 4, 4}, b.re.v);
    const int ai = g.constant({1, 1, 4, 4}, b.im.v);
    CHECK(g.value(loss_M_node(g, pr, pi, ar, ai))[0] == doctest::Approx(loss_M(a, b)).epsilon(1e-12));
    CHECK(g.value(loss_G_node(g, pr, pi, ar, ai))[0] == doctest::Approx(loss_G(a, b)).epsilon(1e-12));

    const int logit = g.constant({2, 1}, {0.3, -1.2});
    const double want_c = 0.5 * (loss_C(0.3) + loss_C(-1.2));
    CHECK(g.value(loss_C_node(g, logit))[0] == doctest::Approx(want_c).epsilon(1e-12));
}

TEST_CASE("J assembles exactly as M + alpha*G + C and scales linearly in alpha") {
    tensor::Graph g;
    const int m = g.constant({1}, {0.25});
    const int gg = g.constant({1}, {0.003});
    const int c = g.constant({1}, {0.9});
    const double j1 = g.value(loss_J_node(g, m, gg, c))[0];
    CHECK(j1 == doctest::Approx(0.25 + 1000.0 * 0.003 + 0.9).epsilon(1e-15));
    const double j2 = g.value(loss_J_node(g, m, gg, c, 2000.0))[0];
    CHECK(j2 - j1 == doctest::Approx(1000.0 * 0.003).epsilon(1e-12));
}

TEST_CASE("gradient of J with respect to the prediction matches finite differences") {
    const auto actual = random_field(4, 40);
    std::mt19937 gen(41);
    std::uniform_real_distribution<double> dist(-1, 1);
    std::vector<double> pre(16), pim(16);
    for (auto& v : pre) v = dist(gen);
    for (auto& v : pim) v = dist(gen);

    // C goes through a fixed linear probe so the whole J path is exercised
    std::vector<double> probe(16);
    for (auto& v : probe) v = dist(gen);

    auto eval = [&](const std::vector<double>& re_v, const std::vector<double>& im_v, tensor::Graph& g,
                    int& pr_out) {
        const int pr = g.leaf({1, 1, 4, 4}, re_v, true);
        const int pi = g.leaf({1, 1, 4, 4}, im_v, true);
        const int ar = g.constant({1, 1, 4, 4}, actual.re.v);
        const int ai = g.constant({1, 1, 4, 4}, actual.im.v);
        const int m = loss_M_node(g, pr, pi, ar, ai);
        const int gn = loss_G_node(g, pr, pi, ar, ai);
        const int pw = g.constant({1, 1, 4, 4}, probe);
        const int logit = tensor::reshape(g, tensor::mean_all(g, tensor::mul(g, pr, pw)), {1, 1});
        const int c = loss_C_node(g, logit);
        pr_out = pr;
        return loss_J_node(g, m, gn, c);
    };

    tensor::Graph g;
    int pr_node = -1;
    const int j = eval(pre, pim, g, pr_node);
    g.backward(j);
    const auto grad = g.grad(pr_node);

    const double h = 1e-5;
    for (size_t i = 0; i < pre.size(); ++i) {
        auto up = pre, dn = pre;
        up[i] += h;
        dn[i] -= h;
        tensor::Graph gu, gd;
        int dummy;
        const double fu = gu.value(eval(up, pim, gu, dummy))[0];
        const double fd = gd.value(eval(dn, pim, gd, dummy))[0];
        const double want = (fu - fd) / (2 * h);
        CHECK(std::fabs(grad[i] - want) / (std::fabs(want) + 1e-8) < 1e-4);
    }
}

TEST_CASE("shape mismatches are rejected") {
    ComplexField a(4, 4, 1e-6), b(5, 5, 1e-6);
    CHECK_THROWS_AS(loss_M(a, b), ShapeError);
    CHECK_THROWS_AS(loss_G(a, b), ShapeError);
}

TEST_CASE("LossReport CSV row shape") {
    LossReport r;
    r.iteration = 12;
    r.M = 0.5;
    r.G = 0.001;
    r.C = 0.7;
    r.J = r.M + 1000 * r.G + r.C;
    CHECK(LossReport::csv_header() == "iteration,M,G,C,J");
    CHECK(r.csv_row().rfind("12,0.5,", 0) == 0);
}
