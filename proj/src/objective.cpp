#include "fpm/objective.hpp"

#include <cmath>
#include <cstdio>

namespace fpm::objective {

std::string LossReport::csv_row() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g", static_cast<long long>(iteration), M, G, C, J);
    return buf;
}

double loss_M(const ComplexField& pred, const ComplexField& actual) {
    pred.check();
    actual.check();
    require_same_shape(pred.re, actual.re, "loss_M");
    double s = 0.0;
    for (size_t i = 0; i < pred.re.v.size(); ++i) {
        const double dr = pred.re.v[i] - actual.re.v[i];
        const double di = pred.im.v[i] - actual.im.v[i];
        s += dr * dr + di * di;
    }
    return s / static_cast<double>(pred.re.v.size());
}

double loss_G(const ComplexField& pred, const ComplexField& actual) {
    pred.check();
    actual.check();
    require_same_shape(pred.re, actual.re, "loss_G");
    const int rows = pred.rows(), cols = pred.cols();
    if (rows < 2 || cols < 2) throw ShapeError("loss_G: fields must be at least 2x2");

    auto mse_diff = [&](bool vertical) {
        double s = 0.0;
        const int r_hi = vertical ? rows - 1 : rows;
        const int c_hi = vertical ? cols : cols - 1;
        for (int r = 0; r < r_hi; ++r)
            for (int c = 0; c < c_hi; ++c) {
                const int r2 = vertical ? r + 1 : r;
                const int c2 = vertical ? c : c + 1;
                const double dr = (pred.re.at(r2, c2) - pred.re.at(r, c)) - (actual.re.at(r2, c2) - actual.re.at(r, c));
                const double di = (pred.im.at(r2, c2) - pred.im.at(r, c)) - (actual.im.at(r2, c2) - actual.im.at(r, c));
                s += dr * dr + di * di;
            }
        return s / static_cast<double>(r_hi * c_hi);
    };
    return mse_diff(true) + mse_diff(false);
}

namespace {

double softplus_stable(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

}  // namespace

double loss_C(double logit_on_pred) {
    if (!std::isfinite(logit_on_pred)) throw NumericError("loss_C: non-finite logit");
    return softplus_stable(-logit_on_pred);
}

double loss_D(double logit_on_pred, double logit_on_actual) {
    if (!std::isfinite(logit_on_pred) || !std::isfinite(logit_on_actual))
        throw NumericError("loss_D: non-finite logit");
    return softplus_stable(logit_on_pred) + softplus_stable(-logit_on_actual);
}

int loss_M_node(tensor::Graph& g, int pred_re, int pred_im, int act_re, int act_im) {
    using namespace tensor;
    const int dre = sub(g, pred_re, act_re);
    const int dim = sub(g, pred_im, act_im);
    return add(g, mean_all(g, mul(g, dre, dre)), mean_all(g, mul(g, dim, dim)));
}

int loss_G_node(tensor::Graph& g, int pred_re, int pred_im, int act_re, int act_im) {
    using namespace tensor;
    const int dre = sub(g, pred_re, act_re);
    const int dim = sub(g, pred_im, act_im);
    const int vr = forward_diff_rows(g, dre);
    const int vi = forward_diff_rows(g, dim);
    const int hr = forward_diff_cols(g, dre);
    const int hi = forward_diff_cols(g, dim);
    const int vertical = add(g, mean_all(g, mul(g, vr, vr)), mean_all(g, mul(g, vi, vi)));
    const int horizontal = add(g, mean_all(g, mul(g, hr, hr)), mean_all(g, mul(g, hi, hi)));
    return add(g, vertical, horizontal);
}

int loss_C_node(tensor::Graph& g, int logits_on_pred) {
    using namespace tensor;
    return mean_all(g, softplus(g, scale(g, logits_on_pred, -1.0)));
}

int loss_D_node(tensor::Graph& g, int logits_on_pred, int logits_on_actual) {
    using namespace tensor;
    const int fake_term = mean_all(g, softplus(g, logits_on_pred));
    const int real_term = mean_all(g, softplus(g, scale(g, logits_on_actual, -1.0)));
    return add(g, fake_term, real_term);
}

int loss_J_node(tensor::Graph& g, int m_node, int g_node, int c_node, double alpha) {
    using namespace tensor;
    return add(g, add(g, m_node, scale(g, g_node, alpha)), c_node);
}

}  // namespace fpm::objective
