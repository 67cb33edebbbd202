#include "fpm/tensor.hpp"

#include <cmath>
#include <numeric>

#include "fpm/channel.hpp"
#include "fpm/fft.hpp"

namespace fpm::tensor {

int numel(const Shape& s) {
    int n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

namespace {

void check_numel(const Shape& s, const std::vector<double>& v, const char* what) {
    if (static_cast<int>(v.size()) != numel(s))
        throw ShapeError(std::string(what) + ": value size " + std::to_string(v.size()) +
                         " does not match shape " + shape_str(s));
}

// Trailing-2D view: leading dims collapse into planes.
struct Planes {
    int planes, rows, cols;
};

Planes trailing2d(const Shape& s, const char* what) {
    if (s.size() < 2) throw ShapeError(std::string(what) + ": need at least 2 dims, got " + shape_str(s));
    int p = 1;
    for (size_t i = 0; i + 2 < s.size(); ++i) p *= s[i];
    return {p, s[s.size() - 2], s[s.size() - 1]};
}

}  // namespace

int Graph::leaf(Shape shape, std::vector<double> value, bool requires_grad) {
    check_numel(shape, value, "leaf");
    Node n;
    n.shape = std::move(shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::make_node(Shape shape, std::vector<double> value, std::vector<int> inputs,
                     std::function<void(Graph&, int)> backward) {
    check_numel(shape, value, "make_node");
    Node n;
    n.shape = std::move(shape);
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    for (int i : n.inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const std::vector<double>& Graph::grad(int id) const {
    const Node& n = nodes_[id];
    if (!n.grad.empty()) return n.grad;
    zero_scratch_.assign(n.value.size(), 0.0);
    return zero_scratch_;
}

std::vector<double>& Graph::grad_ref(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

void Graph::backward(int root) {
    if (nodes_[root].value.size() != 1)
        throw ShapeError("backward: root must be a single-element tensor, got " + shape_str(nodes_[root].shape));
    for (auto& n : nodes_) n.grad.clear();
    grad_ref(root)[0] = 1.0;
    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
        n.backward(*this, id);
    }
}

// ---- elementwise ----------------------------------------------------------

namespace {

int binary_same_shape(Graph& g, int a, int b, const char* what, double (*fwd)(double, double),
                      std::function<void(Graph&, int, int, int)> bwd) {
    if (g.shape(a) != g.shape(b))
        throw ShapeError(std::string(what) + ": shapes " + shape_str(g.shape(a)) + " vs " + shape_str(g.shape(b)));
    const auto& va = g.value(a);
    const auto& vb = g.value(b);
    std::vector<double> out(va.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i], vb[i]);
    return g.make_node(g.shape(a), std::move(out), {a, b},
                       [a, b, bwd](Graph& gg, int self) { bwd(gg, self, a, b); });
}

}  // namespace

int add(Graph& g, int a, int b) {
    return binary_same_shape(
        g, a, b, "add", [](double x, double y) { return x + y; },
        [](Graph& gg, int self, int a_, int b_) {
            const auto& d = gg.node(self).grad;
            if (gg.node(a_).requires_grad) {
                auto& da = gg.grad_ref(a_);
                for (size_t i = 0; i < d.size(); ++i) da[i] += d[i];
            }
            if (gg.node(b_).requires_grad) {
                auto& db = gg.grad_ref(b_);
                for (size_t i = 0; i < d.size(); ++i) db[i] += d[i];
            }
        });
}

int sub(Graph& g, int a, int b) {
    return binary_same_shape(
        g, a, b, "sub", [](double x, double y) { return x - y; },
        [](Graph& gg, int self, int a_, int b_) {
            const auto& d = gg.node(self).grad;
            if (gg.node(a_).requires_grad) {
                auto& da = gg.grad_ref(a_);
                for (size_t i = 0; i < d.size(); ++i) da[i] += d[i];
            }
            if (gg.node(b_).requires_grad) {
                auto& db = gg.grad_ref(b_);
                for (size_t i = 0; i < d.size(); ++i) db[i] -= d[i];
            }
        });
}

int mul(Graph& g, int a, int b) {
    return binary_same_shape(
        g, a, b, "mul", [](double x, double y) { return x * y; },
        [](Graph& gg, int self, int a_, int b_) {
            const auto& d = gg.node(self).grad;
            const auto& va = gg.value(a_);
            const auto& vb = gg.value(b_);
            if (gg.node(a_).requires_grad) {
                auto& da = gg.grad_ref(a_);
                for (size_t i = 0; i < d.size(); ++i) da[i] += d[i] * vb[i];
            }
            if (gg.node(b_).requires_grad) {
                auto& db = gg.grad_ref(b_);
                for (size_t i = 0; i < d.size(); ++i) db[i] += d[i] * va[i];
            }
        });
}

int scale(Graph& g, int a, double s) {
    std::vector<double> out = g.value(a);
    for (auto& x : out) x *= s;
    return g.make_node(g.shape(a), std::move(out), {a}, [a, s](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& da = gg.grad_ref(a);
        for (size_t i = 0; i < d.size(); ++i) da[i] += s * d[i];
    });
}

int add_scalar(Graph& g, int a, double s) {
    std::vector<double> out = g.value(a);
    for (auto& x : out) x += s;
    return g.make_node(g.shape(a), std::move(out), {a}, [a](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& da = gg.grad_ref(a);
        for (size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    });
}

// ---- matmul / bias --------------------------------------------------------

int matmul(Graph& g, int a, int b) {
    const Shape& sa = g.shape(a);
    const Shape& sb = g.shape(b);
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
        throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " x " + shape_str(sb));
    const int m = sa[0], k = sa[1], n = sb[1];
    const auto& va = g.value(a);
    const auto& vb = g.value(b);
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double aip = va[static_cast<size_t>(i) * k + p];
            const double* brow = &vb[static_cast<size_t>(p) * n];
            double* orow = &out[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    return g.make_node({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        const auto& va = gg.value(a);
        const auto& vb = gg.value(b);
        if (gg.node(a).requires_grad) {
            auto& da = gg.grad_ref(a);
#pragma omp parallel for schedule(static)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double dij = d[static_cast<size_t>(i) * n + j];
                    for (int p = 0; p < k; ++p) da[static_cast<size_t>(i) * k + p] += dij * vb[static_cast<size_t>(p) * n + j];
                }
        }
        if (gg.node(b).requires_grad) {
            auto& db = gg.grad_ref(b);
#pragma omp parallel for schedule(static)
            for (int p = 0; p < k; ++p)
                for (int i = 0; i < m; ++i) {
                    const double aip = va[static_cast<size_t>(i) * k + p];
                    for (int j = 0; j < n; ++j) db[static_cast<size_t>(p) * n + j] += aip * d[static_cast<size_t>(i) * n + j];
                }
        }
    });
}

int bias_add_rows(Graph& g, int x, int bias) {
    const Shape& sx = g.shape(x);
    const Shape& sb = g.shape(bias);
    if (sx.size() != 2 || sb.size() != 1 || sb[0] != sx[1])
        throw ShapeError("bias_add_rows: shapes " + shape_str(sx) + " vs " + shape_str(sb));
    const int rows = sx[0], cols = sx[1];
    std::vector<double> out = g.value(x);
    const auto& vb = g.value(bias);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out[static_cast<size_t>(r) * cols + c] += vb[c];
    return g.make_node(sx, std::move(out), {x, bias}, [x, bias, rows, cols](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        if (gg.node(x).requires_grad) {
            auto& dx = gg.grad_ref(x);
            for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
        }
        if (gg.node(bias).requires_grad) {
            auto& db = gg.grad_ref(bias);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) db[c] += d[static_cast<size_t>(r) * cols + c];
        }
    });
}

int bias_add_channel(Graph& g, int x, int bias) {
    const Shape& sx = g.shape(x);
    const Shape& sb = g.shape(bias);
    if (sx.size() != 4 || sb.size() != 1 || sb[0] != sx[1])
        throw ShapeError("bias_add_channel: shapes " + shape_str(sx) + " vs " + shape_str(sb));
    const int b = sx[0], ch = sx[1], hw = sx[2] * sx[3];
    std::vector<double> out = g.value(x);
    const auto& vb = g.value(bias);
    for (int e = 0; e < b; ++e)
        for (int c = 0; c < ch; ++c) {
            double* plane = &out[(static_cast<size_t>(e) * ch + c) * hw];
            for (int i = 0; i < hw; ++i) plane[i] += vb[c];
        }
    return g.make_node(sx, std::move(out), {x, bias}, [x, bias, b, ch, hw](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        if (gg.node(x).requires_grad) {
            auto& dx = gg.grad_ref(x);
            for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
        }
        if (gg.node(bias).requires_grad) {
            auto& db = gg.grad_ref(bias);
            for (int e = 0; e < b; ++e)
                for (int c = 0; c < ch; ++c) {
                    const double* plane = &d[(static_cast<size_t>(e) * ch + c) * hw];
                    double s = 0.0;
                    for (int i = 0; i < hw; ++i) s += plane[i];
                    db[c] += s;
                }
        }
    });
}

// ---- convolution ----------------------------------------------------------

namespace {

// 3x3 stencil over one input plane, accumulated into a row buffer that
// stays hot across channel taps. kern points at 9 weights.
inline void stencil3_accum(const double* iplane, const double* kern, double* rowbuf, int y, int H, int W) {
    for (int ky = 0; ky < 3; ++ky) {
        const int iy = y + ky - 1;
        if (iy < 0 || iy >= H) continue;
        const double* irow = iplane + static_cast<size_t>(iy) * W;
        const double w0 = kern[ky * 3 + 0], w1 = kern[ky * 3 + 1], w2 = kern[ky * 3 + 2];
        rowbuf[0] += w1 * irow[0] + w2 * irow[1];
        for (int xx = 1; xx + 1 < W; ++xx) rowbuf[xx] += w0 * irow[xx - 1] + w1 * irow[xx] + w2 * irow[xx + 1];
        rowbuf[W - 1] += w0 * irow[W - 2] + w1 * irow[W - 1];
    }
}

void conv2d_forward_3x3(const double* vx, const double* vw, double* out, int B, int C, int H, int W, int OC) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < B; ++b)
        for (int oc = 0; oc < OC; ++oc) {
            double* oplane = out + (static_cast<size_t>(b) * OC + oc) * H * W;
            std::vector<double> rowbuf(W);
            for (int y = 0; y < H; ++y) {
                std::fill(rowbuf.begin(), rowbuf.end(), 0.0);
                for (int c = 0; c < C; ++c) {
                    const double* iplane = vx + (static_cast<size_t>(b) * C + c) * H * W;
                    const double* kern = vw + (static_cast<size_t>(oc) * C + c) * 9;
                    stencil3_accum(iplane, kern, rowbuf.data(), y, H, W);
                }
                std::copy(rowbuf.begin(), rowbuf.end(), oplane + static_cast<size_t>(y) * W);
            }
        }
}

// input gradient: correlate the output gradient with the flipped kernel
void conv2d_dinput_3x3(const double* d, const double* vw, double* dx, int B, int C, int H, int W, int OC) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            double* gplane = dx + (static_cast<size_t>(b) * C + c) * H * W;
            std::vector<double> rowbuf(W);
            std::vector<double> flipped(9);
            for (int y = 0; y < H; ++y) {
                std::fill(rowbuf.begin(), rowbuf.end(), 0.0);
                for (int oc = 0; oc < OC; ++oc) {
                    const double* dplane = d + (static_cast<size_t>(b) * OC + oc) * H * W;
                    const double* kern = vw + (static_cast<size_t>(oc) * C + c) * 9;
                    for (int i = 0; i < 9; ++i) flipped[i] = kern[8 - i];
                    stencil3_accum(dplane, flipped.data(), rowbuf.data(), y, H, W);
                }
                for (int xx = 0; xx < W; ++xx) gplane[static_cast<size_t>(y) * W + xx] += rowbuf[xx];
            }
        }
}

// weight gradient: nine shifted row dot products per (oc, c) pair
void conv2d_dweight_3x3(const double* d, const double* vx, double* dw, int B, int C, int H, int W, int OC) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; ++oc)
        for (int c = 0; c < C; ++c) {
            double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            for (int b = 0; b < B; ++b) {
                const double* dplane = d + (static_cast<size_t>(b) * OC + oc) * H * W;
                const double* iplane = vx + (static_cast<size_t>(b) * C + c) * H * W;
                for (int y = 0; y < H; ++y) {
                    const double* drow = dplane + static_cast<size_t>(y) * W;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= H) continue;
                        const double* irow = iplane + static_cast<size_t>(iy) * W;
                        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
                        for (int xx = 1; xx + 1 < W; ++xx) {
                            s0 += drow[xx] * irow[xx - 1];
                            s1 += drow[xx] * irow[xx];
                            s2 += drow[xx] * irow[xx + 1];
                        }
                        // boundary columns
                        s1 += drow[0] * irow[0];
                        s2 += drow[0] * irow[1];
                        s0 += drow[W - 1] * irow[W - 2];
                        s1 += drow[W - 1] * irow[W - 1];
                        acc[ky * 3 + 0] += s0;
                        acc[ky * 3 + 1] += s1;
                        acc[ky * 3 + 2] += s2;
                    }
                }
            }
            double* kgrad = dw + (static_cast<size_t>(oc) * C + c) * 9;
            for (int i = 0; i < 9; ++i) kgrad[i] += acc[i];
        }
}

}  // namespace

int conv2d(Graph& g, int x, int w) {
    const Shape& sx = g.shape(x);
    const Shape& sw = g.shape(w);
    if (sx.size() != 4 || sw.size() != 4 || sw[1] != sx[1] || sw[2] != sw[3] || sw[2] % 2 == 0)
        throw ShapeError("conv2d: shapes " + shape_str(sx) + " vs kernel " + shape_str(sw));
    const int B = sx[0], C = sx[1], H = sx[2], W = sx[3];
    const int OC = sw[0], K = sw[2], P = K / 2;
    const auto& vx = g.value(x);
    const auto& vw = g.value(w);
    std::vector<double> out(static_cast<size_t>(B) * OC * H * W, 0.0);
    const bool fast3 = (K == 3 && W >= 2);

    if (fast3) {
        conv2d_forward_3x3(vx.data(), vw.data(), out.data(), B, C, H, W, OC);
    } else {
#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < B; ++b)
            for (int oc = 0; oc < OC; ++oc) {
                double* oplane = &out[(static_cast<size_t>(b) * OC + oc) * H * W];
                for (int c = 0; c < C; ++c) {
                    const double* iplane = &vx[(static_cast<size_t>(b) * C + c) * H * W];
                    const double* kern = &vw[(static_cast<size_t>(oc) * C + c) * K * K];
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            const double wv = kern[ky * K + kx];
                            if (wv == 0.0) continue;
                            const int dy = ky - P, dx = kx - P;
                            const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                            const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                            for (int y = y0; y < y1; ++y) {
                                const double* irow = iplane + static_cast<size_t>(y + dy) * W + dx;
                                double* orow = oplane + static_cast<size_t>(y) * W;
                                for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
                            }
                        }
                }
            }
    }

    return g.make_node({B, OC, H, W}, std::move(out), {x, w},
                       [x, w, B, C, H, W, OC, K, P, fast3](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        const auto& vx = gg.value(x);
        const auto& vw = gg.value(w);
        if (gg.node(w).requires_grad) {
            auto& dw = gg.grad_ref(w);
            if (fast3) {
                conv2d_dweight_3x3(d.data(), vx.data(), dw.data(), B, C, H, W, OC);
            } else {
#pragma omp parallel for schedule(static)
                for (int oc = 0; oc < OC; ++oc)
                    for (int c = 0; c < C; ++c) {
                        double* kgrad = &dw[(static_cast<size_t>(oc) * C + c) * K * K];
                        for (int b = 0; b < B; ++b) {
                            const double* dplane = &d[(static_cast<size_t>(b) * OC + oc) * H * W];
                            const double* iplane = &vx[(static_cast<size_t>(b) * C + c) * H * W];
                            for (int ky = 0; ky < K; ++ky)
                                for (int kx = 0; kx < K; ++kx) {
                                    const int dy = ky - P, dx = kx - P;
                                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                                    double s = 0.0;
                                    for (int y = y0; y < y1; ++y) {
                                        const double* irow = iplane + static_cast<size_t>(y + dy) * W + dx;
                                        const double* drow = dplane + static_cast<size_t>(y) * W;
                                        for (int xx = x0; xx < x1; ++xx) s += drow[xx] * irow[xx];
                                    }
                                    kgrad[ky * K + kx] += s;
                                }
                        }
                    }
            }
        }
        if (gg.node(x).requires_grad) {
            auto& dxv = gg.grad_ref(x);
            if (fast3) {
                conv2d_dinput_3x3(d.data(), vw.data(), dxv.data(), B, C, H, W, OC);
            } else {
#pragma omp parallel for collapse(2) schedule(static)
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c) {
                        double* gplane = &dxv[(static_cast<size_t>(b) * C + c) * H * W];
                        for (int oc = 0; oc < OC; ++oc) {
                            const double* dplane = &d[(static_cast<size_t>(b) * OC + oc) * H * W];
                            const double* kern = &vw[(static_cast<size_t>(oc) * C + c) * K * K];
                            for (int ky = 0; ky < K; ++ky)
                                for (int kx = 0; kx < K; ++kx) {
                                    const double wv = kern[ky * K + kx];
                                    if (wv == 0.0) continue;
                                    // input pixel (y+dy, x+dx) received wv * in -> transpose
                                    const int dy = ky - P, dx = kx - P;
                                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                                    for (int y = y0; y < y1; ++y) {
                                        double* grow = gplane + static_cast<size_t>(y + dy) * W + dx;
                                        const double* drow = dplane + static_cast<size_t>(y) * W;
                                        for (int xx = x0; xx < x1; ++xx) grow[xx] += wv * drow[xx];
                                    }
                                }
                        }
                    }
            }
        }
    });
}

// ---- maxout ----------------------------------------------------------------

int channel_max(Graph& g, int x) {
    const Shape& sx = g.shape(x);
    if (sx.size() != 4 || sx[1] % 2 != 0)
        throw ShapeError("channel_max: need even channel count, got " + shape_str(sx));
    const int B = sx[0], C = sx[1], HW = sx[2] * sx[3];
    const auto& vx = g.value(x);
    std::vector<double> out(static_cast<size_t>(B) * (C / 2) * HW);
    std::vector<uint8_t> pick(out.size());  // 0 -> lower channel wins (also on ties)
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C / 2; ++c) {
            const double* lo = &vx[(static_cast<size_t>(b) * C + 2 * c) * HW];
            const double* hi = &vx[(static_cast<size_t>(b) * C + 2 * c + 1) * HW];
            double* o = &out[(static_cast<size_t>(b) * (C / 2) + c) * HW];
            uint8_t* p = &pick[(static_cast<size_t>(b) * (C / 2) + c) * HW];
            for (int i = 0; i < HW; ++i) {
                if (lo[i] >= hi[i]) {
                    o[i] = lo[i];
                    p[i] = 0;
                } else {
                    o[i] = hi[i];
                    p[i] = 1;
                }
            }
        }
    return g.make_node({B, C / 2, sx[2], sx[3]}, std::move(out), {x},
                       [x, B, C, HW, pick = std::move(pick)](Graph& gg, int self) {
                           const auto& d = gg.node(self).grad;
                           auto& dx = gg.grad_ref(x);
                           for (int b = 0; b < B; ++b)
                               for (int c = 0; c < C / 2; ++c) {
                                   const double* drow = &d[(static_cast<size_t>(b) * (C / 2) + c) * HW];
                                   const uint8_t* p = &pick[(static_cast<size_t>(b) * (C / 2) + c) * HW];
                                   double* lo = &dx[(static_cast<size_t>(b) * C + 2 * c) * HW];
                                   double* hi = &dx[(static_cast<size_t>(b) * C + 2 * c + 1) * HW];
                                   for (int i = 0; i < HW; ++i) (p[i] ? hi : lo)[i] += drow[i];
                               }
                       });
}

// ---- batch norm -------------------------------------------------------------

int batch_norm(Graph& g, int x, int gamma, int beta, BnStats& stats, bool training, bool update_running,
               double momentum, double eps) {
    const Shape& sx = g.shape(x);
    if (sx.size() != 4) throw ShapeError("batch_norm: need [B,C,H,W], got " + shape_str(sx));
    const int B = sx[0], C = sx[1], HW = sx[2] * sx[3];
    if (g.shape(gamma) != Shape{C} || g.shape(beta) != Shape{C})
        throw ShapeError("batch_norm: gamma/beta must be [C]");
    if (static_cast<int>(stats.mean.size()) != C) throw ShapeError("batch_norm: running stats channel mismatch");

    const auto& vx = g.value(x);
    const auto& vg = g.value(gamma);
    const auto& vb = g.value(beta);
    const int n = B * HW;

    std::vector<double> mean(C), var(C);
    if (training) {
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int b = 0; b < B; ++b) {
                const double* plane = &vx[(static_cast<size_t>(b) * C + c) * HW];
                for (int i = 0; i < HW; ++i) s += plane[i];
            }
            mean[c] = s / n;
            double v = 0.0;
            for (int b = 0; b < B; ++b) {
                const double* plane = &vx[(static_cast<size_t>(b) * C + c) * HW];
                for (int i = 0; i < HW; ++i) {
                    const double dlt = plane[i] - mean[c];
                    v += dlt * dlt;
                }
            }
            var[c] = v / n;
        }
        if (update_running) {
            for (int c = 0; c < C; ++c) {
                stats.mean[c] = momentum * stats.mean[c] + (1.0 - momentum) * mean[c];
                stats.var[c] = momentum * stats.var[c] + (1.0 - momentum) * var[c];
            }
        }
    } else {
        mean = stats.mean;
        var = stats.var;
    }

    std::vector<double> inv_std(C);
    for (int c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);

    std::vector<double> xhat(vx.size());
    std::vector<double> out(vx.size());
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const double* plane = &vx[(static_cast<size_t>(b) * C + c) * HW];
            double* xh = &xhat[(static_cast<size_t>(b) * C + c) * HW];
            double* o = &out[(static_cast<size_t>(b) * C + c) * HW];
            for (int i = 0; i < HW; ++i) {
                xh[i] = (plane[i] - mean[c]) * inv_std[c];
                o[i] = vg[c] * xh[i] + vb[c];
            }
        }

    return g.make_node(sx, std::move(out), {x, gamma, beta},
                       [x, gamma, beta, B, C, HW, n, training, xhat = std::move(xhat),
                        inv_std = std::move(inv_std)](Graph& gg, int self) {
                           const auto& d = gg.node(self).grad;
                           const auto& vg = gg.value(gamma);
                           if (gg.node(gamma).requires_grad) {
                               auto& dg = gg.grad_ref(gamma);
                               for (int b = 0; b < B; ++b)
                                   for (int c = 0; c < C; ++c) {
                                       const double* drow = &d[(static_cast<size_t>(b) * C + c) * HW];
                                       const double* xh = &xhat[(static_cast<size_t>(b) * C + c) * HW];
                                       double s = 0.0;
                                       for (int i = 0; i < HW; ++i) s += drow[i] * xh[i];
                                       dg[c] += s;
                                   }
                           }
                           if (gg.node(beta).requires_grad) {
                               auto& db = gg.grad_ref(beta);
                               for (int b = 0; b < B; ++b)
                                   for (int c = 0; c < C; ++c) {
                                       const double* drow = &d[(static_cast<size_t>(b) * C + c) * HW];
                                       double s = 0.0;
                                       for (int i = 0; i < HW; ++i) s += drow[i];
                                       db[c] += s;
                                   }
                           }
                           if (!gg.node(x).requires_grad) return;
                           auto& dx = gg.grad_ref(x);
                           if (!training) {
                               // running statistics are constants here
                               for (int b = 0; b < B; ++b)
                                   for (int c = 0; c < C; ++c) {
                                       const double* drow = &d[(static_cast<size_t>(b) * C + c) * HW];
                                       double* t = &dx[(static_cast<size_t>(b) * C + c) * HW];
                                       const double k = vg[c] * inv_std[c];
                                       for (int i = 0; i < HW; ++i) t[i] += k * drow[i];
                                   }
                               return;
                           }
                           // batch statistics participate in the gradient
                           for (int c = 0; c < C; ++c) {
                               double sum_d = 0.0, sum_dx = 0.0;
                               for (int b = 0; b < B; ++b) {
                                   const double* drow = &d[(static_cast<size_t>(b) * C + c) * HW];
                                   const double* xh = &xhat[(static_cast<size_t>(b) * C + c) * HW];
                                   for (int i = 0; i < HW; ++i) {
                                       sum_d += drow[i];
                                       sum_dx += drow[i] * xh[i];
                                   }
                               }
                               const double k = vg[c] * inv_std[c];
                               for (int b = 0; b < B; ++b) {
                                   const double* drow = &d[(static_cast<size_t>(b) * C + c) * HW];
                                   const double* xh = &xhat[(static_cast<size_t>(b) * C + c) * HW];
                                   double* t = &dx[(static_cast<size_t>(b) * C + c) * HW];
                                   for (int i = 0; i < HW; ++i)
                                       t[i] += k * (drow[i] - sum_d / n - xh[i] * sum_dx / n);
                               }
                           }
                       });
}

// ---- dropout ----------------------------------------------------------------

int dropout(Graph& g, int x, double rate, rng::Stream& stream, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
    if (!training || rate == 0.0) return x;
    const auto& vx = g.value(x);
    std::vector<double> mask(vx.size());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& mv : mask) mv = (stream.uniform() >= rate) ? keep_scale : 0.0;
    std::vector<double> out(vx.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = vx[i] * mask[i];
    return g.make_node(g.shape(x), std::move(out), {x}, [x, mask = std::move(mask)](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i] * mask[i];
    });
}

// ---- misc elementwise ---------------------------------------------------------

int complex_modulus_squared(Graph& g, int re, int im) {
    return binary_same_shape(
        g, re, im, "complex_modulus_squared", [](double r, double i) { return r * r + i * i; },
        [](Graph& gg, int self, int re_, int im_) {
            const auto& d = gg.node(self).grad;
            const auto& vr = gg.value(re_);
            const auto& vi = gg.value(im_);
            if (gg.node(re_).requires_grad) {
                auto& dr = gg.grad_ref(re_);
                for (size_t i = 0; i < d.size(); ++i) dr[i] += 2.0 * vr[i] * d[i];
            }
            if (gg.node(im_).requires_grad) {
                auto& di = gg.grad_ref(im_);
                for (size_t i = 0; i < d.size(); ++i) di[i] += 2.0 * vi[i] * d[i];
            }
        });
}

int softplus(Graph& g, int x) {
    const auto& vx = g.value(x);
    std::vector<double> out(vx.size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = std::max(vx[i], 0.0) + std::log1p(std::exp(-std::fabs(vx[i])));
    return g.make_node(g.shape(x), std::move(out), {x}, [x](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        const auto& vx = gg.value(x);
        auto& dx = gg.grad_ref(x);
        for (size_t i = 0; i < d.size(); ++i) {
            const double sig = vx[i] >= 0 ? 1.0 / (1.0 + std::exp(-vx[i])) : std::exp(vx[i]) / (1.0 + std::exp(vx[i]));
            dx[i] += d[i] * sig;
        }
    });
}

// ---- resampling -----------------------------------------------------------------

int block_mean(Graph& g, int x, int k) {
    const Shape& sx = g.shape(x);
    const auto [planes, H, W] = trailing2d(sx, "block_mean");
    if (k <= 0 || H % k != 0 || W % k != 0)
        throw ShapeError("block_mean: " + shape_str(sx) + " not divisible by k=" + std::to_string(k));
    const int h = H / k, w = W / k;
    const auto& vx = g.value(x);
    std::vector<double> out(static_cast<size_t>(planes) * h * w);
    const double inv = 1.0 / (k * k);
    for (int p = 0; p < planes; ++p) {
        const double* ip = &vx[static_cast<size_t>(p) * H * W];
        double* op = &out[static_cast<size_t>(p) * h * w];
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                double s = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) s += ip[static_cast<size_t>(y * k + dy) * W + xx * k + dx];
                op[static_cast<size_t>(y) * w + xx] = s * inv;
            }
    }
    Shape so(sx.begin(), sx.end() - 2);
    so.push_back(h);
    so.push_back(w);
    return g.make_node(so, std::move(out), {x}, [x, planes, H, W, h, w, k, inv](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (int p = 0; p < planes; ++p) {
            const double* dp = &d[static_cast<size_t>(p) * h * w];
            double* gp = &dx[static_cast<size_t>(p) * H * W];
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    const double dv = dp[static_cast<size_t>(y) * w + xx] * inv;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dxc = 0; dxc < k; ++dxc) gp[static_cast<size_t>(y * k + dy) * W + xx * k + dxc] += dv;
                }
        }
    });
}

int upsample_nearest(Graph& g, int x, int k) {
    const Shape& sx = g.shape(x);
    const auto [planes, H, W] = trailing2d(sx, "upsample_nearest");
    if (k <= 0) throw ShapeError("upsample_nearest: k must be positive");
    const int Ho = H * k, Wo = W * k;
    const auto& vx = g.value(x);
    std::vector<double> out(static_cast<size_t>(planes) * Ho * Wo);
    for (int p = 0; p < planes; ++p) {
        const double* ip = &vx[static_cast<size_t>(p) * H * W];
        double* op = &out[static_cast<size_t>(p) * Ho * Wo];
        for (int y = 0; y < Ho; ++y)
            for (int xx = 0; xx < Wo; ++xx) op[static_cast<size_t>(y) * Wo + xx] = ip[static_cast<size_t>(y / k) * W + xx / k];
    }
    Shape so(sx.begin(), sx.end() - 2);
    so.push_back(Ho);
    so.push_back(Wo);
    return g.make_node(so, std::move(out), {x}, [x, planes, H, W, Ho, Wo, k](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (int p = 0; p < planes; ++p) {
            const double* dp = &d[static_cast<size_t>(p) * Ho * Wo];
            double* gp = &dx[static_cast<size_t>(p) * H * W];
            for (int y = 0; y < Ho; ++y)
                for (int xx = 0; xx < Wo; ++xx) gp[static_cast<size_t>(y / k) * W + xx / k] += dp[static_cast<size_t>(y) * Wo + xx];
        }
    });
}

// ---- FFT ------------------------------------------------------------------------

int fft2(Graph& g, int x, bool inverse) {
    const Shape& sx = g.shape(x);
    if (sx.size() != 3 || sx[0] != 2) throw ShapeError("fft2: need packed complex [2,H,W], got " + shape_str(sx));
    const int H = sx[1], W = sx[2];
    const auto& vx = g.value(x);
    Grid2D re(H, W), im(H, W);
    std::copy(vx.begin(), vx.begin() + static_cast<size_t>(H) * W, re.v.begin());
    std::copy(vx.begin() + static_cast<size_t>(H) * W, vx.end(), im.v.begin());
    fft::fft2(re, im, inverse);
    std::vector<double> out(vx.size());
    std::copy(re.v.begin(), re.v.end(), out.begin());
    std::copy(im.v.begin(), im.v.end(), out.begin() + static_cast<size_t>(H) * W);
    return g.make_node(sx, std::move(out), {x}, [x, H, W, inverse](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        Grid2D re(H, W), im(H, W);
        std::copy(d.begin(), d.begin() + static_cast<size_t>(H) * W, re.v.begin());
        std::copy(d.begin() + static_cast<size_t>(H) * W, d.end(), im.v.begin());
        fft::fft2(re, im, !inverse);  // adjoint of a unitary transform
        auto& dx = gg.grad_ref(x);
        for (size_t i = 0; i < re.v.size(); ++i) dx[i] += re.v[i];
        for (size_t i = 0; i < im.v.size(); ++i) dx[static_cast<size_t>(H) * W + i] += im.v[i];
    });
}

// ---- shift-by-one differences ------------------------------------------------------

int forward_diff_rows(Graph& g, int x) {
    const Shape& sx = g.shape(x);
    const auto [planes, H, W] = trailing2d(sx, "forward_diff_rows");
    if (H < 2) throw ShapeError("forward_diff_rows: need at least 2 rows");
    const auto& vx = g.value(x);
    std::vector<double> out(static_cast<size_t>(planes) * (H - 1) * W);
    for (int p = 0; p < planes; ++p) {
        const double* ip = &vx[static_cast<size_t>(p) * H * W];
        double* op = &out[static_cast<size_t>(p) * (H - 1) * W];
        for (int y = 0; y + 1 < H; ++y)
            for (int xx = 0; xx < W; ++xx)
                op[static_cast<size_t>(y) * W + xx] = ip[static_cast<size_t>(y + 1) * W + xx] - ip[static_cast<size_t>(y) * W + xx];
    }
    Shape so(sx.begin(), sx.end() - 2);
    so.push_back(H - 1);
    so.push_back(W);
    return g.make_node(so, std::move(out), {x}, [x, planes, H, W](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (int p = 0; p < planes; ++p) {
            const double* dp = &d[static_cast<size_t>(p) * (H - 1) * W];
            double* gp = &dx[static_cast<size_t>(p) * H * W];
            for (int y = 0; y + 1 < H; ++y)
                for (int xx = 0; xx < W; ++xx) {
                    const double dv = dp[static_cast<size_t>(y) * W + xx];
                    gp[static_cast<size_t>(y + 1) * W + xx] += dv;
                    gp[static_cast<size_t>(y) * W + xx] -= dv;
                }
        }
    });
}

int forward_diff_cols(Graph& g, int x) {
    const Shape& sx = g.shape(x);
    const auto [planes, H, W] = trailing2d(sx, "forward_diff_cols");
    if (W < 2) throw ShapeError("forward_diff_cols: need at least 2 columns");
    const auto& vx = g.value(x);
    std::vector<double> out(static_cast<size_t>(planes) * H * (W - 1));
    for (int p = 0; p < planes; ++p) {
        const double* ip = &vx[static_cast<size_t>(p) * H * W];
        double* op = &out[static_cast<size_t>(p) * H * (W - 1)];
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx + 1 < W; ++xx)
                op[static_cast<size_t>(y) * (W - 1) + xx] = ip[static_cast<size_t>(y) * W + xx + 1] - ip[static_cast<size_t>(y) * W + xx];
    }
    Shape so(sx.begin(), sx.end() - 2);
    so.push_back(H);
    so.push_back(W - 1);
    return g.make_node(so, std::move(out), {x}, [x, planes, H, W](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (int p = 0; p < planes; ++p) {
            const double* dp = &d[static_cast<size_t>(p) * H * (W - 1)];
            double* gp = &dx[static_cast<size_t>(p) * H * W];
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx + 1 < W; ++xx) {
                    const double dv = dp[static_cast<size_t>(y) * (W - 1) + xx];
                    gp[static_cast<size_t>(y) * W + xx + 1] += dv;
                    gp[static_cast<size_t>(y) * W + xx] -= dv;
                }
        }
    });
}

// ---- reductions / shape ----------------------------------------------------------

int mean_all(Graph& g, int x) {
    const auto& vx = g.value(x);
    double s = 0.0;
    for (double v : vx) s += v;
    const double inv = 1.0 / static_cast<double>(vx.size());
    return g.make_node({1}, {s * inv}, {x}, [x, inv](Graph& gg, int self) {
        const double d = gg.node(self).grad[0] * inv;
        auto& dx = gg.grad_ref(x);
        for (auto& v : dx) v += d;
    });
}

int global_mean_pool(Graph& g, int x) {
    const Shape& sx = g.shape(x);
    if (sx.size() != 4) throw ShapeError("global_mean_pool: need [B,C,H,W], got " + shape_str(sx));
    const int B = sx[0], C = sx[1], HW = sx[2] * sx[3];
    const auto& vx = g.value(x);
    std::vector<double> out(static_cast<size_t>(B) * C);
    const double inv = 1.0 / HW;
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const double* plane = &vx[(static_cast<size_t>(b) * C + c) * HW];
            double s = 0.0;
            for (int i = 0; i < HW; ++i) s += plane[i];
            out[static_cast<size_t>(b) * C + c] = s * inv;
        }
    return g.make_node({B, C}, std::move(out), {x}, [x, B, C, HW, inv](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
                const double dv = d[static_cast<size_t>(b) * C + c] * inv;
                double* plane = &dx[(static_cast<size_t>(b) * C + c) * HW];
                for (int i = 0; i < HW; ++i) plane[i] += dv;
            }
    });
}

int concat_channels(Graph& g, int a, int b) {
    const Shape& sa = g.shape(a);
    const Shape& sb = g.shape(b);
    if (sa.size() != 4 || sb.size() != 4 || sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3])
        throw ShapeError("concat_channels: shapes " + shape_str(sa) + " vs " + shape_str(sb));
    const int B = sa[0], Ca = sa[1], Cb = sb[1], HW = sa[2] * sa[3];
    const auto& va = g.value(a);
    const auto& vb = g.value(b);
    std::vector<double> out(static_cast<size_t>(B) * (Ca + Cb) * HW);
    for (int e = 0; e < B; ++e) {
        std::copy(&va[static_cast<size_t>(e) * Ca * HW], &va[static_cast<size_t>(e) * Ca * HW] + static_cast<size_t>(Ca) * HW,
                  &out[static_cast<size_t>(e) * (Ca + Cb) * HW]);
        std::copy(&vb[static_cast<size_t>(e) * Cb * HW], &vb[static_cast<size_t>(e) * Cb * HW] + static_cast<size_t>(Cb) * HW,
                  &out[static_cast<size_t>(e) * (Ca + Cb) * HW + static_cast<size_t>(Ca) * HW]);
    }
    return g.make_node({B, Ca + Cb, sa[2], sa[3]}, std::move(out), {a, b}, [a, b, B, Ca, Cb, HW](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        if (gg.node(a).requires_grad) {
            auto& da = gg.grad_ref(a);
            for (int e = 0; e < B; ++e)
                for (size_t i = 0; i < static_cast<size_t>(Ca) * HW; ++i)
                    da[static_cast<size_t>(e) * Ca * HW + i] += d[static_cast<size_t>(e) * (Ca + Cb) * HW + i];
        }
        if (gg.node(b).requires_grad) {
            auto& db = gg.grad_ref(b);
            for (int e = 0; e < B; ++e)
                for (size_t i = 0; i < static_cast<size_t>(Cb) * HW; ++i)
                    db[static_cast<size_t>(e) * Cb * HW + i] +=
                        d[static_cast<size_t>(e) * (Ca + Cb) * HW + static_cast<size_t>(Ca) * HW + i];
        }
    });
}

int reshape(Graph& g, int x, Shape shape) {
    if (numel(shape) != numel(g.shape(x)))
        throw ShapeError("reshape: " + shape_str(g.shape(x)) + " -> " + shape_str(shape) + " changes element count");
    std::vector<double> out = g.value(x);
    return g.make_node(std::move(shape), std::move(out), {x}, [x](Graph& gg, int self) {
        const auto& d = gg.node(self).grad;
        auto& dx = gg.grad_ref(x);
        for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
    });
}

// ---- physics couplings ---------------------------------------------------------------

int led_mix(Graph& g, int weights, const std::vector<Grid2D>& jacobians) {
    const Shape& sw = g.shape(weights);
    if (sw.size() != 1) throw ShapeError("led_mix: weights must be rank 1");
    if (jacobians.empty()) throw ShapeError("led_mix: no jacobians");
    const int L = sw[0];
    const int P = jacobians[0].rows;
    for (const auto& j : jacobians)
        if (j.cols != L || j.rows != P) throw ShapeError("led_mix: jacobian shape mismatch");
    const int B = static_cast<int>(jacobians.size());
    const auto& c = g.value(weights);
    std::vector<double> out(static_cast<size_t>(B) * P, 0.0);
    for (int b = 0; b < B; ++b)
        for (int p = 0; p < P; ++p) {
            const double* row = &jacobians[b].v[static_cast<size_t>(p) * L];
            double s = 0.0;
            for (int l = 0; l < L; ++l) s += row[l] * c[l];
            out[static_cast<size_t>(b) * P + p] = s;
        }
    return g.make_node({B, P}, std::move(out), {weights},
                       [weights, jac = jacobians, B, P, L](Graph& gg, int self) {
                           const auto& d = gg.node(self).grad;
                           auto& dc = gg.grad_ref(weights);
                           for (int b = 0; b < B; ++b)
                               for (int p = 0; p < P; ++p) {
                                   const double dv = d[static_cast<size_t>(b) * P + p];
                                   if (dv == 0.0) continue;
                                   const double* row = &jac[b].v[static_cast<size_t>(p) * L];
                                   for (int l = 0; l < L; ++l) dc[l] += dv * row[l];
                               }
                       });
}

int noise_straight_through(Graph& g, int x, double m, std::vector<double> draws) {
    const auto& vx = g.value(x);
    if (draws.size() != vx.size()) throw ShapeError("noise_straight_through: draw count mismatch");
    if (!(m > 0)) throw ConfigError("noise factor m must be positive");
    std::vector<double> out(vx.size());
    std::vector<double> local_grad(vx.size());
    for (size_t i = 0; i < vx.size(); ++i) {
        const double intensity = std::max(vx[i], 0.0);
        const double unclipped = std::isinf(m) ? intensity : intensity + draws[i] * std::sqrt(intensity / m);
        out[i] = unclipped > 0.0 ? unclipped : 0.0;
        local_grad[i] = channel::noise_gradient(intensity, m, draws[i], unclipped);
    }
    return g.make_node(g.shape(x), std::move(out), {x},
                       [x, local_grad = std::move(local_grad)](Graph& gg, int self) {
                           const auto& d = gg.node(self).grad;
                           auto& dx = gg.grad_ref(x);
                           for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i] * local_grad[i];
                       });
}

}  // namespace fpm::tensor
