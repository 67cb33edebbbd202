#pragma once

#include <functional>
#include <vector>

#include "fpm/core.hpp"
#include "fpm/rng.hpp"

namespace fpm::tensor {

using Shape = std::vector<int>;

int numel(const Shape& s);
std::string shape_str(const Shape& s);

/// One record on the tape: value, lazily allocated gradient, and the
/// vector-Jacobian product that scatters this node's gradient into its
/// inputs. Nodes are created in topological order by construction.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until backward touches it
    std::vector<int> inputs;
    std::function<void(class Graph&, int)> backward;  // (graph, self id)
    bool requires_grad = false;
};

/// Reverse-mode tape over dense double tensors. Build a fresh graph per
/// evaluation; parameters live outside and are injected as leaves.
class Graph {
public:
    int leaf(Shape shape, std::vector<double> value, bool requires_grad);
    int constant(Shape shape, std::vector<double> value) { return leaf(std::move(shape), std::move(value), false); }

    int make_node(Shape shape, std::vector<double> value, std::vector<int> inputs,
                  std::function<void(Graph&, int)> backward);

    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    const std::vector<double>& value(int id) const { return nodes_[id].value; }
    const Shape& shape(int id) const { return nodes_[id].shape; }

    /// Gradient of the last backward() root with respect to node id.
    /// Zero for nodes the root does not reach.
    const std::vector<double>& grad(int id) const;

    /// Accumulation target used by backward closures; allocates zeros on
    /// first touch.
    std::vector<double>& grad_ref(int id);

    /// Reverse sweep from a single-element root. Clears previous gradients.
    void backward(int root);

private:
    std::vector<Node> nodes_;
    mutable std::vector<double> zero_scratch_;
};

// ---- primitives ----------------------------------------------------------
// Every primitive checks shapes before computing and defines both the
// forward value and the vector-Jacobian product.

int add(Graph& g, int a, int b);
int sub(Graph& g, int a, int b);
int mul(Graph& g, int a, int b);
int scale(Graph& g, int a, double s);
int add_scalar(Graph& g, int a, double s);

/// [m,k] x [k,n] -> [m,n]
int matmul(Graph& g, int a, int b);

/// x[B,N] + bias[N]
int bias_add_rows(Graph& g, int x, int bias);
/// x[B,C,H,W] + bias[C]
int bias_add_channel(Graph& g, int x, int bias);

/// Stride-1 convolution with zero "same" padding.
/// x[B,C,H,W], w[OC,C,k,k] with odd k -> [B,OC,H,W]
int conv2d(Graph& g, int x, int w);

/// Maxout over adjacent channel pairs; ties route the gradient to the
/// lower-index channel. x[B,C,H,W] with even C -> [B,C/2,H,W]
int channel_max(Graph& g, int x);

/// Running statistics for one batch-norm layer, owned by the model.
struct BnStats {
    std::vector<double> mean;  // per channel
    std::vector<double> var;
    explicit BnStats(int channels = 0) : mean(channels, 0.0), var(channels, 1.0) {}
};

/// Batch normalization over (B,H,W) per channel. Training mode uses batch
/// statistics and, when update_running is set, folds them into stats with
/// the given momentum. Eval mode normalizes with the running statistics.
int batch_norm(Graph& g, int x, int gamma, int beta, BnStats& stats, bool training, bool update_running,
               double momentum = 0.99, double eps = 1e-5);

/// Inverted dropout: training scales kept activations by 1/(1-rate) so
/// eval mode is the identity.
int dropout(Graph& g, int x, double rate, rng::Stream& stream, bool training);

/// re^2 + im^2, elementwise over equal shapes.
int complex_modulus_squared(Graph& g, int re, int im);

/// Mean over k x k blocks of the trailing two dimensions.
int block_mean(Graph& g, int x, int k);

/// Nearest-neighbor expansion by k of the trailing two dimensions.
int upsample_nearest(Graph& g, int x, int k);

/// Unitary 2D FFT over a packed complex tensor [2,H,W] (re plane, im
/// plane). Linear, so the VJP is the opposite-direction transform.
int fft2(Graph& g, int x, bool inverse);

/// Forward differences along rows: out[i] = x[i+1] - x[i], trailing-2D.
int forward_diff_rows(Graph& g, int x);
int forward_diff_cols(Graph& g, int x);

/// Mean of all elements -> [1].
int mean_all(Graph& g, int x);

/// x[B,C,H,W] -> [B,C], spatial mean.
int global_mean_pool(Graph& g, int x);

/// [B,C1,H,W] ++ [B,C2,H,W] -> [B,C1+C2,H,W]
int concat_channels(Graph& g, int a, int b);

/// log(1 + e^x), numerically stable.
int softplus(Graph& g, int x);

/// Same data, new shape (numel must match).
int reshape(Graph& g, int x, Shape shape);

/// Weighted LED mix: weights[L] against per-batch-element constant
/// jacobians (each [P,L]) -> [B,P]. Linear in the weights.
int led_mix(Graph& g, int weights, const std::vector<Grid2D>& jacobians);

/// Noise layer with fixed draws and a straight-through derivative:
/// out = max(x + g*sqrt(x/m), 0); gradient 1 + g/(2*sqrt(x*m)) away from
/// the clip, masked to zero at clipped pixels. draws must match x's numel.
int noise_straight_through(Graph& g, int x, double m, std::vector<double> draws);

}  // namespace fpm::tensor
