#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fpm/rng.hpp"
#include "fpm/tensor.hpp"

namespace fpm::network {

/// Reconstruction network layout: one conv block per entry of
/// layer_channels, each block = conv -> batch norm -> maxout over channel
/// pairs, with skip links and dropout on the listed blocks.
struct ConvNetSpec {
    std::vector<int> layer_channels = {10, 20, 30, 40, 50, 60, 70, 80};
    int kernel = 3;
    std::vector<int> dropout_layers = {2, 3, 4, 5};  // middle blocks, 0-based
    double dropout_rate = 0.20;
    // (from, to): block `from` output feeds block `to`'s conv output through
    // a 1x1 projection, encoder-to-decoder mirror pairs by default.
    std::vector<std::pair<int, int>> residual_links = {{0, 7}, {1, 6}, {2, 5}};

    void validate() const;
};

struct DiscriminatorSpec {
    std::vector<int> conv_channels = {8, 16};
    int kernel = 3;

    void validate() const;
};

enum class Group { generator, discriminator, led };

struct Param {
    std::string name;
    tensor::Shape shape;
    Group group;
    std::vector<double> value;
    std::vector<double> grad;    // filled by fetch_grads
    std::vector<double> adam_m;  // optimizer moments
    std::vector<double> adam_v;
    std::vector<double> ema;
};

/// Owns every trainable tensor of a model. Parameters are created in a
/// fixed deterministic order, which also fixes checkpoint array order.
class ParamStore {
public:
    int add(std::string name, tensor::Shape shape, Group group, std::vector<double> init);

    Param& at(int i) { return params_[i]; }
    const Param& at(int i) const { return params_[i]; }
    int count() const { return static_cast<int>(params_.size()); }
    int find(const std::string& name) const;  // -1 when absent
    int64_t scalar_count() const;

    /// Injects every parameter as a graph leaf; needs_grad selects which
    /// groups participate in this pass, use_ema swaps in the averaged
    /// copies. Returns node ids by param index.
    std::vector<int> inject(tensor::Graph& g, const std::function<bool(const Param&)>& needs_grad,
                            bool use_ema = false) const;

    /// Copies gradients back from the graph (zero for unreached params).
    void fetch_grads(tensor::Graph& g, const std::vector<int>& ids);

private:
    std::vector<Param> params_;
};

/// Truncated-normal initializer shared by all model builders.
std::vector<double> init_values(const tensor::Shape& shape, rng::Stream& stream, double sigma, double clip);

/// Low-res intensity to one real-valued high-res image. Two independent
/// instances cover the real and imaginary branches.
class Reconstructor {
public:
    Reconstructor(const ConvNetSpec& spec, int lowres_side, int highres_side, ParamStore& store,
                  const std::string& prefix, rng::Stream& init_stream, double init_sigma, double init_clip);

    /// input: [B,1,lowres,lowres]. Returns [B,1,highres,highres].
    /// During training, dropout draws come from dropout_stream and batch
    /// statistics are committed to the running averages only when
    /// commit_stats is set.
    int forward(tensor::Graph& g, int input, const std::vector<int>& param_ids, bool training, bool commit_stats,
                rng::Stream* dropout_stream, bool dropout_enabled = true);

    const ConvNetSpec& spec() const { return spec_; }
    int upsample_factor() const { return upsample_; }
    std::vector<tensor::BnStats>& bn_stats() { return bn_stats_; }
    const std::vector<tensor::BnStats>& bn_stats() const { return bn_stats_; }
    const std::string& prefix() const { return prefix_; }

    /// Number of scalar parameters implied by a spec, before construction.
    static int64_t parameter_count(const ConvNetSpec& spec);

private:
    ConvNetSpec spec_;
    std::string prefix_;
    int upsample_ = 1;
    std::vector<int> conv_w_, bn_gamma_, bn_beta_;  // param indices per block
    std::vector<std::pair<int, int>> skip_params_;  // aligned with residual_links
    int final_w_ = -1, final_b_ = -1;
    std::vector<tensor::BnStats> bn_stats_;
};

/// Two-channel complex field to a single real logit per batch element.
class Discriminator {
public:
    Discriminator(const DiscriminatorSpec& spec, ParamStore& store, const std::string& prefix,
                  rng::Stream& init_stream, double init_sigma, double init_clip);

    /// input: [B,2,H,W]. Returns [B,1] logits.
    int forward(tensor::Graph& g, int input, const std::vector<int>& param_ids) const;

    static int64_t parameter_count(const DiscriminatorSpec& spec);

private:
    DiscriminatorSpec spec_;
    std::vector<int> conv_w_, conv_b_;
    int dense_w_ = -1, dense_b_ = -1;
};

}  // namespace fpm::network
