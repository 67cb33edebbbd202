#include "fpm/network.hpp"

#include <algorithm>
#include <cmath>

namespace fpm::network {

void ConvNetSpec::validate() const {
    if (layer_channels.empty()) throw ConfigError("ConvNetSpec: no layers");
    for (int c : layer_channels)
        if (c <= 0 || c % 2 != 0) throw ConfigError("ConvNetSpec: channel counts must be positive and even");
    if (kernel <= 0 || kernel % 2 == 0) throw ConfigError("ConvNetSpec: kernel must be odd");
    if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("ConvNetSpec: dropout rate out of range");
    const int n = static_cast<int>(layer_channels.size());
    for (int l : dropout_layers)
        if (l < 0 || l >= n) throw ConfigError("ConvNetSpec: dropout layer index out of range");
    for (auto [from, to] : residual_links)
        if (from < 0 || to >= n || from >= to) throw ConfigError("ConvNetSpec: residual link must go forward");
}

void DiscriminatorSpec::validate() const {
    if (conv_channels.empty()) throw ConfigError("DiscriminatorSpec: no conv layers");
    for (int c : conv_channels)
        if (c <= 0 || c % 2 != 0) throw ConfigError("DiscriminatorSpec: channel counts must be positive and even");
    if (kernel <= 0 || kernel % 2 == 0) throw ConfigError("DiscriminatorSpec: kernel must be odd");
}

int ParamStore::add(std::string name, tensor::Shape shape, Group group, std::vector<double> init) {
    if (static_cast<int>(init.size()) != tensor::numel(shape))
        throw ShapeError("ParamStore: init size mismatch for " + name);
    if (find(name) >= 0) throw ConfigError("ParamStore: duplicate parameter " + name);
    Param p;
    p.name = std::move(name);
    p.shape = std::move(shape);
    p.group = group;
    p.value = init;
    p.grad.assign(init.size(), 0.0);
    p.adam_m.assign(init.size(), 0.0);
    p.adam_v.assign(init.size(), 0.0);
    p.ema = std::move(init);
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return static_cast<int>(i);
    return -1;
}

int64_t ParamStore::scalar_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += static_cast<int64_t>(p.value.size());
    return n;
}

std::vector<int> ParamStore::inject(tensor::Graph& g, const std::function<bool(const Param&)>& needs_grad,
                                    bool use_ema) const {
    std::vector<int> ids;
    ids.reserve(params_.size());
    for (const auto& p : params_) ids.push_back(g.leaf(p.shape, use_ema ? p.ema : p.value, needs_grad(p)));
    return ids;
}

void ParamStore::fetch_grads(tensor::Graph& g, const std::vector<int>& ids) {
    for (size_t i = 0; i < params_.size(); ++i) {
        const auto& src = g.grad(ids[i]);
        params_[i].grad.assign(src.begin(), src.end());
    }
}

std::vector<double> init_values(const tensor::Shape& shape, rng::Stream& stream, double sigma, double clip) {
    std::vector<double> v(tensor::numel(shape));
    for (auto& x : v) x = rng::truncated_normal(stream, sigma, clip);
    return v;
}

// ---- reconstructor ---------------------------------------------------------

Reconstructor::Reconstructor(const ConvNetSpec& spec, int lowres_side, int highres_side, ParamStore& store,
                             const std::string& prefix, rng::Stream& init_stream, double init_sigma,
                             double init_clip)
    : spec_(spec), prefix_(prefix) {
    spec_.validate();
    if (lowres_side <= 0 || highres_side <= 0 || highres_side % lowres_side != 0)
        throw ShapeError("Reconstructor: high-res side must be an integer multiple of low-res side");
    upsample_ = highres_side / lowres_side;

    const int n = static_cast<int>(spec_.layer_channels.size());
    int in_ch = 1;
    for (int i = 0; i < n; ++i) {
        const int out_ch = spec_.layer_channels[i];
        conv_w_.push_back(store.add(prefix_ + ".block" + std::to_string(i) + ".conv.w",
                                    {out_ch, in_ch, spec_.kernel, spec_.kernel}, Group::generator,
                                    init_values({out_ch, in_ch, spec_.kernel, spec_.kernel}, init_stream,
                                                init_sigma, init_clip)));
        // batch norm follows each conv, so scale starts at 1 and shift at 0
        bn_gamma_.push_back(store.add(prefix_ + ".block" + std::to_string(i) + ".bn.gamma", {out_ch},
                                      Group::generator, std::vector<double>(out_ch, 1.0)));
        bn_beta_.push_back(store.add(prefix_ + ".block" + std::to_string(i) + ".bn.beta", {out_ch},
                                     Group::generator, std::vector<double>(out_ch, 0.0)));
        bn_stats_.emplace_back(out_ch);
        in_ch = out_ch / 2;  // maxout halves
    }
    for (auto [from, to] : spec_.residual_links) {
        const int src_ch = spec_.layer_channels[from] / 2;
        const int dst_ch = spec_.layer_channels[to];
        skip_params_.emplace_back(
            store.add(prefix_ + ".skip" + std::to_string(from) + "-" + std::to_string(to) + ".w",
                      {dst_ch, src_ch, 1, 1}, Group::generator,
                      init_values({dst_ch, src_ch, 1, 1}, init_stream, init_sigma, init_clip)),
            to);
    }
    final_w_ = store.add(prefix_ + ".final.w", {1, in_ch, spec_.kernel, spec_.kernel}, Group::generator,
                         init_values({1, in_ch, spec_.kernel, spec_.kernel}, init_stream, init_sigma, init_clip));
    final_b_ = store.add(prefix_ + ".final.b", {1}, Group::generator,
                         init_values({1}, init_stream, init_sigma, init_clip));
}

int64_t Reconstructor::parameter_count(const ConvNetSpec& spec) {
    spec.validate();
    int64_t n = 0;
    int in_ch = 1;
    for (int out_ch : spec.layer_channels) {
        n += static_cast<int64_t>(out_ch) * in_ch * spec.kernel * spec.kernel;  // conv
        n += 2 * out_ch;                                                        // bn gamma, beta
        in_ch = out_ch / 2;
    }
    for (auto [from, to] : spec.residual_links) n += static_cast<int64_t>(spec.layer_channels[to]) * (spec.layer_channels[from] / 2);
    n += static_cast<int64_t>(in_ch) * spec.kernel * spec.kernel + 1;  // final conv + bias
    return n;
}

int Reconstructor::forward(tensor::Graph& g, int input, const std::vector<int>& param_ids, bool training,
                           bool commit_stats, rng::Stream* dropout_stream, bool dropout_enabled) {
    using namespace tensor;
    const auto& in_shape = g.shape(input);
    if (in_shape.size() != 4 || in_shape[1] != 1)
        throw ShapeError("Reconstructor: input must be [B,1,h,w], got " + shape_str(in_shape));

    int a = upsample_ > 1 ? upsample_nearest(g, input, upsample_) : input;
    const int n = static_cast<int>(spec_.layer_channels.size());
    std::vector<int> block_out(n, -1);

    for (int i = 0; i < n; ++i) {
        int h = conv2d(g, a, param_ids[conv_w_[i]]);
        for (size_t s = 0; s < skip_params_.size(); ++s) {
            if (skip_params_[s].second != i) continue;
            const int src_block = spec_.residual_links[s].first;
            h = add(g, h, conv2d(g, block_out[src_block], param_ids[skip_params_[s].first]));
        }
        h = batch_norm(g, h, param_ids[bn_gamma_[i]], param_ids[bn_beta_[i]], bn_stats_[i], training, commit_stats);
        h = channel_max(g, h);
        const bool wants_dropout =
            dropout_enabled && spec_.dropout_rate > 0 &&
            std::find(spec_.dropout_layers.begin(), spec_.dropout_layers.end(), i) != spec_.dropout_layers.end();
        if (wants_dropout && training) {
            if (!dropout_stream) throw ConfigError("Reconstructor: training with dropout needs a stream");
            h = dropout(g, h, spec_.dropout_rate, *dropout_stream, true);
        }
        block_out[i] = h;
        a = h;
    }
    return bias_add_channel(g, conv2d(g, a, param_ids[final_w_]), param_ids[final_b_]);
}

// ---- discriminator ----------------------------------------------------------

Discriminator::Discriminator(const DiscriminatorSpec& spec, ParamStore& store, const std::string& prefix,
                             rng::Stream& init_stream, double init_sigma, double init_clip)
    : spec_(spec) {
    spec_.validate();
    int in_ch = 2;
    for (size_t i = 0; i < spec_.conv_channels.size(); ++i) {
        const int out_ch = spec_.conv_channels[i];
        conv_w_.push_back(store.add(prefix + ".conv" + std::to_string(i) + ".w",
                                    {out_ch, in_ch, spec_.kernel, spec_.kernel}, Group::discriminator,
                                    init_values({out_ch, in_ch, spec_.kernel, spec_.kernel}, init_stream,
                                                init_sigma, init_clip)));
        conv_b_.push_back(store.add(prefix + ".conv" + std::to_string(i) + ".b", {out_ch}, Group::discriminator,
                                    init_values({out_ch}, init_stream, init_sigma, init_clip)));
        in_ch = out_ch / 2;
    }
    dense_w_ = store.add(prefix + ".dense.w", {in_ch, 1}, Group::discriminator,
                         init_values({in_ch, 1}, init_stream, init_sigma, init_clip));
    dense_b_ = store.add(prefix + ".dense.b", {1}, Group::discriminator,
                         init_values({1}, init_stream, init_sigma, init_clip));
}

int64_t Discriminator::parameter_count(const DiscriminatorSpec& spec) {
    spec.validate();
    int64_t n = 0;
    int in_ch = 2;
    for (int out_ch : spec.conv_channels) {
        n += static_cast<int64_t>(out_ch) * in_ch * spec.kernel * spec.kernel + out_ch;
        in_ch = out_ch / 2;
    }
    return n + in_ch + 1;
}

int Discriminator::forward(tensor::Graph& g, int input, const std::vector<int>& param_ids) const {
    using namespace tensor;
    const auto& in_shape = g.shape(input);
    if (in_shape.size() != 4 || in_shape[1] != 2)
        throw ShapeError("Discriminator: input must be [B,2,H,W], got " + shape_str(in_shape));

    int a = input;
    for (size_t i = 0; i < conv_w_.size(); ++i) {
        a = bias_add_channel(g, conv2d(g, a, param_ids[conv_w_[i]]), param_ids[conv_b_[i]]);
        a = channel_max(g, a);
    }
    const int pooled = global_mean_pool(g, a);  // [B, C]
    return bias_add_rows(g, matmul(g, pooled, param_ids[dense_w_]), param_ids[dense_b_]);
}

}  // namespace fpm::network
