#include "fpm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fpm/checkpoint.hpp"
#include "fpm/rundir.hpp"

namespace fpm::trainer {

using tensor::Graph;

void TrainSchedule::validate() const {
    if (iterations < 0 || batch_size <= 0) throw ConfigError("schedule: iterations/batch size invalid");
    if (lr0 <= 0 || lr_decay <= 0 || lr_decay >= 1 || lr_decay_every <= 0)
        throw ConfigError("schedule: learning-rate decay must lie in (0,1) with a positive period");
    if (init_sigma <= 0 || init_clip <= 0) throw ConfigError("schedule: init parameters must be positive");
    if (ema_decay <= 0 || ema_decay >= 1) throw ConfigError("schedule: ema decay must lie in (0,1)");
    if (snapshot_every <= 0) throw ConfigError("schedule: snapshot interval must be positive");
}

double TrainSchedule::lr_at(int64_t iteration) const {
    return lr0 * std::pow(lr_decay, static_cast<double>(iteration / lr_decay_every));
}

CaseSpec CaseSpec::from_id(int id) {
    switch (id) {
        case 1: return {1, LedInit::uniform_one, false};
        case 2: return {2, LedInit::uniform_one, true};
        case 3: return {3, LedInit::seeded_uniform_random, false};
        case 4: return {4, LedInit::seeded_uniform_random, true};
        default: throw ConfigError("case id must be 1..4, got " + std::to_string(id));
    }
}

void adam_step(std::vector<double>& value, const std::vector<double>& grad, std::vector<double>& moment1,
               std::vector<double>& moment2, int64_t t, double lr, const AdamConfig& cfg, const std::string& what) {
    if (value.size() != grad.size() || value.size() != moment1.size() || value.size() != moment2.size())
        throw ShapeError("adam_step: state size mismatch for " + what);
    if (t <= 0) throw ConfigError("adam_step: step count must be positive");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g))
            throw NumericError("adam_step: non-finite gradient in " + what + " at element " + std::to_string(i));
        moment1[i] = cfg.beta1 * moment1[i] + (1.0 - cfg.beta1) * g;
        moment2[i] = cfg.beta2 * moment2[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = moment1[i] / bc1;
        const double vhat = moment2[i] / bc2;
        value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

void project_led(std::vector<double>& weights) {
    for (double& w : weights) w = std::clamp(w, 0.0, 1.0);
}

network::ConvNetSpec make_net_spec(const std::vector<int>& channels) {
    network::ConvNetSpec spec;
    spec.layer_channels = channels;
    const int n = static_cast<int>(channels.size());
    spec.residual_links.clear();
    for (int i = 0; i + 1 < n - 1 - i; ++i) spec.residual_links.emplace_back(i, n - 1 - i);
    spec.dropout_layers.clear();
    if (n >= 6)
        for (int i = n / 2 - 2; i < n / 2 + 2; ++i) spec.dropout_layers.push_back(i);
    spec.validate();
    return spec;
}

Model Model::build(const network::ConvNetSpec& net_spec, const network::DiscriminatorSpec& disc_spec,
                   const optics::OpticalConfig& config, const CaseSpec& case_spec, const TrainSchedule& schedule,
                   uint64_t seed) {
    config.validate();
    schedule.validate();
    Model m;
    m.net_spec = net_spec;
    m.disc_spec = disc_spec;
    m.config = config;
    m.case_spec = case_spec;
    m.seed = seed;

    rng::Stream init(seed, rng::stream_id(rng::Purpose::param_init));
    const int low = config.lowres_pixels();
    const int high = config.highres_pixels;
    m.recon_re = std::make_unique<network::Reconstructor>(net_spec, low, high, m.params, "recon_re", init,
                                                          schedule.init_sigma, schedule.init_clip);
    m.recon_im = std::make_unique<network::Reconstructor>(net_spec, low, high, m.params, "recon_im", init,
                                                          schedule.init_sigma, schedule.init_clip);
    m.disc = std::make_unique<network::Discriminator>(disc_spec, m.params, "disc", init, schedule.init_sigma,
                                                      schedule.init_clip);

    const int leds = config.active_led_count();
    std::vector<double> c(leds, 1.0);
    if (case_spec.led_init == LedInit::seeded_uniform_random) {
        rng::Stream ls(seed, rng::stream_id(rng::Purpose::led_init));
        for (auto& w : c) w = ls.uniform();
    }
    m.led_param = m.params.add("led.weights", {leds}, network::Group::led, c);
    return m;
}

namespace {

// Per-object jacobians are reused every time the object appears in a batch;
// caching is capped so huge datasets do not exhaust memory.
class JacobianCache {
public:
    JacobianCache(const data::ComplexDataset& ds, const optics::OpticalConfig& cfg) : ds_(ds), cfg_(cfg) {}

    const Grid2D& get(int index) {
        auto it = cache_.find(index);
        if (it != cache_.end()) return it->second;
        Grid2D jac = optics::pattern_jacobian(ds_.objects[index], cfg_);
        if (cache_.size() >= kMaxEntries) cache_.clear();
        return cache_.emplace(index, std::move(jac)).first->second;
    }

private:
    static constexpr size_t kMaxEntries = 4096;
    const data::ComplexDataset& ds_;
    const optics::OpticalConfig& cfg_;
    std::unordered_map<int, Grid2D> cache_;
};

struct BatchConstants {
    std::vector<Grid2D> jacobians;
    std::vector<double> act_re, act_im;  // [B,1,H,W] flat
};

BatchConstants gather_batch(const data::ComplexDataset& ds, const std::vector<int>& batch, JacobianCache& jac) {
    BatchConstants bc;
    for (int idx : batch) {
        bc.jacobians.push_back(jac.get(idx));
        const auto& o = ds.objects[idx];
        bc.act_re.insert(bc.act_re.end(), o.re.v.begin(), o.re.v.end());
        bc.act_im.insert(bc.act_im.end(), o.im.v.begin(), o.im.v.end());
    }
    return bc;
}

std::vector<double> noise_draws(uint64_t seed, int64_t iteration, int phase, size_t count) {
    rng::Stream s(seed, rng::stream_id(rng::Purpose::train_noise, static_cast<uint64_t>(iteration),
                                       static_cast<uint64_t>(phase)));
    std::vector<double> g(count);
    for (auto& v : g) v = s.normal();
    return g;
}

struct ForwardNodes {
    int pred_re = -1, pred_im = -1;
    int act_re = -1, act_im = -1;
};

// optics -> noise -> both reconstruction branches, training mode
ForwardNodes forward_training(Graph& g, Model& model, const BatchConstants& bc, const std::vector<int>& ids,
                              double m, uint64_t seed, int64_t iteration, int phase, bool commit_stats,
                              bool dropout_enabled) {
    using namespace tensor;
    const int B = static_cast<int>(bc.jacobians.size());
    const int low = model.config.lowres_pixels();
    const int high = model.config.highres_pixels;

    const int ylow = led_mix(g, ids[model.led_param], bc.jacobians);
    const int noisy = noise_straight_through(
        g, ylow, m, noise_draws(seed, iteration, phase, static_cast<size_t>(B) * low * low));
    const int img = reshape(g, noisy, {B, 1, low, low});

    rng::Stream drop_re(seed, rng::stream_id(rng::Purpose::dropout, static_cast<uint64_t>(iteration),
                                             static_cast<uint64_t>(phase) * 2));
    rng::Stream drop_im(seed, rng::stream_id(rng::Purpose::dropout, static_cast<uint64_t>(iteration),
                                             static_cast<uint64_t>(phase) * 2 + 1));
    ForwardNodes out;
    out.pred_re = model.recon_re->forward(g, img, ids, true, commit_stats, &drop_re, dropout_enabled);
    out.pred_im = model.recon_im->forward(g, img, ids, true, commit_stats, &drop_im, dropout_enabled);
    out.act_re = g.constant({B, 1, high, high}, bc.act_re);
    out.act_im = g.constant({B, 1, high, high}, bc.act_im);
    return out;
}

}  // namespace

TrainResult train(const data::ComplexDataset& dataset, const TrainOptions& opts, Model* model_out) {
    dataset.check();
    opts.schedule.validate();
    opts.noise.validate();
    const auto train_idx = [&] {
        auto idx = dataset.indices(data::Split::train);
        if (idx.empty()) idx = dataset.all_indices();
        return idx;
    }();
    if (train_idx.empty()) throw ConfigError("train: dataset has no training objects");

    Model local = Model::build(opts.net_spec, opts.disc_spec, dataset.config, opts.case_spec, opts.schedule,
                               opts.seed);
    if (model_out) *model_out = std::move(local);
    Model& model = model_out ? *model_out : local;

    const AdamConfig adam{opts.schedule.adam_beta1, opts.schedule.adam_beta2, opts.schedule.adam_eps};
    const double m_noise = opts.noise.m;
    JacobianCache jac(dataset, model.config);

    const bool write_artifacts = !opts.out_dir.empty();
    std::optional<rundir::CsvWriter> losses;
    std::optional<rundir::CsvWriter> led_csv;
    std::string ckpt_path;
    if (write_artifacts) {
        rundir::ensure_dir(opts.out_dir);
        rundir::ensure_dir(opts.out_dir + "/checkpoints");
        losses.emplace(opts.out_dir + "/losses.csv", objective::LossReport::csv_header());
        led_csv.emplace(opts.out_dir + "/led_pattern.csv",
                        rundir::led_pattern_csv_header(static_cast<int>(model.led_weights().size())));
        led_csv->row(rundir::led_pattern_csv_row(0, model.led_weights()));
        ckpt_path = opts.out_dir + "/checkpoints/final.ckpt";
    }

    auto is_gen = [](const network::Param& p) { return p.group == network::Group::generator; };
    auto is_disc = [](const network::Param& p) { return p.group == network::Group::discriminator; };
    auto is_led = [](const network::Param& p) { return p.group == network::Group::led; };

    auto save_state = [&] {
        if (write_artifacts) {
            save_checkpoint(model, ckpt_path);
            losses->flush();
            led_csv->flush();
        }
    };

    objective::LossReport report;
    for (int64_t it = 0; it < opts.schedule.iterations; ++it) {
        const double lr = opts.schedule.lr_at(it);

        // batch (with replacement, seeded)
        rng::Stream bs(opts.seed, rng::stream_id(rng::Purpose::batch_sample, static_cast<uint64_t>(it)));
        std::vector<int> batch(opts.schedule.batch_size);
        for (auto& b : batch) b = train_idx[bs.uniform_index(train_idx.size())];
        const auto bc = gather_batch(dataset, batch, jac);

        // (a) discriminator step on fresh generator output
        {
            Graph g;
            const auto ids = model.params.inject(g, is_disc);
            const auto f = forward_training(g, model, bc, ids, m_noise, opts.seed, it, 0, false,
                                            opts.schedule.dropout_enabled);
            const int fake = model.disc->forward(g, tensor::concat_channels(g, f.pred_re, f.pred_im), ids);
            const int real = model.disc->forward(g, tensor::concat_channels(g, f.act_re, f.act_im), ids);
            const int loss_d = objective::loss_D_node(g, fake, real);
            if (!std::isfinite(g.value(loss_d)[0])) {
                save_state();
                throw NumericError("training diverged (discriminator loss) at iteration " + std::to_string(it));
            }
            g.backward(loss_d);
            model.params.fetch_grads(g, ids);
            ++model.adam_t_disc;
            for (int i = 0; i < model.params.count(); ++i) {
                auto& p = model.params.at(i);
                if (p.group != network::Group::discriminator) continue;
                adam_step(p.value, p.grad, p.adam_m, p.adam_v, model.adam_t_disc, lr, adam, p.name);
            }
        }

        // (b) generator + illumination step against the updated critic
        {
            Graph g;
            const auto ids = model.params.inject(
                g, [&](const network::Param& p) { return is_gen(p) || (opts.case_spec.led_trainable && is_led(p)); });
            const auto f = forward_training(g, model, bc, ids, m_noise, opts.seed, it, 1, true,
                                            opts.schedule.dropout_enabled);
            const int m_node = objective::loss_M_node(g, f.pred_re, f.pred_im, f.act_re, f.act_im);
            const int g_node = objective::loss_G_node(g, f.pred_re, f.pred_im, f.act_re, f.act_im);
            const int fake = model.disc->forward(g, tensor::concat_channels(g, f.pred_re, f.pred_im), ids);
            const int c_node = objective::loss_C_node(g, fake);
            const int j_node = objective::loss_J_node(g, m_node, g_node, c_node);

            report.iteration = it;
            report.M = g.value(m_node)[0];
            report.G = g.value(g_node)[0];
            report.C = g.value(c_node)[0];
            report.J = g.value(j_node)[0];
            if (!std::isfinite(report.J)) {
                save_state();
                throw NumericError("training diverged (J non-finite) at iteration " + std::to_string(it));
            }

            g.backward(j_node);
            model.params.fetch_grads(g, ids);
            ++model.adam_t_gen;
            for (int i = 0; i < model.params.count(); ++i) {
                auto& p = model.params.at(i);
                if (p.group == network::Group::generator)
                    adam_step(p.value, p.grad, p.adam_m, p.adam_v, model.adam_t_gen, lr, adam, p.name);
            }
            if (opts.case_spec.led_trainable) {
                ++model.adam_t_led;
                auto& p = model.params.at(model.led_param);
                adam_step(p.value, p.grad, p.adam_m, p.adam_v, model.adam_t_led, lr, adam, p.name);
                project_led(p.value);
            }
        }

        // EMA of every parameter, then bookkeeping
        const double d = opts.schedule.ema_decay;
        for (int i = 0; i < model.params.count(); ++i) {
            auto& p = model.params.at(i);
            for (size_t k = 0; k < p.value.size(); ++k) p.ema[k] = d * p.ema[k] + (1.0 - d) * p.value[k];
        }
        model.iteration = it + 1;

        if (losses) losses->row(report.csv_row());
        if (led_csv && ((it + 1) % opts.schedule.snapshot_every == 0 || it + 1 == opts.schedule.iterations))
            led_csv->row(rundir::led_pattern_csv_row(it + 1, model.led_weights()));
        if (opts.led_hook) opts.led_hook(it, model.led_weights());
    }

    save_state();
    TrainResult res;
    res.checkpoint_path = ckpt_path;
    res.iterations_run = opts.schedule.iterations;
    res.last = report;
    return res;
}

// ---- evaluation ---------------------------------------------------------------

ComplexField reconstruct(Model& model, const ComplexField& object, const EvalOptions& opts, int image_index,
                         Grid2D* lowres_clean, Grid2D* lowres_noisy) {
    using namespace tensor;
    const int low = model.config.lowres_pixels();
    const int high = model.config.highres_pixels;

    const Grid2D jac = optics::pattern_jacobian(object, model.config);
    optics::LedPattern pattern;
    pattern.weights = model.led_weights_ema();
    Grid2D clean(low, low);
    for (int p = 0; p < low * low; ++p) {
        double s = 0.0;
        for (int l = 0; l < jac.cols; ++l) s += jac.at(p, l) * pattern.weights[l];
        clean.v[p] = s;
    }

    rng::Stream noise_stream(opts.seed, rng::stream_id(rng::Purpose::eval_noise,
                                                       static_cast<uint64_t>(image_index)));
    const Grid2D noisy = channel::apply_noise(clean, {opts.m, opts.seed}, noise_stream);
    if (lowres_clean) *lowres_clean = clean;
    if (lowres_noisy) *lowres_noisy = noisy;

    Graph g;
    const auto ids = model.params.inject(g, [](const network::Param&) { return false; }, true);
    const int img = g.constant({1, 1, low, low}, noisy.v);
    const int pre = model.recon_re->forward(g, img, ids, false, false, nullptr);
    const int pim = model.recon_im->forward(g, img, ids, false, false, nullptr);

    ComplexField out(high, high, model.config.highres_pitch());
    out.re.v.assign(g.value(pre).begin(), g.value(pre).end());
    out.im.v.assign(g.value(pim).begin(), g.value(pim).end());
    return out;
}

EvalResult evaluate(Model& model, const data::ComplexDataset& dataset, const std::vector<int>& indices,
                    const EvalOptions& opts) {
    dataset.check();
    if (indices.empty()) throw ConfigError("evaluate: no images selected");
    if (dataset.config.highres_pixels != model.config.highres_pixels)
        throw ShapeError("evaluate: checkpoint and dataset field sizes differ");

    double sum_m = 0.0, sum_g = 0.0;
    int64_t n = 0;
    for (int idx : indices) {
        for (int s = 0; s < opts.samples_per_image; ++s) {
            const int stream_index = idx * opts.samples_per_image + s;
            const auto pred = reconstruct(model, dataset.objects[idx], opts, stream_index);
            sum_m += objective::loss_M(pred, dataset.objects[idx]);
            sum_g += objective::loss_G(pred, dataset.objects[idx]);
            ++n;
        }
    }
    return {sum_m / n, sum_g / n};
}

// ---- checkpoints ----------------------------------------------------------------

namespace {

std::string ints_csv(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> parse_ints_csv(const std::string& s) {
    std::vector<int> out;
    size_t pos = 0;
    while (pos < s.size()) {
        const auto comma = s.find(',', pos);
        out.push_back(std::stoi(s.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string links_csv(const std::vector<std::pair<int, int>>& links) {
    std::string s;
    for (size_t i = 0; i < links.size(); ++i)
        s += (i ? "," : "") + std::to_string(links[i].first) + "-" + std::to_string(links[i].second);
    return s;
}

std::vector<std::pair<int, int>> parse_links_csv(const std::string& s) {
    std::vector<std::pair<int, int>> out;
    size_t pos = 0;
    while (pos < s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto dash = item.find('-');
        out.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    checkpoint::Writer w;
    w.set("kind", "fpm-checkpoint");
    w.set_i64("iteration", model.iteration);
    w.set_i64("seed", static_cast<int64_t>(model.seed));
    w.set_i64("case_id", model.case_spec.case_id);
    w.set_i64("led_trainable", model.case_spec.led_trainable ? 1 : 0);
    w.set_i64("led_init_random", model.case_spec.led_init == LedInit::seeded_uniform_random ? 1 : 0);
    w.set_i64("adam_t_gen", model.adam_t_gen);
    w.set_i64("adam_t_disc", model.adam_t_disc);
    w.set_i64("adam_t_led", model.adam_t_led);
    w.set_i64("param_count", model.params.scalar_count());

    w.set("net.channels", ints_csv(model.net_spec.layer_channels));
    w.set_i64("net.kernel", model.net_spec.kernel);
    w.set("net.dropout_layers", ints_csv(model.net_spec.dropout_layers));
    w.set_f64("net.dropout_rate", model.net_spec.dropout_rate);
    w.set("net.residual_links", links_csv(model.net_spec.residual_links));
    w.set("disc.channels", ints_csv(model.disc_spec.conv_channels));
    w.set_i64("disc.kernel", model.disc_spec.kernel);

    const auto& cfg = model.config;
    w.set_f64("optics.wavelength_m", cfg.wavelength);
    w.set_f64("optics.objective_na", cfg.objective_na);
    w.set_f64("optics.magnification", cfg.magnification);
    w.set_f64("optics.sensor_pixel_m", cfg.sensor_pixel);
    w.set_f64("optics.object_extent_m", cfg.object_extent);
    w.set_i64("optics.highres_pixels", cfg.highres_pixels);
    w.set_f64("optics.led_pitch_m", cfg.led_pitch);
    w.set_i64("optics.led_grid", cfg.led_grid);
    w.set_f64("optics.led_height_m", cfg.led_height);
    std::string mask;
    for (bool b : cfg.active_led_mask) mask += b ? '1' : '0';
    w.set("optics.active_led_mask", mask);

    for (int i = 0; i < model.params.count(); ++i) {
        const auto& p = model.params.at(i);
        w.add_array("v:" + p.name, p.value);
        w.add_array("ema:" + p.name, p.ema);
        w.add_array("am:" + p.name, p.adam_m);
        w.add_array("av:" + p.name, p.adam_v);
    }
    auto add_bn = [&w](const network::Reconstructor& r) {
        for (size_t i = 0; i < r.bn_stats().size(); ++i) {
            w.add_array("bn:" + r.prefix() + "." + std::to_string(i) + ".mean", r.bn_stats()[i].mean);
            w.add_array("bn:" + r.prefix() + "." + std::to_string(i) + ".var", r.bn_stats()[i].var);
        }
    };
    add_bn(*model.recon_re);
    add_bn(*model.recon_im);
    w.write(path);
}

Model load_checkpoint(const std::string& path) {
    checkpoint::Reader r(path);
    if (r.get("kind") != "fpm-checkpoint") throw IoError("not a checkpoint: " + path);

    network::ConvNetSpec net;
    net.layer_channels = parse_ints_csv(r.get("net.channels"));
    net.kernel = static_cast<int>(r.get_i64("net.kernel"));
    net.dropout_layers = parse_ints_csv(r.get("net.dropout_layers"));
    net.dropout_rate = r.get_f64("net.dropout_rate");
    net.residual_links = parse_links_csv(r.get("net.residual_links"));

    network::DiscriminatorSpec disc;
    disc.conv_channels = parse_ints_csv(r.get("disc.channels"));
    disc.kernel = static_cast<int>(r.get_i64("disc.kernel"));

    optics::OpticalConfig cfg;
    cfg.wavelength = r.get_f64("optics.wavelength_m");
    cfg.objective_na = r.get_f64("optics.objective_na");
    cfg.magnification = r.get_f64("optics.magnification");
    cfg.sensor_pixel = r.get_f64("optics.sensor_pixel_m");
    cfg.object_extent = r.get_f64("optics.object_extent_m");
    cfg.highres_pixels = static_cast<int>(r.get_i64("optics.highres_pixels"));
    cfg.led_pitch = r.get_f64("optics.led_pitch_m");
    cfg.led_grid = static_cast<int>(r.get_i64("optics.led_grid"));
    cfg.led_height = r.get_f64("optics.led_height_m");
    for (char c : r.get("optics.active_led_mask")) cfg.active_led_mask.push_back(c == '1');

    CaseSpec cs;
    cs.case_id = static_cast<int>(r.get_i64("case_id"));
    cs.led_trainable = r.get_i64("led_trainable") != 0;
    cs.led_init = r.get_i64("led_init_random") ? LedInit::seeded_uniform_random : LedInit::uniform_one;

    Model m = Model::build(net, disc, cfg, cs, TrainSchedule{}, static_cast<uint64_t>(r.get_i64("seed")));
    m.iteration = r.get_i64("iteration");
    m.adam_t_gen = r.get_i64("adam_t_gen");
    m.adam_t_disc = r.get_i64("adam_t_disc");
    m.adam_t_led = r.get_i64("adam_t_led");

    if (r.get_i64("param_count") != m.params.scalar_count())
        throw IoError("checkpoint " + path + ": parameter count does not match its spec");

    for (int i = 0; i < m.params.count(); ++i) {
        auto& p = m.params.at(i);
        p.value = r.array("v:" + p.name);
        p.ema = r.array("ema:" + p.name);
        p.adam_m = r.array("am:" + p.name);
        p.adam_v = r.array("av:" + p.name);
        if (p.value.size() != static_cast<size_t>(tensor::numel(p.shape)))
            throw IoError("checkpoint " + path + ": array size mismatch for " + p.name);
    }
    auto load_bn = [&r, &path](network::Reconstructor& rec) {
        for (size_t i = 0; i < rec.bn_stats().size(); ++i) {
            rec.bn_stats()[i].mean = r.array("bn:" + rec.prefix() + "." + std::to_string(i) + ".mean");
            rec.bn_stats()[i].var = r.array("bn:" + rec.prefix() + "." + std::to_string(i) + ".var");
            if (rec.bn_stats()[i].mean.size() != rec.bn_stats()[i].var.size())
                throw IoError("checkpoint " + path + ": batch-norm stats mismatch");
        }
    };
    load_bn(*m.recon_re);
    load_bn(*m.recon_im);
    return m;
}

}  // namespace fpm::trainer
