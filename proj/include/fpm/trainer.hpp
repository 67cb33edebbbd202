#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "fpm/channel.hpp"
#include "fpm/data.hpp"
#include "fpm/network.hpp"
#include "fpm/objective.hpp"
#include "fpm/optics.hpp"

namespace fpm::trainer {

struct TrainSchedule {
    int64_t iterations = 100000;
    int batch_size = 4;
    double lr0 = 1e-2;
    double lr_decay = 0.99;       // staircase factor
    int64_t lr_decay_every = 1000;
    double init_sigma = 0.1;      // truncated normal, clipped at init_clip sigmas
    double init_clip = 2.0;
    double ema_decay = 0.999;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool dropout_enabled = true;
    int64_t snapshot_every = 100;  // led_pattern.csv cadence

    void validate() const;
    double lr_at(int64_t iteration) const;
};

enum class LedInit { uniform_one, seeded_uniform_random };

/// The four experiment configurations: fixed/trainable illumination crossed
/// with uniform/random initialization. Cases 3 and 4 share one random draw.
struct CaseSpec {
    int case_id = 1;
    LedInit led_init = LedInit::uniform_one;
    bool led_trainable = false;

    static CaseSpec from_id(int id);
};

struct AdamConfig {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// One Adam update with bias correction; t is the 1-based step count.
/// Throws NumericError naming `what` on a non-finite gradient.
void adam_step(std::vector<double>& value, const std::vector<double>& grad, std::vector<double>& moment1,
               std::vector<double>& moment2, int64_t t, double lr, const AdamConfig& cfg, const std::string& what);

/// Elementwise clamp to [0,1].
void project_led(std::vector<double>& weights);

/// Everything trainable plus the optics it was built against.
struct Model {
    network::ConvNetSpec net_spec;
    network::DiscriminatorSpec disc_spec;
    optics::OpticalConfig config;
    CaseSpec case_spec;
    uint64_t seed = 0;
    int64_t iteration = 0;

    network::ParamStore params;
    std::unique_ptr<network::Reconstructor> recon_re, recon_im;
    std::unique_ptr<network::Discriminator> disc;
    int led_param = -1;
    int64_t adam_t_gen = 0, adam_t_disc = 0, adam_t_led = 0;

    static Model build(const network::ConvNetSpec& net_spec, const network::DiscriminatorSpec& disc_spec,
                       const optics::OpticalConfig& config, const CaseSpec& case_spec,
                       const TrainSchedule& schedule, uint64_t seed);

    const std::vector<double>& led_weights() const { return params.at(led_param).value; }
    const std::vector<double>& led_weights_ema() const { return params.at(led_param).ema; }
    int64_t parameter_count() const { return params.scalar_count(); }
};

/// Mirror-pair residual links and middle-block dropout for an arbitrary
/// channel stack; the 8-layer default reproduces ConvNetSpec{}.
network::ConvNetSpec make_net_spec(const std::vector<int>& channels);

struct TrainOptions {
    CaseSpec case_spec;
    channel::NoiseSpec noise;  // noise.seed is ignored; the run seed rules
    TrainSchedule schedule;
    network::ConvNetSpec net_spec;
    network::DiscriminatorSpec disc_spec;
    uint64_t seed = 0;
    std::string out_dir;  // empty: train in memory, write nothing
    std::function<void(int64_t, const std::vector<double>&)> led_hook;  // per-iteration inspection
};

struct TrainResult {
    std::string checkpoint_path;
    int64_t iterations_run = 0;
    objective::LossReport last;
};

/// Runs the alternating discriminator/generator schedule on the dataset's
/// training split. Deterministic: (seed, options) fix every draw.
TrainResult train(const data::ComplexDataset& dataset, const TrainOptions& opts, Model* model_out = nullptr);

struct EvalOptions {
    double m = 1.0;
    int samples_per_image = 1;  // fresh noise draws per image
    uint64_t seed = 0;
};

struct EvalResult {
    double mean_M = 0.0;
    double mean_G = 0.0;
};

/// Evaluates with EMA parameters, batch-norm running statistics, and
/// dropout disabled; noise is drawn fresh per (image, repeat).
EvalResult evaluate(Model& model, const data::ComplexDataset& dataset, const std::vector<int>& indices,
                    const EvalOptions& opts);

/// Forward pass of one object through optics + noise + reconstruction in
/// eval mode; returns the predicted complex field (and optionally the clean
/// and noisy low-res images).
ComplexField reconstruct(Model& model, const ComplexField& object, const EvalOptions& opts, int image_index = 0,
                         Grid2D* lowres_clean = nullptr, Grid2D* lowres_noisy = nullptr);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace fpm::trainer
