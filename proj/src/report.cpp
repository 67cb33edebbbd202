#include "fpm/report.hpp"

#include <cmath>
#include <fstream>

#include "fpm/data.hpp"
#include "fpm/image_io.hpp"
#include "fpm/rundir.hpp"
#include "fpm/trainer.hpp"

namespace fpm::report {

Grid2D led_heatmap(const optics::OpticalConfig& cfg, const std::vector<double>& weights) {
    if (static_cast<int>(weights.size()) != cfg.active_led_count())
        throw ShapeError("led_heatmap: weight count does not match active LEDs");
    Grid2D img(cfg.led_grid, cfg.led_grid, 0.0);
    size_t w = 0;
    for (int r = 0; r < cfg.led_grid; ++r)
        for (int c = 0; c < cfg.led_grid; ++c)
            if (cfg.active_led_mask[static_cast<size_t>(r) * cfg.led_grid + c]) img.at(r, c) = weights[w++];
    return img;
}

namespace {

Grid2D amplitude(const ComplexField& f) {
    Grid2D a(f.rows(), f.cols());
    for (size_t i = 0; i < a.v.size(); ++i) a.v[i] = std::hypot(f.re.v[i], f.im.v[i]);
    return a;
}

Grid2D phase(const ComplexField& f) {
    Grid2D p(f.rows(), f.cols());
    for (size_t i = 0; i < p.v.size(); ++i) p.v[i] = std::atan2(f.im.v[i], f.re.v[i]);
    return p;
}

double grid_max(const Grid2D& g) {
    double m = 0.0;
    for (double v : g.v) m = std::max(m, v);
    return m;
}

// first LED snapshot row of led_pattern.csv (iteration 0)
std::vector<double> initial_pattern(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open " + csv_path);
    std::string header, row;
    std::getline(in, header);
    if (!std::getline(in, row)) throw IoError("no LED snapshots in " + csv_path);
    std::vector<double> w;
    size_t pos = row.find(',');  // skip the iteration column
    while (pos != std::string::npos) {
        const auto next = row.find(',', pos + 1);
        w.push_back(std::stod(row.substr(pos + 1, next - pos - 1)));
        pos = next;
    }
    return w;
}

}  // namespace

void render_run(const std::string& run_dir, int max_examples) {
    const auto manifest = rundir::Manifest::read(run_dir + "/manifest.txt");
    auto model = trainer::load_checkpoint(run_dir + "/checkpoints/final.ckpt");
    const auto dataset = data::load_archive(manifest.get("data"));
    const double m = std::stod(manifest.get("m"));
    const uint64_t seed = std::stoull(manifest.get("seed"));

    auto indices = dataset.indices(data::Split::test);
    if (indices.empty()) indices = dataset.all_indices();
    if (max_examples > 0 && static_cast<int>(indices.size()) > max_examples) indices.resize(max_examples);

    const std::string out_dir = run_dir + "/reports";
    rundir::ensure_dir(out_dir);

    const auto led_init = initial_pattern(run_dir + "/led_pattern.csv");
    const Grid2D led_before = led_heatmap(model.config, led_init);
    const Grid2D led_after = led_heatmap(model.config, model.led_weights());

    for (size_t i = 0; i < indices.size(); ++i) {
        const auto& object = dataset.objects[indices[i]];
        Grid2D low_clean, low_noisy;
        trainer::EvalOptions eo{m, 1, seed};
        const auto recon = trainer::reconstruct(model, object, eo, indices[i], &low_clean, &low_noisy);

        const std::string stem = out_dir + "/ex" + std::to_string(i);
        const Grid2D act_amp = amplitude(object), rec_amp = amplitude(recon);
        const double amp_hi = std::max({grid_max(act_amp), grid_max(rec_amp), 1e-12});
        image_io::write_pgm(stem + "_actual_amp.pgm", act_amp, 0.0, amp_hi);
        image_io::write_pgm(stem + "_recon_amp.pgm", rec_amp, 0.0, amp_hi);
        image_io::write_pgm(stem + "_actual_phase.pgm", phase(object), -M_PI, M_PI);
        image_io::write_pgm(stem + "_recon_phase.pgm", phase(recon), -M_PI, M_PI);
        image_io::write_pgm(stem + "_led_initial.pgm", led_before, 0.0, 1.0);
        image_io::write_pgm(stem + "_led_final.pgm", led_after, 0.0, 1.0);
        const double low_hi = std::max({grid_max(low_clean), grid_max(low_noisy), 1e-12});
        image_io::write_pgm(stem + "_lowres_clean.pgm", low_clean, 0.0, low_hi);
        image_io::write_pgm(stem + "_lowres_noisy.pgm", low_noisy, 0.0, low_hi);
    }
}

}  // namespace fpm::report
