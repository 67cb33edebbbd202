// fpm: single-shot coded-illumination microscopy simulator.
//
// Subcommands: synth-data, train, eval, mi, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include <CLI11.hpp>

#include "fpm/data.hpp"
#include "fpm/infotheory.hpp"
#include "fpm/presets.hpp"
#include "fpm/report.hpp"
#include "fpm/rundir.hpp"
#include "fpm/trainer.hpp"

namespace {

using namespace fpm;

struct SynthArgs {
    std::string dataset, preset, out;
    std::string mnist_train, mnist_test, input_dir;
    uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
    const auto cfg = presets::resolve(a.preset);
    const std::string preset_id = presets::is_builtin(a.preset) ? a.preset : "custom";

    data::ComplexDataset ds;
    if (a.dataset == "binary16") {
        ds = data::make_binary16(cfg, preset_id);
    } else if (a.dataset == "mnist") {
        if (a.mnist_train.empty() || a.mnist_test.empty())
            throw ConfigError("--dataset mnist needs --mnist-train and --mnist-test IDX paths");
        ds = data::ingest_mnist(a.mnist_train, a.mnist_test, cfg, preset_id);
    } else if (a.dataset == "image-dir") {
        if (a.input_dir.empty()) throw ConfigError("--dataset image-dir needs --input");
        ds = data::ingest_image_dir(a.input_dir, cfg, preset_id);
    } else {
        throw ConfigError("unknown dataset kind: " + a.dataset);
    }
    data::save_archive(ds, a.out);

    rundir::Manifest man;
    man.set("command", "synth-data");
    man.set("dataset", a.dataset);
    man.set("preset", preset_id);
    man.set_i64("seed", static_cast<int64_t>(a.seed));
    man.set_i64("objects", static_cast<int64_t>(ds.objects.size()));
    man.set_i64("train", static_cast<int64_t>(ds.indices(data::Split::train).size()));
    man.set_i64("val", static_cast<int64_t>(ds.indices(data::Split::val).size()));
    man.set_i64("test", static_cast<int64_t>(ds.indices(data::Split::test).size()));
    man.write(a.out + ".manifest");
    std::cout << "wrote " << ds.objects.size() << " objects to " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data, out;
    int case_id = 1;
    double m = 0.25;
    int64_t iters = 5000;
    int batch = 4;
    uint64_t seed = 0;
    bool no_dropout = false;
    int64_t train_limit = 0;
    int64_t snapshot_every = 100;
};

int cmd_train(const TrainArgs& a) {
    auto ds = data::load_archive(a.data);
    if (a.train_limit > 0) {
        // keep the first train_limit training objects, drop the rest of the
        // training split, leave val/test untouched
        int64_t kept = 0;
        for (auto& s : ds.splits) {
            if (s != data::Split::train) continue;
            if (kept < a.train_limit)
                ++kept;
            else
                s = data::Split::val;
        }
    }

    trainer::TrainOptions opts;
    opts.case_spec = trainer::CaseSpec::from_id(a.case_id);
    opts.noise = {a.m, a.seed};
    opts.schedule.iterations = a.iters;
    opts.schedule.batch_size = a.batch;
    opts.schedule.dropout_enabled = !a.no_dropout;
    opts.schedule.snapshot_every = a.snapshot_every;
    opts.seed = a.seed;
    opts.out_dir = a.out;

    rundir::ensure_dir(a.out);
    rundir::Manifest man;
    man.set("command", "train");
    man.set("data", a.data);
    man.set("preset", ds.preset_id);
    man.set_i64("case", a.case_id);
    man.set_f64("m", a.m);
    man.set_i64("iters", a.iters);
    man.set_i64("batch", a.batch);
    man.set_i64("seed", static_cast<int64_t>(a.seed));
    man.set("dropout", a.no_dropout ? "off" : "on");
    man.write(a.out + "/manifest.txt");

    const auto res = trainer::train(ds, opts);
    std::cout << "trained " << res.iterations_run << " iterations; checkpoint " << res.checkpoint_path << "\n";
    if (res.iterations_run > 0)
        std::cout << "final losses: M=" << res.last.M << " G=" << res.last.G << " C=" << res.last.C
                  << " J=" << res.last.J << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint, data, split = "test", out, m_sweep;
    double m = 0.25;
    int samples = 1;
    uint64_t seed = 0;
};

std::vector<int> split_indices(const data::ComplexDataset& ds, const std::string& split) {
    if (split == "all") return ds.all_indices();
    if (split == "train") return ds.indices(data::Split::train);
    if (split == "val") return ds.indices(data::Split::val);
    if (split == "test") {
        auto idx = ds.indices(data::Split::test);
        if (idx.empty()) idx = ds.all_indices();  // small toy sets have no held-out split
        return idx;
    }
    throw ConfigError("unknown split: " + split);
}

int cmd_eval(const EvalArgs& a) {
    auto model = trainer::load_checkpoint(a.checkpoint);
    const auto ds = data::load_archive(a.data);
    const auto idx = split_indices(ds, a.split);

    std::vector<double> ms;
    if (!a.m_sweep.empty()) {
        size_t pos = 0;
        while (pos < a.m_sweep.size()) {
            const auto comma = a.m_sweep.find(',', pos);
            ms.push_back(std::stod(a.m_sweep.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    } else {
        ms.push_back(a.m);
    }

    // one worker per noise level; draws are keyed per (image, repeat), so
    // the fan-out cannot change any result
    std::vector<std::future<trainer::EvalResult>> futures;
    for (double m : ms)
        futures.push_back(std::async(std::launch::async, [&, m] {
            return trainer::evaluate(model, ds, idx, trainer::EvalOptions{m, a.samples, a.seed});
        }));

    std::string csv = "m,mean_M,mean_G\n";
    for (size_t i = 0; i < ms.size(); ++i) {
        const auto r = futures[i].get();
        csv += rundir::f64_text(ms[i]) + "," + rundir::f64_text(r.mean_M) + "," + rundir::f64_text(r.mean_G) + "\n";
    }
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream f(a.out, std::ios::binary);
        if (!f) throw IoError("cannot write " + a.out);
        f << csv;
        std::cout << "wrote " << a.out << "\n";
    }
    return 0;
}

struct MiArgs {
    std::string checkpoint, pattern_file, data, out, snapshot = "final";
    double m = 1.0;
    int64_t samples = 1000000;
    uint64_t seed = 0;
};

int cmd_mi(const MiArgs& a) {
    const auto ds = data::load_archive(a.data);
    optics::LedPattern pattern;
    if (!a.checkpoint.empty()) {
        const auto model = trainer::load_checkpoint(a.checkpoint);
        pattern.weights = model.led_weights();
    } else if (!a.pattern_file.empty()) {
        std::ifstream in(a.pattern_file);
        if (!in) throw IoError("cannot open pattern file: " + a.pattern_file);
        double w;
        while (in >> w) pattern.weights.push_back(w);
        if (pattern.weights.empty()) throw ConfigError("pattern file has no weights: " + a.pattern_file);
    } else {
        throw ConfigError("mi needs --checkpoint or --pattern-file");
    }

    const auto est = infotheory::estimate_mi(ds, pattern, ds.config, {a.m, a.seed}, a.samples);
    const std::string row = a.snapshot + "," + rundir::f64_text(est.bits) + "," +
                            std::to_string(est.samples_per_object) + "," + std::to_string(est.bin_count) + "," +
                            rundir::f64_text(est.bin_width);
    if (a.out.empty()) {
        std::cout << infotheory::MiEstimate::csv_header() << "\n" << row << "\n";
    } else {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + a.out);
        f << infotheory::MiEstimate::csv_header() << "\n" << row << "\n";
        std::cout << "mi = " << est.bits << " bits (" << row << ")\n";
    }
    if (est.under_resolved)
        std::cerr << "warning: every object concentrates >1% of its mass in one bin; "
                     "consider more bins or more noise\n";
    return 0;
}

struct ReportArgs {
    std::string run_dir;
    int examples = 4;
};

int cmd_report(const ReportArgs& a) {
    if (!std::filesystem::is_directory(a.run_dir)) throw ConfigError("not a run directory: " + a.run_dir);
    report::render_run(a.run_dir, a.examples);
    std::cout << "rendered reports under " << a.run_dir << "/reports\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-shot coded-illumination microscopy: simulate, train, evaluate"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth-data", "build a complex-object dataset archive");
    synth->add_option("--dataset", sa.dataset, "mnist | binary16 | image-dir")->required();
    synth->add_option("--preset", sa.preset, "table1 | table2 | table3 | JSON file")->required();
    synth->add_option("--out", sa.out, "archive output path")->required();
    synth->add_option("--mnist-train", sa.mnist_train, "IDX train images");
    synth->add_option("--mnist-test", sa.mnist_test, "IDX test images");
    synth->add_option("--input", sa.input_dir, "image directory for image-dir");
    synth->add_option("--seed", sa.seed, "dataset seed");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "train one experiment case");
    tr->add_option("--data", ta.data, "dataset archive")->required();
    tr->add_option("--case", ta.case_id, "experiment case 1..4")->required()->check(CLI::Range(1, 4));
    tr->add_option("--m", ta.m, "noise factor m")->required();
    tr->add_option("--iters", ta.iters, "iterations (default 5000)");
    tr->add_option("--batch", ta.batch, "batch size (default 4)");
    tr->add_option("--seed", ta.seed, "run seed");
    tr->add_option("--out", ta.out, "run directory")->required();
    tr->add_flag("--no-dropout", ta.no_dropout, "disable dropout");
    tr->add_option("--train-limit", ta.train_limit, "cap the training split");
    tr->add_option("--snapshot-every", ta.snapshot_every, "LED snapshot cadence");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    ev->add_option("--checkpoint", ea.checkpoint, "model checkpoint")->required();
    ev->add_option("--data", ea.data, "dataset archive")->required();
    ev->add_option("--dataset-split", ea.split, "train | val | test | all");
    ev->add_option("--m", ea.m, "noise factor m");
    ev->add_option("--m-sweep", ea.m_sweep, "comma list of m values");
    ev->add_option("--samples", ea.samples, "noise repeats per image");
    ev->add_option("--seed", ea.seed, "evaluation seed");
    ev->add_option("--out", ea.out, "CSV output path (stdout when omitted)");

    MiArgs ma;
    auto* mi = app.add_subcommand("mi", "mutual information of object and measurement");
    mi->add_option("--checkpoint", ma.checkpoint, "take the LED pattern from this checkpoint");
    mi->add_option("--pattern-file", ma.pattern_file, "take the LED pattern from a text file");
    mi->add_option("--data", ma.data, "dataset archive")->required();
    mi->add_option("--m", ma.m, "noise factor m");
    mi->add_option("--samples", ma.samples, "samples per object (default 1000000)");
    mi->add_option("--seed", ma.seed, "sampling seed");
    mi->add_option("--out", ma.out, "mi_report.csv output path");
    mi->add_option("--snapshot", ma.snapshot, "snapshot label for the CSV row");

    ReportArgs ra;
    auto* rp = app.add_subcommand("report", "render review images for a finished run");
    rp->add_option("--run-dir", ra.run_dir, "training run directory")->required();
    rp->add_option("--examples", ra.examples, "test examples to render");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(sa);
        if (tr->parsed()) return cmd_train(ta);
        if (ev->parsed()) return cmd_eval(ea);
        if (mi->parsed()) return cmd_mi(ma);
        if (rp->parsed()) return cmd_report(ra);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 1;
    }
}
