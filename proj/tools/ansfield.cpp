// ansfield: dataset generation, training, sampling, evaluation and raster inspection.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ansfield/checkpoint.hpp"
#include "ansfield/errors.hpp"
#include "ansfield/harness.hpp"

using namespace ansfield;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json_file(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw FormatError("cannot read " + p.string());
    return nlohmann::json::parse(f);
}

void write_file(const fs::path& p, const std::string& text) {
    if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw FormatError("cannot write " + p.string());
    f << text;
}

struct Common {
    std::string config_path;
    std::string out;
    std::string ablation;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

HarnessConfig load_config(const Common& c) {
    HarnessConfig cfg = c.config_path.empty() ? HarnessConfig{} : harness_config_from_json(read_json_file(c.config_path));
    if (c.seed_set) cfg.seed = c.seed;
    if (!c.ablation.empty()) apply_ablation(cfg, c.ablation);
    return cfg;
}

int cmd_gen(const Common& c) {
    const HarnessConfig cfg = load_config(c);
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = generate_dataset(cfg);
    save_dataset(ds, c.out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "wrote " << ds.scenes.size() << " scenes, " << ds.question_count("train") << " train / "
              << ds.question_count("test") << " test questions to " << c.out << " (config " << config_hash(cfg)
              << ", " << secs << " s)\n";
    return 0;
}

int cmd_train(const Common& c, const std::string& data, int steps) {
    const Dataset ds = load_dataset(data);
    DiffusionConfig dc = ds.config.diffusion;
    if (!c.config_path.empty()) {
        const auto j = read_json_file(c.config_path);
        dc = diffusion_config_from_json(j.contains("diffusion") ? j.at("diffusion") : j);
    }
    if (c.seed_set) dc.seed = c.seed;
    if (steps >= 0) {
        dc.steps = steps;
        dc.epochs = 0;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = train_model(ds, dc, [&](int step, int total, double loss) {
        if (step % 100 == 0 || step == total) {
            std::cerr << "step " << step << "/" << total << " loss " << loss << "\n";
        }
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path out(c.out);
    fs::create_directories(out);
    Checkpoint ckpt{dc.model, result.model.params(),
                    {{"training", to_json(dc)}, {"dataset_config_hash", config_hash(ds.config)},
                     {"steps", result.losses.size()}}};
    save_checkpoint(out / "model", ckpt);
    write_file(out / "loss_trace.txt", loss_trace_text(result.losses));
    std::cout << "trained " << result.losses.size() << " steps in " << secs << " s; checkpoint " << (out / "model").string()
              << "\n";
    return 0;
}

Checkpoint load_model(const std::string& stem, DiffusionConfig& sampling) {
    Checkpoint ckpt = load_checkpoint(stem);
    if (ckpt.extra.contains("training")) sampling = diffusion_config_from_json(ckpt.extra.at("training"));
    return ckpt;
}

int cmd_sample(const Common& c, const std::string& ckpt_stem, const std::string& data, const std::string& qid) {
    const Dataset ds = load_dataset(data);
    DiffusionConfig sampling = ds.config.diffusion;
    const Checkpoint ckpt = load_model(ckpt_stem, sampling);
    const Denoiser model(ckpt.config, ckpt.params);
    for (const auto& rec : ds.scenes) {
        for (std::size_t k = 0; k < rec.questions.size(); ++k) {
            if (rec.questions[k].id != qid) continue;
            const auto rasters = predict_rasters(model, sampling, {{&rec, k}}, c.seed_set ? c.seed : ds.config.seed);
            const fs::path stem = c.out.empty() ? fs::path(qid) : fs::path(c.out);
            if (!stem.parent_path().empty()) fs::create_directories(stem.parent_path());
            save_raster(stem, rasters[0], rec.grid);
            const Pose p = best_viewpoint(rasters[0], rec.grid);
            std::cout << "wrote " << stem.string() << ".ppm; best viewpoint (" << p.x << ", " << p.y << ")\n";
            return 0;
        }
    }
    throw InvalidArgument("question " + qid + " not found in " + data);
}

int cmd_eval(const Common& c, const std::string& data, const std::string& ckpt_stem, const std::string& methods,
             const std::string& split) {
    const Dataset ds = load_dataset(data);
    EvalOptions opts;
    opts.methods = split_csv(methods);
    opts.split = split;
    opts.seed = c.seed_set ? c.seed : ds.config.seed;
    std::optional<Denoiser> model;
    if (!ckpt_stem.empty()) {
        DiffusionConfig sampling = ds.config.diffusion;
        const Checkpoint ckpt = load_model(ckpt_stem, sampling);
        model.emplace(ckpt.config, ckpt.params);
        opts.model = &*model;
        opts.sampling = sampling;
    }
    const EvalReport report = evaluate(ds, opts);
    std::cout << report.table();
    if (!c.out.empty()) {
        write_file(fs::path(c.out) / "report.json", to_json(report).dump(1) + "\n");
        write_file(fs::path(c.out) / "report.txt", report.table());
    }
    return 0;
}

int cmd_inspect(const std::string& stem) {
    NavGrid grid;
    const FieldRaster r = load_raster(stem, &grid);
    const Field f = decode_field(r, grid);
    int red = 0, blue = 0, nav = 0;
    for (std::size_t i = 0; i < r.pixels.size(); ++i) {
        red += r.pixels[i] == palette::kTopPoint;
        blue += r.pixels[i] == palette::kBBox;
        nav += r.navmask[i];
    }
    double sum = 0, lo = INFINITY, hi = -INFINITY;
    int cells = 0;
    for (int c = 0; c < grid.cell_count(); ++c) {
        if (!f.has_score(c)) continue;
        sum += f.scores[c];
        lo = std::min(lo, f.scores[c]);
        hi = std::max(hi, f.scores[c]);
        ++cells;
    }
    std::cout << "raster " << r.width << "x" << r.height << ", question " << (r.question_id.empty() ? "-" : r.question_id)
              << "\n"
              << "grid " << grid.nx << "x" << grid.ny << " cells of " << grid.cell_size << " m, " << cells
              << " navigable (" << nav << " navigable pixels)\n";
    if (cells > 0) {
        const Pose p = best_viewpoint(r, grid);
        std::cout << "score min " << lo << " mean " << sum / cells << " max " << hi << "\n"
                  << "best viewpoint (" << p.x << ", " << p.y << ")\n";
    }
    std::cout << "toppoint pixels " << red << ", bbox pixels " << blue << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Answerability field toolkit"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON config file");
        sub->add_option("--out", common.out, "Output directory or stem");
        sub->add_option("--seed", common.seed, "Seed override")->each([&](const std::string&) { common.seed_set = true; });
    };

    auto* gen = app.add_subcommand("gen", "Generate scenes, questions and field rasters");
    add_common(gen);
    gen->add_option("--ablation", common.ablation, "none, toppoint, bbox or toppoint_bbox");
    gen->get_option("--out")->required();

    std::string data, ckpt, qid, methods = "random,nearest,gt,topdown", split = "test", raster;
    int steps = -1;
    auto* train = app.add_subcommand("train", "Train the denoiser on a dataset");
    add_common(train);
    train->add_option("dataset", data, "Dataset directory")->required();
    train->add_option("--steps", steps, "Override the step budget");
    train->get_option("--out")->required();

    auto* smp = app.add_subcommand("sample", "Sample a field raster for one question");
    add_common(smp);
    smp->add_option("checkpoint", ckpt, "Checkpoint stem (without .bin/.json)")->required();
    smp->add_option("dataset", data, "Dataset directory")->required();
    smp->add_option("question", qid, "Question id")->required();

    auto* ev = app.add_subcommand("eval", "Evaluate methods on a dataset split");
    add_common(ev);
    ev->add_option("dataset", data, "Dataset directory")->required();
    ev->add_option("--checkpoint", ckpt, "Checkpoint stem for the pred method");
    ev->add_option("--methods", methods, "Comma-separated: random,nearest,gt,pred,topdown");
    ev->add_option("--split", split, "train or test");

    auto* insp = app.add_subcommand("inspect", "Print statistics of a field raster");
    insp->add_option("raster", raster, "Raster stem (without .ppm)")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_gen(common);
        if (*train) return cmd_train(common, data, steps);
        if (*smp) return cmd_sample(common, ckpt, data, qid);
        if (*ev) {
            // a checkpoint without an explicit method list means "also score it"
            if (!ckpt.empty() && ev->get_option("--methods")->count() == 0) methods += ",pred";
            return cmd_eval(common, data, ckpt, methods, split);
        }
        if (*insp) return cmd_inspect(raster);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
