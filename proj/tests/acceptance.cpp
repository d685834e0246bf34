// End-to-end acceptance checks, one PASS/FAIL line per numbered criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "ansfield/checkpoint.hpp"
#include "ansfield/diffusion.hpp"
#include "ansfield/fields.hpp"
#include "ansfield/harness.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace ansfield;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

fs::path work_dir() {
    const char* env = std::getenv("ANSFIELD_ACCEPTANCE_DIR");
    fs::path p = env ? fs::path(env) : fs::temp_directory_path() / "ansfield_acceptance";
    fs::create_directories(p);
    return p;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

struct SlotStub : NoisePredictor {
    double e00, e10, e11;
    SlotStub(double a, double b, double c) : e00(a), e10(b), e11(c) {}
    ValueArray predict(const ValueArray& z, std::span<const int>, const ValueArray* img,
                       const std::vector<TokenIds>* text) const override {
        return ValueArray(z.shape(), img ? (text ? e11 : e10) : e00);
    }
};

// 1
Outcome cfg_identity() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        DenoiserConfig cfg;
        cfg.widths = {4, 8, 8};
        Denoiser m = Denoiser::initialize(cfg, rng());
        for (auto& e : m.params().entries()) {
            if (e.name.ends_with(".b") || e.name == "out.w") {
                for (auto& v : e.value.values()) v = n(rng);
            }
        }
        ValueArray z({1, 1, 8, 8}), img({1, 3, 8, 8});
        for (auto& v : z.values()) v = n(rng);
        for (auto& v : img.values()) v = n(rng);
        const std::vector<int> t{1 + static_cast<int>(rng() % 100)};
        std::vector<TokenIds> text{{static_cast<int>(rng() % 3), 3 + static_cast<int>(rng() % 14)}};
        const auto guided = cfg_predict(m, z, t, &img, &text, {1.0, 1.0});
        const auto full = m.predict(z, t, &img, &text);
        for (std::size_t k = 0; k < full.size(); ++k) worst = std::max(worst, std::abs(guided[k] - full[k]));
    }
    return {worst <= 1e-12, fmt("1000 random denoisers, max |cfg(1,1) - e(C,P)| = %.3g", worst)};
}

// 2
Outcome cfg_arithmetic() {
    const SlotStub stub(0.0, 1.0, 2.0);
    const ValueArray z({1, 1, 4, 4}), img({1, 3, 4, 4});
    const std::vector<TokenIds> text{{0}};
    const std::vector<int> t{10};
    const auto out = cfg_predict(stub, z, t, &img, &text, GuidanceScales{});
    bool exact = true;
    for (double v : out.values()) exact = exact && v == 8.5;
    return {exact, fmt("S_i=%.1f S_t=%.0f on stub (0,1,2) -> %.17g", GuidanceScales{}.image, GuidanceScales{}.text, out[0])};
}

// 3
Outcome gradient_check() {
    Denoiser m = Denoiser::initialize(DenoiserConfig{}, 31);
    std::mt19937_64 rng(32);
    std::normal_distribution<double> n(0.0, 0.2);
    for (auto& e : m.params().entries()) {
        if (e.name.ends_with(".b") || e.name == "out.w") {
            for (auto& v : e.value.values()) v = n(rng);
        }
    }
    const auto problem = gradcheck::make_problem(16, 33);
    const auto results = gradcheck::run(m, problem, 0);
    double worst = 0.0, flagged_grad = 0.0, flagged_coarse = 0.0;
    std::string worst_name;
    std::size_t entries = 0, flagged = 0;
    for (const auto& r : results) {
        entries += r.checked;
        flagged += r.flagged;
        flagged_grad = std::max(flagged_grad, r.flagged_max_abs_grad);
        flagged_coarse = std::max(flagged_coarse, r.flagged_max_rel_coarse);
        if (r.max_rel >= worst) {
            worst = r.max_rel;
            worst_name = r.name;
        }
    }
    std::string detail = fmt("%.0f arrays, %.0f entries, max relative error %.3g", results.size(), entries, worst) +
                         " (" + worst_name + ")";
    if (flagged) {
        detail += fmt("; %.0f entries over 1e-4, all with |grad| <= %.2g, max relative error %.2g at h=1e-4", flagged,
                      flagged_grad, flagged_coarse);
    }
    return {worst < 1e-4, detail};
}

// 4
Outcome forward_noise_variance() {
    const auto s = ScheduleConfig{}.build();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    const std::size_t count = 100000;
    std::string detail;
    bool ok = true;
    for (int t : {1, s.steps / 2, s.steps}) {
        ValueArray z0({count}), eps({count});
        for (auto& v : z0.values()) v = n(rng);
        for (auto& v : eps.values()) v = n(rng);
        const auto zt = forward_noise(z0, t, eps, s);
        double mean = 0, sq = 0;
        for (double v : zt.values()) mean += v / count;
        for (double v : zt.values()) sq += (v - mean) * (v - mean);
        const double var = sq / (count - 1);
        ok = ok && std::abs(var - 1.0) <= 0.02;
        detail += fmt("t=%.0f var %.4f; ", t, var);
    }
    return {ok, detail};
}

// 5
Outcome visibility_oracle() {
    SceneConfig cfg;
    double worst = 0.0;
    std::size_t cells_checked = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const Scene s = generate_scene(seed, cfg);
        const NavGrid g = build_navgrid(s);
        const Question q = generate_questions(s, seed, 1).front();
        const Field f = compute_field(s, g, q);
        for (int c : g.navigable_cells()) {
            const Vec2 v = g.cell_center(c);
            double expected = 1.0;
            for (const auto& id : q.referenced_ids) {
                const auto r = oracle::dense_ray_observe(s, v, *s.find(id), 20000);
                expected *= r.visible_fraction * oracle::band_quality(r.angular_extent, 0.10, 0.80, 2.5);
            }
            worst = std::max(worst, std::abs(f.scores[c] - expected));
            ++cells_checked;
        }
    }
    return {worst <= 0.02, fmt("20 scenes, %.0f cells, max |field - 20000-ray oracle| = %.4f", cells_checked, worst)};
}

bool unique_quantized_max(const Field& f) {
    int best = -1, count = 0;
    for (int c : f.grid.navigable_cells()) {
        const int q = static_cast<int>(std::lround(255.0 * f.scores[c]));
        if (q > best) {
            best = q;
            count = 1;
        } else if (q == best) {
            ++count;
        }
    }
    return count == 1;
}

// 6
Outcome raster_round_trip() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    bool toppoint_exact = true, argmax_ok = true;
    int accepted = 0;
    for (std::uint64_t seed = 0; accepted < 100; ++seed) {
        const Scene s = generate_scene(seed, SceneConfig{});
        const NavGrid g = build_navgrid(s);
        const Question q = generate_questions(s, seed, 1).front();
        Field f{g, std::vector<double>(g.cell_count(), std::nan(""))};
        for (int c : g.navigable_cells()) f.scores[c] = u(rng);
        const Field d = decode_field(encode_raster(f, s, q, {}), g);
        for (int c : g.navigable_cells()) worst = std::max(worst, std::abs(d.scores[c] - f.scores[c]));
        if (!unique_quantized_max(f)) continue;
        ++accepted;
        const FieldRaster r = encode_raster(f, s, q, {true, false});
        const int best = f.argmax();
        const int ix = best % g.nx, iy = best / g.nx;
        for (int dy = 0; dy < kDefaultPxPerCell; ++dy) {
            for (int dx = 0; dx < kDefaultPxPerCell; ++dx) {
                toppoint_exact = toppoint_exact && r.at(iy * kDefaultPxPerCell + dy, ix * kDefaultPxPerCell + dx) == palette::kTopPoint;
            }
        }
        argmax_ok = argmax_ok && decode_field(r, g).argmax() == best && g.cell_at(best_viewpoint(r, g).point()) == best;
    }
    const bool ok = worst <= 1.0 / 255.0 + 1e-12 && toppoint_exact && argmax_ok;
    return {ok, fmt("max decode error %.5f (bound %.5f), TopPoint exact %.0f, argmax preserved %.0f over 100 fields", worst,
                    1.0 / 255.0, toppoint_exact, argmax_ok)};
}

// 7
Outcome transform_round_trip() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Scene s = generate_scene(700 + i % 20, SceneConfig{});
        const NavGrid g = build_navgrid(s);
        const FieldRaster r = render_topdown(s, g);
        const auto cells = g.navigable_cells();
        const Vec2 c = g.cell_center(cells[rng() % cells.size()]);
        const Vec2 pose{c.x + u(rng) * g.cell_size, c.y + u(rng) * g.cell_size};
        const auto [row, col] = r.pixel_of(pose);
        const Vec2 back = r.pixel_center(row, col);
        worst = std::max(worst, distance(back, pose));
    }
    return {worst <= 0.25 / 2, fmt("1000 poses, max pose->pixel->pose error %.4f m (bound %.3f)", worst, 0.125)};
}

// 8
Outcome baseline_ordering() {
    HarnessConfig cfg;
    cfg.train_scenes = 0;
    cfg.test_scenes = 40;
    cfg.seed = 808;
    const Dataset ds = generate_dataset(cfg);
    EvalOptions opts;
    opts.methods = {"random", "gt", "topdown", "nearest"};
    opts.seed = 808;
    const auto rep = evaluate(ds, opts);
    const double gt = rep.method("gt").em1, rnd = rep.method("random").em1, td = rep.method("topdown").em1;
    return {gt >= rnd + 10.0 && td < gt,
            fmt("%.0f questions: EM@1 gt %.2f, random %.2f, topdown %.2f", ds.question_count("test"), gt, rnd, td)};
}

// 9
Outcome training_smoke() {
    HarnessConfig cfg;
    cfg.seed = 9;
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = generate_dataset(cfg);
    const auto trained = train_model(ds, cfg.diffusion);
    EvalOptions opts;
    opts.methods = {"pred", "random", "gt"};
    opts.model = &trained.model;
    opts.seed = 9;
    const auto rep = evaluate(ds, opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& fe = *rep.field_error;
    const double gain = 1.0 - fe.pred_mse / fe.mean_field_mse;
    const double pred = rep.method("pred").em1, rnd = rep.method("random").em1;
    const bool ok = gain >= 0.10 && pred >= rnd && secs < 1800;
    std::ostringstream os;
    os << fmt("%.0f steps; field MSE pred %.4f vs mean-field %.4f (%.1f%% lower); ", trained.losses.size(), fe.pred_mse,
              fe.mean_field_mse, 100.0 * gain)
       << fmt("EM@1 pred %.2f vs random %.2f (gt %.2f); %.0f s", pred, rnd, rep.method("gt").em1, secs);
    write_file_text(work_dir() / "criterion9_report.txt", rep.table());
    return {ok, os.str()};
}

// 10
Outcome ablation_plumbing() {
    std::ostringstream tables;
    bool ok = true;
    std::string detail;
    for (const auto& name : ablation_names()) {
        HarnessConfig cfg;
        cfg.train_scenes = 6;
        cfg.test_scenes = 2;
        cfg.questions_per_scene = 4;
        cfg.seed = 10;
        cfg.diffusion.steps = 20;
        cfg.diffusion.batch_size = 4;
        cfg.diffusion.sample_steps = 5;
        apply_ablation(cfg, name);
        try {
            const fs::path dir = work_dir() / ("ablation_" + name);
            fs::remove_all(dir);
            save_dataset(generate_dataset(cfg), dir);
            const Dataset ds = load_dataset(dir);
            const auto trained = train_model(ds, cfg.diffusion);
            EvalOptions opts;
            opts.model = &trained.model;
            const auto rep = evaluate(ds, opts);
            tables << "[" << name << "]\n" << rep.table();
            detail += name + " ok; ";
        } catch (const std::exception& e) {
            ok = false;
            detail += name + " failed (" + e.what() + "); ";
        }
    }
    std::cout << tables.str();
    return {ok, detail};
}

// 11
Outcome determinism() {
    setenv("ANSFIELD_THREADS", "1", 1);
    std::string manifests[2], traces[2], reports[2];
    for (int run = 0; run < 2; ++run) {
        HarnessConfig cfg;
        cfg.train_scenes = 6;
        cfg.test_scenes = 2;
        cfg.questions_per_scene = 5;
        cfg.seed = 11;
        cfg.diffusion.steps = 15;
        cfg.diffusion.batch_size = 4;
        cfg.diffusion.sample_steps = 5;
        const fs::path dir = work_dir() / ("determinism_" + std::to_string(run));
        fs::remove_all(dir);
        save_dataset(generate_dataset(cfg, 1), dir);
        manifests[run] = read_bytes(dir / "manifest.json");
        const Dataset ds = load_dataset(dir);
        const auto trained = train_model(ds, cfg.diffusion);
        traces[run] = loss_trace_text(trained.losses);
        EvalOptions opts;
        opts.model = &trained.model;
        opts.workers = 1;
        reports[run] = to_json(evaluate(ds, opts)).dump();
    }
    unsetenv("ANSFIELD_THREADS");
    const bool ok = !manifests[0].empty() && manifests[0] == manifests[1] && traces[0] == traces[1] &&
                    reports[0] == reports[1];
    return {ok, fmt("manifest %.0f bytes equal %.0f, loss trace equal %.0f, report equal %.0f", manifests[0].size(),
                    manifests[0] == manifests[1], traces[0] == traces[1], reports[0] == reports[1])};
}

// 12
Outcome metric_properties() {
    std::mt19937_64 rng(12);
    const auto& vocab = Vocabulary::builtin();
    bool monotone = true, saturated = true;
    for (int trial = 0; trial < 200; ++trial) {
        const auto kind = static_cast<VocabKind>(trial % 3);
        const auto answers = answer_vocab(kind, vocab);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int n = 1 + static_cast<int>(rng() % 40);
        std::vector<RankedAnswers> ranked;
        std::vector<std::string> truths;
        for (int i = 0; i < n; ++i) {
            std::vector<double> conf(answers.size());
            for (auto& c : conf) c = u(rng);
            ranked.push_back(rank_by_confidence(answers, conf));
            truths.push_back(answers[rng() % answers.size()]);
        }
        double prev = -1.0;
        for (int k = 1; k <= static_cast<int>(answers.size()) + 3; ++k) {
            const double e = em_at_k(ranked, truths, k);
            monotone = monotone && e >= prev;
            prev = e;
        }
        saturated = saturated && em_at_k(ranked, truths, static_cast<int>(answers.size())) == 100.0;
    }
    return {monotone && saturated, fmt("200 randomized rank sets: monotone in K %.0f, EM@|V| = 100 %.0f", monotone, saturated)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, cfg_identity},        {2, cfg_arithmetic},       {3, gradient_check},    {4, forward_noise_variance},
        {5, visibility_oracle},   {6, raster_round_trip},    {7, transform_round_trip}, {8, baseline_ordering},
        {9, training_smoke},      {10, ablation_plumbing},   {11, determinism},      {12, metric_properties},
    };
    // Optional argument: comma-separated subset of criterion numbers.
    std::vector<int> only;
    if (argc > 1) {
        for (const auto& s : split_csv(argv[1])) only.push_back(std::stoi(s));
    }
    int failures = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s criterion %d: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
