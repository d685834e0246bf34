#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "ansfield/errors.hpp"
#include "ansfield/harness.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ansfield;

namespace {

Scene open_room(double side) {
    Scene s;
    s.id = "room";
    s.width = side;
    s.height = side;
    s.objects.push_back({"obj_00", "desk", "brown", {0.8, 0.8, 1.3, 1.3}, false});
    s.objects.push_back({"obj_01", "chair", "red", {1.5, 0.8, 1.8, 1.1}, true});
    return s;
}

RankedAnswers ranked_with_truth_at(int rank, const std::vector<std::string>& vocab) {
    RankedAnswers r;
    for (std::size_t i = 0; i < vocab.size(); ++i) r.entries.push_back({vocab[i], 1.0 - 0.01 * i});
    std::swap(r.entries[0], r.entries[rank - 1]);
    return r;
}

HarnessConfig tiny_config(std::uint64_t seed) {
    HarnessConfig c;
    c.train_scenes = 3;
    c.test_scenes = 3;
    c.questions_per_scene = 4;
    c.boundary_samples = 64;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("em_at_k examples") {
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
    std::vector<RankedAnswers> top{ranked_with_truth_at(1, vocab), ranked_with_truth_at(1, vocab)};
    CHECK(em_at_k(top, {"a", "a"}, 1) == 100.0);

    const std::vector<RankedAnswers> third{ranked_with_truth_at(3, vocab)};
    const std::string truth = third[0].entries[2].first;
    CHECK(em_at_k(third, {truth}, 1) == 0.0);
    CHECK(em_at_k(third, {truth}, 10) == 100.0);
    CHECK(em_at_k(third, {truth}, 5) == 100.0);

    CHECK_THROWS_AS(em_at_k({}, {}, 1), EmptyInput);
    CHECK_THROWS_AS(em_at_k(third, {truth}, 0), InvalidArgument);
    CHECK_THROWS_AS(em_at_k(third, {truth, truth}, 1), InvalidArgument);
}

TEST_CASE("random spawn") {
    const Scene s = open_room(2.0);
    NavGrid one{{0, 0}, 0.25, 3, 3, std::vector<bool>(9, false)};
    one.navigable[5] = true;
    const Question q;
    std::mt19937_64 rng(1);
    CHECK(baseline_random_spawn(s, one, q, rng) == Pose{one.cell_center(5).x, one.cell_center(5).y});

    NavGrid none{{0, 0}, 0.25, 3, 3, std::vector<bool>(9, false)};
    CHECK_THROWS_AS(baseline_random_spawn(s, none, q, rng), NoNavigableCell);

    NavGrid open{{0, 0}, 0.25, 8, 8, std::vector<bool>(64, true)};
    std::mt19937_64 a(5), b(5);
    CHECK(baseline_random_spawn(s, open, q, a) == baseline_random_spawn(s, open, q, b));

    std::vector<int> counts(64, 0);
    std::mt19937_64 r(9);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const Pose p = baseline_random_spawn(s, open, q, r);
        counts[open.cell_at(p.point())]++;
    }
    const double expect = draws / 64.0;
    const double sigma = std::sqrt(draws * (1.0 / 64) * (63.0 / 64));
    double chi2 = 0;
    for (int c : counts) {
        CHECK(std::abs(c - expect) < 4 * sigma);
        chi2 += (c - expect) * (c - expect) / expect;
    }
    // 63 degrees of freedom; 110 is far beyond the 99.9th percentile (~103).
    CHECK(chi2 < 110);
}

TEST_CASE("nearest mention") {
    Scene s = open_room(4.0);
    const NavGrid grid = build_navgrid(s);
    Question q;
    q.id = "q";
    q.referenced_ids = {"obj_00"};
    const Pose p = baseline_nearest_mention(s, grid, q);
    const Vec2 target = s.objects[0].footprint.center();
    for (int c : grid.navigable_cells()) CHECK(distance(grid.cell_center(c), target) >= distance(p.point(), target) - 1e-12);

    // Two objects mirrored about the center of cell (6, 6).
    Scene sym;
    sym.id = "sym";
    sym.width = 4;
    sym.height = 4;
    const Vec2 mid{6.5 * 0.25, 6.5 * 0.25};
    sym.objects.push_back({"obj_00", "lamp", "red", {mid.x - 1.0, mid.y - 0.1, mid.x - 0.8, mid.y + 0.1}, false});
    sym.objects.push_back({"obj_01", "lamp", "blue", {mid.x + 0.8, mid.y - 0.1, mid.x + 1.0, mid.y + 0.1}, false});
    const NavGrid g2 = build_navgrid(sym);
    Question q2;
    q2.referenced_ids = {"obj_00", "obj_01"};
    const Pose p2 = baseline_nearest_mention(sym, g2, q2);
    CHECK(p2.x == doctest::Approx(mid.x));
    CHECK(p2.y == doctest::Approx(mid.y));

    // Random scenes against an exhaustive (distance, index) minimum.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scene r = generate_scene(seed, SceneConfig{});
        const NavGrid g = build_navgrid(r);
        for (const auto& question : generate_questions(r, seed, 3)) {
            Vec2 centroid{0, 0};
            for (const auto& id : question.referenced_ids) {
                const Rect& f = r.objects[*r.find(id)].footprint;
                centroid.x += 0.5 * (f.x0 + f.x1) / question.referenced_ids.size();
                centroid.y += 0.5 * (f.y0 + f.y1) / question.referenced_ids.size();
            }
            std::pair<double, int> best{oracle::kInf, -1};
            for (int c = 0; c < g.cell_count(); ++c) {
                if (!g.navigable[c]) continue;
                const Vec2 cc = g.cell_center(c);
                best = std::min(best, {std::hypot(cc.x - centroid.x, cc.y - centroid.y), c});
            }
            const Pose got = baseline_nearest_mention(r, g, question);
            CHECK(g.cell_at(got.point()) == best.second);
        }
    }
}

TEST_CASE("topdown baseline") {
    const Scene s = open_room(4.0);
    const Question next = make_question(s, QuestionTemplate::WhatNextTo, 0, "q0");
    const auto r1 = baseline_topdown_qa(s, next);
    CHECK(r1.rank_of(next.answer) == 1);

    // obj_01 is side-visible: its color cannot be seen from above.
    const Question color = make_question(s, QuestionTemplate::WhatColorOn, 1, "q1");
    const auto r2 = baseline_topdown_qa(s, color);
    const int rank = r2.rank_of(color.answer);
    REQUIRE(rank > 0);
    CHECK(r2.entries[rank - 1].second <= RankingOptions{}.floor);
}

TEST_CASE("condition tokens") {
    const auto& v = Vocabulary::builtin();
    CHECK(token_vocabulary_size() == 27);
    Question q;
    q.templ = QuestionTemplate::WhatColorOn;
    q.mentioned_categories = {"bed", "lamp"};
    q.mentioned_colors = {"red"};
    const auto ids = encode_tokens(q);
    CHECK(ids == TokenIds{2, 3 + v.category_index("bed"), 3 + v.category_index("lamp"), 17 + v.color_index("red")});
    q.mentioned_colors = {"plaid"};
    CHECK_THROWS_AS(encode_tokens(q), InvalidArgument);
}

TEST_CASE("harness config json and hash") {
    HarnessConfig c;
    apply_ablation(c, "toppoint_bbox");
    const auto back = harness_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    HarnessConfig d = c;
    d.seed = 99;
    CHECK(config_hash(d) != config_hash(c));
    CHECK(config_hash(c).size() == 16);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK_THROWS_AS(ablation_preset("mask_floor"), InvalidArgument);
    CHECK(split_csv("gt, random,,pred") == std::vector<std::string>{"gt", "random", "pred"});
}

TEST_CASE("dataset generation, persistence and evaluation") {
    const HarnessConfig cfg = tiny_config(4);
    const Dataset ds = generate_dataset(cfg, 1);
    REQUIRE(ds.scenes.size() == 6);
    CHECK(ds.question_count("train") == 12);
    CHECK(ds.question_count("test") == 12);
    for (const auto& rec : ds.scenes) {
        for (const auto& t : rec.targets) {
            CHECK(t.width == 32);
            CHECK(t.height == 32);
            CHECK(t.transform == rec.cond.transform);
            CHECK(t.navmask == rec.cond.navmask);
        }
    }
    const Dataset again = generate_dataset(cfg, 2);
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        CHECK(again.scenes[i].scene == ds.scenes[i].scene);
        CHECK(again.scenes[i].targets.back().pixels == ds.scenes[i].targets.back().pixels);
    }

    const auto dir = std::filesystem::temp_directory_path() / "ansfield_ds_test";
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    const Dataset loaded = load_dataset(dir);
    REQUIRE(loaded.scenes.size() == ds.scenes.size());
    CHECK(config_hash(loaded.config) == config_hash(ds.config));
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        CHECK(loaded.scenes[i].scene == ds.scenes[i].scene);
        CHECK(loaded.scenes[i].grid == ds.scenes[i].grid);
        CHECK(loaded.scenes[i].questions.size() == ds.scenes[i].questions.size());
        CHECK(loaded.scenes[i].cond.pixels == ds.scenes[i].cond.pixels);
        CHECK(loaded.scenes[i].targets[0].pixels == ds.scenes[i].targets[0].pixels);
    }

    EvalOptions opts;
    opts.methods = {"random", "nearest", "gt", "topdown"};
    opts.workers = 1;
    const auto report = evaluate(ds, opts);
    for (const auto& m : report.methods) CHECK(m.em1 <= m.em10);
    opts.workers = 3;
    CHECK(to_json(evaluate(loaded, opts)).dump() == to_json(report).dump());

    // GT argmax poses on raw-max-1 fields put the truth first.
    FieldOptions fo;
    fo.n_samples = cfg.boundary_samples;
    for (const auto& rec : report.records) {
        if (rec.method != "gt") continue;
        for (const auto* s : ds.split("test")) {
            for (const auto& q : s->questions) {
                if (q.id != rec.question_id) continue;
                if (compute_field(s->scene, s->grid, q, fo).max_score() == 1.0) CHECK(rec.rank == 1);
            }
        }
    }

    opts.methods = {"pred"};
    CHECK_THROWS_AS(evaluate(ds, opts), MissingModel);
    opts.methods = {"oracle"};
    CHECK_THROWS_AS(evaluate(ds, opts), InvalidArgument);
}

TEST_CASE("short training run and predicted-field evaluation") {
    HarnessConfig cfg = tiny_config(8);
    cfg.diffusion.steps = 3;
    cfg.diffusion.batch_size = 2;
    cfg.diffusion.sample_steps = 4;
    const Dataset ds = generate_dataset(cfg, 1);
    const auto a = train_model(ds, cfg.diffusion);
    const auto b = train_model(ds, cfg.diffusion);
    CHECK(a.losses.size() == 3);
    CHECK(loss_trace_text(a.losses) == loss_trace_text(b.losses));
    EvalOptions opts;
    opts.methods = {"pred", "gt"};
    opts.model = &a.model;
    const auto report = evaluate(ds, opts);
    REQUIRE(report.field_error.has_value());
    CHECK(report.field_error->cells > 0);
    CHECK(std::isfinite(report.field_error->pred_mse));
    CHECK(report.method("pred").questions == 12);

    DiffusionConfig paper = DiffusionConfig::paper_preset();
    CHECK(resolve_steps(paper, 2000) == 150 * 125);
}
