#include <cstdio>
#include <fstream>
#include <map>

#include "ansfield/errors.hpp"
#include "ansfield/harness.hpp"
#include "ansfield/parallel.hpp"

namespace ansfield {

namespace fs = std::filesystem;

std::vector<const SceneRecord*> Dataset::split(const std::string& name) const {
    std::vector<const SceneRecord*> out;
    for (const auto& s : scenes) {
        if (s.split == name) out.push_back(&s);
    }
    return out;
}

std::size_t Dataset::question_count(const std::string& name) const {
    std::size_t n = 0;
    for (const auto* s : split(name)) n += s->questions.size();
    return n;
}

int token_vocabulary_size(const Vocabulary& vocab) {
    return kTemplateCount + static_cast<int>(vocab.categories.size() + vocab.colors.size());
}

TokenIds encode_tokens(const Question& q, const Vocabulary& vocab) {
    TokenIds ids{static_cast<int>(q.templ)};
    for (const auto& c : q.mentioned_categories) {
        const int i = vocab.category_index(c);
        if (i < 0) throw InvalidArgument("unknown category " + c);
        ids.push_back(kTemplateCount + i);
    }
    for (const auto& c : q.mentioned_colors) {
        const int i = vocab.color_index(c);
        if (i < 0) throw InvalidArgument("unknown color " + c);
        ids.push_back(kTemplateCount + static_cast<int>(vocab.categories.size()) + i);
    }
    return ids;
}

void raster_to_channels(const FieldRaster& r, double* dst) {
    const std::size_t hw = r.pixels.size();
    for (std::size_t p = 0; p < hw; ++p) {
        for (int c = 0; c < 3; ++c) dst[c * hw + p] = r.pixels[p][c] / 127.5 - 1.0;
    }
}

void raster_red_to_channel(const FieldRaster& r, double* dst) {
    for (std::size_t p = 0; p < r.pixels.size(); ++p) dst[p] = r.pixels[p][0] / 127.5 - 1.0;
}

FieldRaster channel_to_raster(const double* src, const FieldRaster& like, const std::string& question_id) {
    FieldRaster r = like;
    r.question_id = question_id;
    for (std::size_t p = 0; p < r.pixels.size(); ++p) {
        const double v = std::clamp((src[p] + 1.0) * 127.5, 0.0, 255.0);
        r.pixels[p][0] = static_cast<std::uint8_t>(std::lround(v));
    }
    return r;
}

Rgb appearance_code(const SceneObject& o, const Vocabulary& vocab) {
    const int ci = vocab.category_index(o.category);
    const int ki = vocab.color_index(o.color);
    if (ci < 0 || ki < 0) throw InvalidArgument("object " + o.id + " is outside the vocabulary");
    return {128, static_cast<std::uint8_t>(16 * (ci + 1)), static_cast<std::uint8_t>(24 * (ki + 1))};
}

FieldRaster render_condition(const Scene& scene, const NavGrid& grid, const Vocabulary& vocab, int px_per_cell) {
    FieldRaster r = render_topdown(scene, grid, px_per_cell);
    for (int row = 0; row < r.height; ++row) {
        for (int col = 0; col < r.width; ++col) {
            if (r.at(row, col) != palette::kObject) continue;
            const Vec2 p = r.pixel_center(row, col);
            for (const auto& o : scene.objects) {
                if (o.footprint.contains(p)) r.at(row, col) = appearance_code(o, vocab);
            }
        }
    }
    return r;
}

namespace {

SceneRecord make_record(const HarnessConfig& config, const std::string& split, int index, std::uint64_t split_tag) {
    SceneRecord rec;
    rec.split = split;
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04d", split.c_str(), index);
    for (std::uint64_t attempt = 0;; ++attempt) {
        try {
            rec.scene = generate_scene(derive_seed(config.seed, split_tag, index, attempt), config.scenes);
            rec.grid = build_navgrid(rec.scene, config.grid);
            if (rec.grid.navigable_count() > 0) break;
        } catch (const PlacementExhausted&) {
        }
        if (attempt > 100) throw PlacementExhausted("no valid scene for " + std::string(id));
    }
    rec.scene.id = id;
    rec.cond = config.condition == "gray" ? render_topdown(rec.scene, rec.grid, config.px_per_cell)
                                          : render_condition(rec.scene, rec.grid, config.scenes.vocab, config.px_per_cell);
    rec.questions = generate_questions(rec.scene, derive_seed(config.seed, split_tag + 7, index),
                                       config.questions_per_scene, config.scenes.vocab);
    FieldOptions fo;
    fo.n_samples = config.boundary_samples;
    fo.band = config.ranking.band;
    fo.workers = 1;
    for (const auto& q : rec.questions) {
        const Field f = normalize(compute_field(rec.scene, rec.grid, q, fo));
        rec.targets.push_back(encode_raster(f, rec.scene, q, config.annotations, config.px_per_cell));
    }
    return rec;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw FormatError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw FormatError("cannot write " + p.string());
    f << text;
}

nlohmann::json read_json(const fs::path& p) {
    try {
        return nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

Dataset generate_dataset(const HarnessConfig& config, int workers) {
    Dataset ds{config, {}};
    const int total = config.train_scenes + config.test_scenes;
    ds.scenes.resize(total);
    parallel_for(
        total,
        [&](int i) {
            const bool train = i < config.train_scenes;
            ds.scenes[i] = train ? make_record(config, "train", i, 1) : make_record(config, "test", i - config.train_scenes, 2);
        },
        workers > 0 ? workers : worker_count());
    return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
    for (const char* sub : {"scenes", "questions", "rasters/cond", "rasters/target"}) fs::create_directories(dir / sub);
    std::map<std::string, std::string> files;
    auto record = [&](const std::string& rel) { files[rel] = hex64(fnv1a64(read_file(dir / rel))); };
    nlohmann::json splits = {{"train", nlohmann::json::array()}, {"test", nlohmann::json::array()}};
    for (const auto& rec : ds.scenes) {
        const std::string& id = rec.scene.id;
        splits[rec.split].push_back(id);
        write_text(dir / "scenes" / (id + ".json"),
                   nlohmann::json{{"split", rec.split}, {"scene", to_json(rec.scene)}}.dump(1) + "\n");
        record("scenes/" + id + ".json");
        nlohmann::json qs = nlohmann::json::array();
        for (const auto& q : rec.questions) qs.push_back(to_json(q));
        write_text(dir / "questions" / (id + ".json"), nlohmann::json{{"scene_id", id}, {"questions", qs}}.dump(1) + "\n");
        record("questions/" + id + ".json");
        save_raster(dir / "rasters" / "cond" / id, rec.cond, rec.grid);
        record("rasters/cond/" + id + ".ppm");
        record("rasters/cond/" + id + ".meta.json");
        for (std::size_t k = 0; k < rec.questions.size(); ++k) {
            const std::string& qid = rec.questions[k].id;
            save_raster(dir / "rasters" / "target" / qid, rec.targets[k], rec.grid);
            record("rasters/target/" + qid + ".ppm");
            record("rasters/target/" + qid + ".meta.json");
        }
    }
    const nlohmann::json manifest = {{"schema", "ansfield.dataset/1"},
                                     {"config", to_json(ds.config)},
                                     {"config_hash", config_hash(ds.config)},
                                     {"seed", ds.config.seed},
                                     {"splits", splits},
                                     {"questions", {{"train", ds.question_count("train")}, {"test", ds.question_count("test")}}},
                                     {"files", files}};
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
    const auto manifest = read_json(dir / "manifest.json");
    if (manifest.value("schema", "") != "ansfield.dataset/1") throw FormatError("not a dataset manifest");
    Dataset ds{harness_config_from_json(manifest.at("config")), {}};
    for (const char* split : {"train", "test"}) {
        for (const auto& idj : manifest.at("splits").at(split)) {
            const auto id = idj.get<std::string>();
            SceneRecord rec;
            rec.split = split;
            rec.scene = scene_from_json(read_json(dir / "scenes" / (id + ".json")).at("scene"));
            rec.cond = load_raster(dir / "rasters" / "cond" / id, &rec.grid);
            const auto questions = read_json(dir / "questions" / (id + ".json"));
            for (const auto& qj : questions.at("questions")) {
                rec.questions.push_back(question_from_json(qj, ds.config.scenes.vocab));
                NavGrid g;
                rec.targets.push_back(load_raster(dir / "rasters" / "target" / rec.questions.back().id, &g));
                if (!(g == rec.grid)) throw TransformMismatch("target grid differs from condition grid in " + id);
            }
            ds.scenes.push_back(std::move(rec));
        }
    }
    return ds;
}

}  // namespace ansfield
