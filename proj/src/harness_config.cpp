#include <cstdio>

#include "ansfield/checkpoint.hpp"
#include "ansfield/errors.hpp"
#include "ansfield/harness.hpp"

namespace ansfield {

SceneConfig HarnessConfig::default_scene_config() {
    SceneConfig c;
    c.width = {3.0, 4.0};
    c.height = {3.0, 4.0};
    c.objects = {3, 6};
    c.partitions = {0, 1};
    c.object_side = {0.3, 0.9};
    c.door_width = 0.8;
    return c;
}

const std::vector<std::string>& ablation_names() {
    static const std::vector<std::string> names{"none", "toppoint", "bbox", "toppoint_bbox"};
    return names;
}

AnnotationOptions ablation_preset(const std::string& name) {
    if (name == "none") return {false, false};
    if (name == "toppoint") return {true, false};
    if (name == "bbox") return {false, true};
    if (name == "toppoint_bbox") return {true, true};
    throw InvalidArgument("unknown ablation preset '" + name + "' (none, toppoint, bbox, toppoint_bbox)");
}

void apply_ablation(HarnessConfig& config, const std::string& name) {
    config.annotations = ablation_preset(name);
    config.ablation = name;
}

nlohmann::json to_json(const HarnessConfig& c) {
    return {{"schema", "ansfield.harness/1"},
            {"scenes", to_json(c.scenes)},
            {"grid", {{"cell_size", c.grid.cell_size}, {"wall_buffer", c.grid.wall_buffer}, {"min_cells", c.grid.min_cells}}},
            {"px_per_cell", c.px_per_cell},
            {"train_scenes", c.train_scenes},
            {"test_scenes", c.test_scenes},
            {"questions_per_scene", c.questions_per_scene},
            {"ablation", c.ablation},
            {"annotations", {{"toppoint", c.annotations.toppoint}, {"bbox", c.annotations.bbox}}},
            {"boundary_samples", c.boundary_samples},
            {"condition", c.condition},
            {"band", {c.ranking.band.theta_lo, c.ranking.band.theta_hi, c.ranking.band.theta_cut}},
            {"distractor_scale", c.ranking.distractor_scale},
            {"confidence_floor", c.ranking.floor},
            {"diffusion", to_json(c.diffusion)},
            {"seed", c.seed}};
}

HarnessConfig harness_config_from_json(const nlohmann::json& j) {
    HarnessConfig c;
    try {
        if (j.contains("scenes")) c.scenes = scene_config_from_json(j.at("scenes"));
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            c.grid.cell_size = g.value("cell_size", c.grid.cell_size);
            c.grid.wall_buffer = g.value("wall_buffer", c.grid.wall_buffer);
            c.grid.min_cells = g.value("min_cells", c.grid.min_cells);
        }
        c.px_per_cell = j.value("px_per_cell", c.px_per_cell);
        c.train_scenes = j.value("train_scenes", c.train_scenes);
        c.test_scenes = j.value("test_scenes", c.test_scenes);
        c.questions_per_scene = j.value("questions_per_scene", c.questions_per_scene);
        apply_ablation(c, j.value("ablation", c.ablation));
        if (j.contains("annotations")) {
            c.annotations.toppoint = j.at("annotations").value("toppoint", c.annotations.toppoint);
            c.annotations.bbox = j.at("annotations").value("bbox", c.annotations.bbox);
        }
        c.boundary_samples = j.value("boundary_samples", c.boundary_samples);
        c.condition = j.value("condition", c.condition);
        if (j.contains("band")) {
            const auto& b = j.at("band");
            c.ranking.band = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>()};
        }
        c.ranking.distractor_scale = j.value("distractor_scale", c.ranking.distractor_scale);
        c.ranking.floor = j.value("confidence_floor", c.ranking.floor);
        if (j.contains("diffusion")) c.diffusion = diffusion_config_from_json(j.at("diffusion"));
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("harness config: ") + e.what());
    }
    c.ranking.band.validate();
    if (c.condition != "appearance" && c.condition != "gray") throw InvalidArgument("condition must be appearance or gray");
    if (c.train_scenes < 0 || c.test_scenes < 0 || c.questions_per_scene < 1 || c.px_per_cell < 1) {
        throw InvalidArgument("harness config: counts must be positive");
    }
    return c;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const HarnessConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
    return buf;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix(splitmix(splitmix(splitmix(base) ^ a) ^ b) ^ c);
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    return out;
}

}  // namespace ansfield
