#include "ansfield/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "ansfield/errors.hpp"

namespace ansfield {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
    if (hi <= lo) return lo;
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string object_id(int i) {
    std::ostringstream os;
    os << "obj_" << (i < 10 ? "0" : "") << i;
    return os.str();
}

// One straight partition with a single doorway; returns its (up to two) segments.
std::vector<Segment> make_partition(Rng& rng, const SceneConfig& cfg, double w, double h, bool vertical,
                                    double& position) {
    const double span = vertical ? w : h;
    const double len = vertical ? h : w;
    position = uniform(rng, 0.35 * span, 0.65 * span);
    const double half_door = 0.5 * cfg.door_width;
    const double door = uniform(rng, half_door + 0.2, std::max(half_door + 0.2, len - half_door - 0.2));
    std::vector<Segment> out;
    const double a = door - half_door;
    const double b = door + half_door;
    auto at = [&](double along) { return vertical ? Vec2{position, along} : Vec2{along, position}; };
    if (a > 1e-9) out.push_back({at(0.0), at(a)});
    if (b < len - 1e-9) out.push_back({at(b), at(len)});
    return out;
}

}  // namespace

const Vocabulary& Vocabulary::builtin() {
    static const Vocabulary v{
        "ansfield.vocab/1",
        {"guitar", "bed", "couch", "pillow", "coffee table", "shelf", "kitchen cabinet", "refrigerator", "monitor",
         "desk", "ottoman", "lamp", "chair", "trash can"},
        {"black", "white", "brown", "red", "blue", "green", "yellow", "orange", "gray", "purple"},
    };
    return v;
}

int Vocabulary::category_index(const std::string& c) const {
    const auto it = std::find(categories.begin(), categories.end(), c);
    return it == categories.end() ? -1 : static_cast<int>(it - categories.begin());
}

int Vocabulary::color_index(const std::string& c) const {
    const auto it = std::find(colors.begin(), colors.end(), c);
    return it == colors.end() ? -1 : static_cast<int>(it - colors.begin());
}

std::optional<std::size_t> Scene::find(const std::string& object_id) const {
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].id == object_id) return i;
    }
    return std::nullopt;
}

void Scene::validate(const Vocabulary& vocab) const {
    if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("scene bounds must be positive");
    const Rect b = bounds();
    for (const auto& w : walls) {
        if (!b.contains(w.a) || !b.contains(w.b)) throw InvalidArgument("wall endpoint outside scene bounds");
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (!ids.insert(o.id).second) throw InvalidArgument("duplicate object id " + o.id);
        if (!(o.footprint.width() > 0.0) || !(o.footprint.height() > 0.0)) {
            throw InvalidArgument("degenerate footprint for " + o.id);
        }
        if (o.footprint.x0 < 0.0 || o.footprint.y0 < 0.0 || o.footprint.x1 > width || o.footprint.y1 > height) {
            throw InvalidArgument("footprint outside scene bounds for " + o.id);
        }
        if (vocab.category_index(o.category) < 0) throw InvalidArgument("unknown category " + o.category);
        if (vocab.color_index(o.color) < 0) throw InvalidArgument("unknown color " + o.color);
        for (std::size_t j = 0; j < i; ++j) {
            if (rects_overlap(o.footprint, objects[j].footprint)) {
                throw InvalidArgument("footprints overlap: " + o.id + ", " + objects[j].id);
            }
        }
        for (const auto& w : walls) {
            if (segment_hits_rect(w, o.footprint)) throw InvalidArgument("wall crosses footprint of " + o.id);
        }
    }
}

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
    if (cfg.width.lo <= 0.0 || cfg.height.lo <= 0.0 || cfg.width.hi < cfg.width.lo || cfg.height.hi < cfg.height.lo) {
        throw InvalidArgument("scene bounds range must be positive and ordered");
    }
    if (cfg.objects.lo < 0 || cfg.objects.hi < cfg.objects.lo || cfg.partitions.lo < 0 ||
        cfg.partitions.hi < cfg.partitions.lo) {
        throw InvalidArgument("count ranges must be non-negative and ordered");
    }
    if (cfg.vocab.categories.empty() || cfg.vocab.colors.empty()) throw InvalidArgument("empty vocabulary");

    Rng rng(seed);
    Scene scene;
    scene.id = "scene_" + std::to_string(seed);
    scene.width = uniform(rng, cfg.width.lo, cfg.width.hi);
    scene.height = uniform(rng, cfg.height.lo, cfg.height.hi);

    const int n_partitions = uniform_int(rng, cfg.partitions.lo, cfg.partitions.hi);
    std::vector<std::pair<bool, double>> placed_partitions;
    for (int p = 0; p < n_partitions; ++p) {
        bool done = false;
        for (int attempt = 0; attempt < cfg.retry_budget && !done; ++attempt) {
            const bool vertical = uniform_int(rng, 0, 1) == 1;
            double position = 0.0;
            auto segments = make_partition(rng, cfg, scene.width, scene.height, vertical, position);
            const bool too_close = std::any_of(placed_partitions.begin(), placed_partitions.end(), [&](auto& prev) {
                return prev.first == vertical && std::abs(prev.second - position) < 1.0;
            });
            if (too_close) continue;
            placed_partitions.emplace_back(vertical, position);
            scene.walls.insert(scene.walls.end(), segments.begin(), segments.end());
            done = true;
        }
        if (!done) throw PlacementExhausted("could not place partition " + std::to_string(p));
    }

    const int n_objects = uniform_int(rng, cfg.objects.lo, cfg.objects.hi);
    const int n_cat = static_cast<int>(cfg.vocab.categories.size());
    const int n_col = static_cast<int>(cfg.vocab.colors.size());
    for (int i = 0; i < n_objects; ++i) {
        SceneObject obj;
        obj.id = object_id(i);
        obj.category = cfg.vocab.categories[uniform_int(rng, 0, n_cat - 1)];
        obj.color = cfg.vocab.colors[uniform_int(rng, 0, n_col - 1)];
        obj.side_visible = uniform(rng, 0.0, 1.0) < cfg.side_visible_probability;
        bool placed = false;
        for (int attempt = 0; attempt < cfg.retry_budget && !placed; ++attempt) {
            const double w = uniform(rng, cfg.object_side.lo, cfg.object_side.hi);
            const double h = uniform(rng, cfg.object_side.lo, cfg.object_side.hi);
            const double max_x = scene.width - w - cfg.clearance;
            const double max_y = scene.height - h - cfg.clearance;
            if (max_x < cfg.clearance || max_y < cfg.clearance) continue;
            const double x0 = uniform(rng, cfg.clearance, max_x);
            const double y0 = uniform(rng, cfg.clearance, max_y);
            const Rect fp{x0, y0, x0 + w, y0 + h};
            const Rect padded = fp.inflated(cfg.clearance);
            const bool hits_object = std::any_of(scene.objects.begin(), scene.objects.end(),
                                                 [&](const SceneObject& o) { return rects_overlap(padded, o.footprint); });
            if (hits_object) continue;
            const bool hits_wall = std::any_of(scene.walls.begin(), scene.walls.end(),
                                               [&](const Segment& s) { return segment_hits_rect(s, padded); });
            if (hits_wall) continue;
            obj.footprint = fp;
            placed = true;
        }
        if (!placed) throw PlacementExhausted("retry budget exceeded placing " + obj.id);
        scene.objects.push_back(std::move(obj));
    }
    return scene;
}

Vec2 NavGrid::cell_center(int cell) const {
    const int ix = cell % nx;
    const int iy = cell / nx;
    return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
}

int NavGrid::cell_at(Vec2 p) const {
    const double fx = (p.x - origin.x) / cell_size;
    const double fy = (p.y - origin.y) / cell_size;
    if (fx < 0.0 || fy < 0.0) return -1;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    if (ix >= nx || iy >= ny) return -1;
    return index(ix, iy);
}

int NavGrid::navigable_count() const {
    return static_cast<int>(std::count(navigable.begin(), navigable.end(), true));
}

std::vector<int> NavGrid::navigable_cells() const {
    std::vector<int> out;
    for (int i = 0; i < cell_count(); ++i) {
        if (navigable[i]) out.push_back(i);
    }
    return out;
}

bool point_is_navigable(const Scene& scene, Vec2 p, double wall_buffer) {
    if (!scene.bounds().contains_strict(p)) return false;
    for (const auto& o : scene.objects) {
        if (o.footprint.contains(p)) return false;
    }
    for (const auto& w : scene.walls) {
        if (point_segment_distance(p, w) < wall_buffer) return false;
    }
    return true;
}

NavGrid build_navgrid(const Scene& scene, const NavGridOptions& options) {
    if (!(options.cell_size > 0.0)) throw InvalidArgument("cell_size must be positive");
    if (!(options.wall_buffer >= 0.0)) throw InvalidArgument("wall_buffer must be non-negative");
    NavGrid grid;
    grid.origin = {0.0, 0.0};
    grid.cell_size = options.cell_size;
    grid.nx = std::max(static_cast<int>(std::ceil(scene.width / options.cell_size - 1e-9)), options.min_cells);
    grid.ny = std::max(static_cast<int>(std::ceil(scene.height / options.cell_size - 1e-9)), options.min_cells);
    grid.navigable.assign(static_cast<std::size_t>(grid.nx) * grid.ny, false);
    for (int c = 0; c < grid.cell_count(); ++c) {
        grid.navigable[c] = point_is_navigable(scene, grid.cell_center(c), options.wall_buffer);
    }
    if (grid.navigable_count() == 0) throw NoNavigableCell("every cell of " + scene.id + " is blocked");
    return grid;
}

NavGrid build_navgrid(const Scene& scene, double cell_size, double wall_buffer) {
    return build_navgrid(scene, NavGridOptions{cell_size, wall_buffer, 0});
}

// --- serialization -------------------------------------------------------

nlohmann::json to_json(const Scene& scene) {
    nlohmann::json walls = nlohmann::json::array();
    for (const auto& w : scene.walls) walls.push_back({{w.a.x, w.a.y}, {w.b.x, w.b.y}});
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : scene.objects) {
        objects.push_back({{"id", o.id},
                           {"category", o.category},
                           {"color", o.color},
                           {"footprint", {o.footprint.x0, o.footprint.y0, o.footprint.x1, o.footprint.y1}},
                           {"side_visible", o.side_visible}});
    }
    return {{"schema", "ansfield.scene/1"}, {"units", "meters"},  {"id", scene.id}, {"width", scene.width},
            {"height", scene.height},       {"walls", walls},     {"objects", objects}};
}

Scene scene_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema") != "ansfield.scene/1") throw FormatError("unsupported scene schema");
        if (j.at("units") != "meters") throw FormatError("scene units must be meters");
        Scene s;
        s.id = j.at("id").get<std::string>();
        s.width = j.at("width").get<double>();
        s.height = j.at("height").get<double>();
        for (const auto& w : j.at("walls")) {
            s.walls.push_back({{w[0][0].get<double>(), w[0][1].get<double>()},
                               {w[1][0].get<double>(), w[1][1].get<double>()}});
        }
        for (const auto& o : j.at("objects")) {
            const auto& f = o.at("footprint");
            s.objects.push_back({o.at("id").get<std::string>(), o.at("category").get<std::string>(),
                                 o.at("color").get<std::string>(),
                                 {f[0].get<double>(), f[1].get<double>(), f[2].get<double>(), f[3].get<double>()},
                                 o.at("side_visible").get<bool>()});
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("scene json: ") + e.what());
    }
}

nlohmann::json to_json(const NavGrid& grid) {
    std::string bits(grid.navigable.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = grid.navigable[i] ? '1' : '0';
    return {{"schema", "ansfield.navgrid/1"}, {"units", "meters"}, {"origin", {grid.origin.x, grid.origin.y}},
            {"cell_size", grid.cell_size},    {"nx", grid.nx},     {"ny", grid.ny},
            {"navigable", bits}};
}

NavGrid navgrid_from_json(const nlohmann::json& j) {
    try {
        NavGrid g;
        g.origin = {j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>()};
        g.cell_size = j.at("cell_size").get<double>();
        g.nx = j.at("nx").get<int>();
        g.ny = j.at("ny").get<int>();
        const auto bits = j.at("navigable").get<std::string>();
        if (bits.size() != static_cast<std::size_t>(g.nx) * g.ny) throw FormatError("navgrid bitstring length");
        g.navigable.resize(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) g.navigable[i] = bits[i] == '1';
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("navgrid json: ") + e.what());
    }
}

nlohmann::json to_json(const Vocabulary& vocab) {
    return {{"version", vocab.version}, {"categories", vocab.categories}, {"colors", vocab.colors}};
}

Vocabulary vocabulary_from_json(const nlohmann::json& j) {
    return {j.at("version").get<std::string>(), j.at("categories").get<std::vector<std::string>>(),
            j.at("colors").get<std::vector<std::string>>()};
}

nlohmann::json to_json(const SceneConfig& c) {
    return {{"width", {c.width.lo, c.width.hi}},
            {"height", {c.height.lo, c.height.hi}},
            {"objects", {c.objects.lo, c.objects.hi}},
            {"partitions", {c.partitions.lo, c.partitions.hi}},
            {"object_side", {c.object_side.lo, c.object_side.hi}},
            {"door_width", c.door_width},
            {"clearance", c.clearance},
            {"side_visible_probability", c.side_visible_probability},
            {"retry_budget", c.retry_budget},
            {"vocab", to_json(c.vocab)}};
}

SceneConfig scene_config_from_json(const nlohmann::json& j) {
    SceneConfig c;
    auto range = [&](const char* key, Range& r) {
        if (j.contains(key)) r = {j[key][0].get<double>(), j[key][1].get<double>()};
    };
    auto count = [&](const char* key, CountRange& r) {
        if (j.contains(key)) r = {j[key][0].get<int>(), j[key][1].get<int>()};
    };
    range("width", c.width);
    range("height", c.height);
    count("objects", c.objects);
    count("partitions", c.partitions);
    range("object_side", c.object_side);
    c.door_width = j.value("door_width", c.door_width);
    c.clearance = j.value("clearance", c.clearance);
    c.side_visible_probability = j.value("side_visible_probability", c.side_visible_probability);
    c.retry_budget = j.value("retry_budget", c.retry_budget);
    if (j.contains("vocab")) c.vocab = vocabulary_from_json(j["vocab"]);
    return c;
}

}  // namespace ansfield
