#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ansfield/geometry.hpp"

namespace ansfield {

/// Closed category and color vocabularies shared by scenes and questions.
struct Vocabulary {
    std::string version;
    std::vector<std::string> categories;
    std::vector<std::string> colors;

    static const Vocabulary& builtin();

    int category_index(const std::string& c) const;  // -1 when absent
    int color_index(const std::string& c) const;
};

struct SceneObject {
    std::string id;
    std::string category;
    std::string color;
    Rect footprint;
    /// Color only observable from agent height, not from above.
    bool side_visible = false;

    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Scene {
    std::string id;
    double width = 0.0;
    double height = 0.0;
    std::vector<Segment> walls;
    std::vector<SceneObject> objects;

    Rect bounds() const { return {0.0, 0.0, width, height}; }
    /// Index of the object with this id, or nullopt.
    std::optional<std::size_t> find(const std::string& object_id) const;
    /// Throws InvalidArgument when any scene invariant fails.
    void validate(const Vocabulary& vocab = Vocabulary::builtin()) const;

    friend bool operator==(const Scene&, const Scene&) = default;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct CountRange {
    int lo = 0;
    int hi = 0;
};

struct SceneConfig {
    Range width{4.0, 6.0};
    Range height{4.0, 6.0};
    CountRange objects{3, 7};
    CountRange partitions{0, 2};
    Range object_side{0.3, 1.2};
    double door_width = 0.9;
    /// Minimum clearance between footprints, and between footprints and walls.
    double clearance = 0.1;
    double side_visible_probability = 0.5;
    int retry_budget = 1000;
    Vocabulary vocab = Vocabulary::builtin();
};

Scene generate_scene(std::uint64_t seed, const SceneConfig& config);

struct Pose {
    double x = 0.0;
    double y = 0.0;
    Vec2 point() const { return {x, y}; }
    friend bool operator==(const Pose&, const Pose&) = default;
};

struct NavGrid {
    Vec2 origin;
    double cell_size = 0.0;
    int nx = 0;
    int ny = 0;
    std::vector<bool> navigable;  // row-major, index = iy * nx + ix

    int cell_count() const { return nx * ny; }
    int index(int ix, int iy) const { return iy * nx + ix; }
    Vec2 cell_center(int cell) const;
    /// Cell containing p, or -1 outside the grid.
    int cell_at(Vec2 p) const;
    int navigable_count() const;
    std::vector<int> navigable_cells() const;

    friend bool operator==(const NavGrid&, const NavGrid&) = default;
};

struct NavGridOptions {
    double cell_size = 0.25;
    double wall_buffer = 0.1;
    /// Pad the grid to at least this many cells per axis (fixed raster canvases).
    int min_cells = 0;
};

NavGrid build_navgrid(const Scene& scene, const NavGridOptions& options = {});
NavGrid build_navgrid(const Scene& scene, double cell_size, double wall_buffer);

/// Geometric test used to classify a single cell center.
bool point_is_navigable(const Scene& scene, Vec2 p, double wall_buffer);

nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NavGrid& grid);
NavGrid navgrid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneConfig& config);
SceneConfig scene_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

}  // namespace ansfield
