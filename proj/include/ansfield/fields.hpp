#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ansfield/qa.hpp"
#include "ansfield/scene.hpp"

namespace ansfield {

/// Per-cell answerability over a navigation grid. Non-navigable cells hold NaN.
struct Field {
    NavGrid grid;
    std::vector<double> scores;

    bool has_score(int cell) const { return grid.navigable[cell]; }
    double max_score() const;
    /// Navigable cell with the highest score (ties: lowest index), -1 when none.
    int argmax() const;
};

struct FieldOptions {
    int n_samples = kDefaultBoundarySamples;
    ViewingBand band;
    int workers = 0;  // 0: worker_count()
};

Field compute_field(const Scene& scene, const NavGrid& grid, const Question& q, const FieldOptions& options = {});

/// Divides by the field maximum; an all-zero field stays all-zero.
Field normalize(const Field& field);

using Rgb = std::array<std::uint8_t, 3>;

namespace palette {
inline constexpr Rgb kWall{64, 64, 64};
inline constexpr Rgb kObject{128, 128, 128};
inline constexpr Rgb kFloor{224, 224, 224};
inline constexpr Rgb kTopPoint{255, 0, 0};
inline constexpr Rgb kBBox{0, 0, 255};
}  // namespace palette

/// 2×3 affine map from scene meters to pixel coordinates: [a b c; d e f].
using Affine2 = std::array<double, 6>;

Vec2 apply(const Affine2& t, Vec2 p);
Vec2 apply_inverse(const Affine2& t, Vec2 p);

struct FieldRaster {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;  // row-major
    Affine2 transform{};
    std::vector<bool> navmask;
    std::string question_id;

    Rgb& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    const Rgb& at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    /// Scene-space point at the center of a pixel.
    Vec2 pixel_center(int row, int col) const;
    /// Pixel (row, col) containing a scene point; may fall outside the image.
    std::pair<int, int> pixel_of(Vec2 p) const;
};

struct AnnotationOptions {
    bool toppoint = false;
    bool bbox = false;
};

inline constexpr int kDefaultPxPerCell = 2;

/// Top-down render (walls, footprints, floor) with transform and navmask, no scores.
FieldRaster render_topdown(const Scene& scene, const NavGrid& grid, int px_per_cell = kDefaultPxPerCell);

FieldRaster encode_raster(const Field& field, const Scene& scene, const Question& q, const AnnotationOptions& options,
                          int px_per_cell = kDefaultPxPerCell);

Field decode_field(const FieldRaster& raster, const NavGrid& grid);

Pose best_viewpoint(const FieldRaster& raster, const NavGrid& grid);

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const FieldRaster& raster);
std::string encode_ppm(const FieldRaster& raster);
/// Reads pixels only; transform/navmask come from the sidecar.
FieldRaster read_ppm(const std::filesystem::path& path);
FieldRaster decode_ppm(const std::string& bytes);

nlohmann::json raster_sidecar(const FieldRaster& raster, const NavGrid& grid);
/// Writes `<stem>.ppm` and `<stem>.meta.json`.
void save_raster(const std::filesystem::path& stem, const FieldRaster& raster, const NavGrid& grid);
/// Loads a raster and its grid from `<stem>.ppm` + `<stem>.meta.json`.
FieldRaster load_raster(const std::filesystem::path& stem, NavGrid* grid = nullptr);

nlohmann::json to_json(const Field& field);

}  // namespace ansfield
