#include "ansfield/fields.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ansfield/errors.hpp"
#include "ansfield/parallel.hpp"

namespace ansfield {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string bitstring(const std::vector<bool>& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
    return s;
}

std::vector<bool> from_bitstring(const std::string& s) {
    std::vector<bool> bits(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) bits[i] = s[i] == '1';
    return bits;
}

Affine2 grid_transform(const NavGrid& grid, int px_per_cell) {
    const double scale = px_per_cell / grid.cell_size;
    return {scale, 0.0, -grid.origin.x * scale, 0.0, scale, -grid.origin.y * scale};
}

// Pixels per cell implied by a raster's transform, or throws when raster and grid disagree.
int check_transform(const FieldRaster& r, const NavGrid& g) {
    const auto& t = r.transform;
    const double ppc_real = t[0] * g.cell_size;
    const int ppc = static_cast<int>(std::lround(ppc_real));
    const double tol = 1e-9 * std::max(1.0, std::abs(t[0]));
    const bool ok = ppc >= 1 && std::abs(ppc_real - ppc) < 1e-6 && t[1] == 0.0 && t[3] == 0.0 &&
                    std::abs(t[4] - t[0]) < tol && std::abs(t[2] + g.origin.x * t[0]) < 1e-6 &&
                    std::abs(t[5] + g.origin.y * t[4]) < 1e-6 && r.width == g.nx * ppc && r.height == g.ny * ppc &&
                    r.pixels.size() == static_cast<std::size_t>(r.width) * r.height &&
                    r.navmask.size() == r.pixels.size();
    if (!ok) throw TransformMismatch("raster does not match a " + std::to_string(g.nx) + "x" + std::to_string(g.ny) +
                                     " grid");
    return ppc;
}

}  // namespace

double Field::max_score() const {
    double m = 0.0;
    for (int c = 0; c < grid.cell_count(); ++c) {
        if (has_score(c)) m = std::max(m, scores[c]);
    }
    return m;
}

int Field::argmax() const {
    int best = -1;
    for (int c = 0; c < grid.cell_count(); ++c) {
        if (has_score(c) && (best < 0 || scores[c] > scores[best])) best = c;
    }
    return best;
}

Field compute_field(const Scene& scene, const NavGrid& grid, const Question& q, const FieldOptions& options) {
    for (const auto& id : q.referenced_ids) {
        if (!scene.find(id)) throw UnknownObject(id + " referenced by " + q.id);
    }
    Field field{grid, std::vector<double>(grid.cell_count(), kNaN)};
    const std::vector<int> cells = grid.navigable_cells();
    parallel_for(
        static_cast<int>(cells.size()),
        [&](int i) {
            const Vec2 c = grid.cell_center(cells[i]);
            const auto obs = observe_objects(scene, Pose{c.x, c.y}, q.referenced_ids, options.n_samples);
            field.scores[cells[i]] = answerability(q, obs, options.band);
        },
        options.workers > 0 ? options.workers : worker_count());
    return field;
}

Field normalize(const Field& field) {
    Field out = field;
    const double m = field.max_score();
    for (int c = 0; c < field.grid.cell_count(); ++c) {
        if (!field.has_score(c)) continue;
        out.scores[c] = m > 0.0 ? field.scores[c] / m : 0.0;
    }
    return out;
}

Vec2 apply(const Affine2& t, Vec2 p) { return {t[0] * p.x + t[1] * p.y + t[2], t[3] * p.x + t[4] * p.y + t[5]}; }

Vec2 apply_inverse(const Affine2& t, Vec2 p) {
    const double det = t[0] * t[4] - t[1] * t[3];
    if (det == 0.0) throw TransformMismatch("singular raster transform");
    const double x = p.x - t[2];
    const double y = p.y - t[5];
    return {(t[4] * x - t[1] * y) / det, (-t[3] * x + t[0] * y) / det};
}

Vec2 FieldRaster::pixel_center(int row, int col) const { return apply_inverse(transform, {col + 0.5, row + 0.5}); }

std::pair<int, int> FieldRaster::pixel_of(Vec2 p) const {
    const Vec2 px = apply(transform, p);
    return {static_cast<int>(std::floor(px.y)), static_cast<int>(std::floor(px.x))};
}

FieldRaster render_topdown(const Scene& scene, const NavGrid& grid, int px_per_cell) {
    if (px_per_cell < 1) throw InvalidArgument("px_per_cell must be >= 1");
    FieldRaster r;
    r.width = grid.nx * px_per_cell;
    r.height = grid.ny * px_per_cell;
    r.transform = grid_transform(grid, px_per_cell);
    r.pixels.assign(static_cast<std::size_t>(r.width) * r.height, palette::kFloor);
    r.navmask.assign(r.pixels.size(), false);
    const double half_px = 0.5 * grid.cell_size / px_per_cell;
    const Rect bounds = scene.bounds();
    for (int row = 0; row < r.height; ++row) {
        for (int col = 0; col < r.width; ++col) {
            const Vec2 p = r.pixel_center(row, col);
            Rgb color = palette::kFloor;
            if (!bounds.contains(p)) {
                color = palette::kWall;
            } else {
                for (const auto& o : scene.objects) {
                    if (o.footprint.contains(p)) color = palette::kObject;
                }
                for (const auto& w : scene.walls) {
                    if (point_segment_distance(p, w) <= half_px) color = palette::kWall;
                }
            }
            r.at(row, col) = color;
            const int cell = grid.cell_at(p);
            r.navmask[static_cast<std::size_t>(row) * r.width + col] = cell >= 0 && grid.navigable[cell];
        }
    }
    return r;
}

FieldRaster encode_raster(const Field& field, const Scene& scene, const Question& q, const AnnotationOptions& options,
                          int px_per_cell) {
    FieldRaster r = render_topdown(scene, field.grid, px_per_cell);
    r.question_id = q.id;
    const NavGrid& g = field.grid;
    auto paint_cell = [&](int cell, Rgb color) {
        const int ix = cell % g.nx;
        const int iy = cell / g.nx;
        for (int dy = 0; dy < px_per_cell; ++dy) {
            for (int dx = 0; dx < px_per_cell; ++dx) r.at(iy * px_per_cell + dy, ix * px_per_cell + dx) = color;
        }
    };
    for (int c = 0; c < g.cell_count(); ++c) {
        if (!field.has_score(c)) continue;
        const double s = std::clamp(field.scores[c], 0.0, 1.0);
        paint_cell(c, Rgb{static_cast<std::uint8_t>(std::lround(255.0 * s)), 0, 0});
    }
    if (options.bbox) {
        for (const auto& id : q.referenced_ids) {
            const auto idx = scene.find(id);
            if (!idx) throw UnknownObject(id + " referenced by " + q.id);
            const Rect& fp = scene.objects[*idx].footprint;
            auto [r0, c0] = r.pixel_of({fp.x0, fp.y0});
            auto [r1, c1] = r.pixel_of({fp.x1, fp.y1});
            r0 = std::clamp(r0, 0, r.height - 1);
            r1 = std::clamp(r1, 0, r.height - 1);
            c0 = std::clamp(c0, 0, r.width - 1);
            c1 = std::clamp(c1, 0, r.width - 1);
            for (int col = c0; col <= c1; ++col) {
                r.at(r0, col) = palette::kBBox;
                r.at(r1, col) = palette::kBBox;
            }
            for (int row = r0; row <= r1; ++row) {
                r.at(row, c0) = palette::kBBox;
                r.at(row, c1) = palette::kBBox;
            }
        }
    }
    if (options.toppoint) {
        const int best = field.argmax();
        if (best >= 0 && field.scores[best] > 0.0) paint_cell(best, palette::kTopPoint);
    }
    return r;
}

Field decode_field(const FieldRaster& raster, const NavGrid& grid) {
    const int ppc = check_transform(raster, grid);
    Field f{grid, std::vector<double>(grid.cell_count(), kNaN)};
    for (int c = 0; c < grid.cell_count(); ++c) {
        if (!grid.navigable[c]) continue;
        const int ix = c % grid.nx;
        const int iy = c / grid.nx;
        double sum = 0.0;
        int n = 0;
        for (int dy = 0; dy < ppc; ++dy) {
            for (int dx = 0; dx < ppc; ++dx) {
                const int row = iy * ppc + dy;
                const int col = ix * ppc + dx;
                if (!raster.navmask[static_cast<std::size_t>(row) * raster.width + col]) continue;
                sum += raster.at(row, col)[0];
                ++n;
            }
        }
        f.scores[c] = n > 0 ? sum / (255.0 * n) : 0.0;
    }
    return f;
}

Pose best_viewpoint(const FieldRaster& raster, const NavGrid& grid) {
    check_transform(raster, grid);
    int best = -1;
    for (int i = 0; i < raster.width * raster.height; ++i) {
        if (!raster.navmask[i]) continue;
        if (best < 0 || raster.pixels[i][0] > raster.pixels[best][0]) best = i;
    }
    if (best < 0) throw EmptyNavmask("raster has no navigable pixels");
    const Vec2 p = raster.pixel_center(best / raster.width, best % raster.width);
    int cell = grid.cell_at(p);
    if (cell < 0 || !grid.navigable[cell]) {
        // Navmask disagrees with the grid; fall back to the nearest navigable cell.
        double best_d = std::numeric_limits<double>::infinity();
        for (int c : grid.navigable_cells()) {
            const double d = distance(grid.cell_center(c), p);
            if (d < best_d) {
                best_d = d;
                cell = c;
            }
        }
    }
    const Vec2 c = grid.cell_center(cell);
    return {c.x, c.y};
}

// --- PPM + sidecar -------------------------------------------------------

std::string encode_ppm(const FieldRaster& raster) {
    std::ostringstream os;
    os << "P6\n" << raster.width << " " << raster.height << "\n255\n";
    std::string out = os.str();
    out.reserve(out.size() + raster.pixels.size() * 3);
    for (const auto& px : raster.pixels) out.append(reinterpret_cast<const char*>(px.data()), 3);
    return out;
}

void write_ppm(const std::filesystem::path& path, const FieldRaster& raster) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write " + path.string());
    f << encode_ppm(raster);
}

FieldRaster decode_ppm(const std::string& bytes) {
    std::istringstream is(bytes);
    std::string magic;
    int w = 0;
    int h = 0;
    int maxval = 0;
    is >> magic;
    auto skip_comments = [&] {
        is >> std::ws;
        while (is.peek() == '#') {
            std::string line;
            std::getline(is, line);
            is >> std::ws;
        }
    };
    skip_comments();
    is >> w;
    skip_comments();
    is >> h;
    skip_comments();
    is >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw FormatError("expected P6 PPM with maxval 255");
    is.get();  // single whitespace before the pixel data
    FieldRaster r;
    r.width = w;
    r.height = h;
    r.pixels.resize(static_cast<std::size_t>(w) * h);
    is.read(reinterpret_cast<char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size() * 3));
    if (is.gcount() != static_cast<std::streamsize>(r.pixels.size() * 3)) throw FormatError("truncated PPM data");
    r.navmask.assign(r.pixels.size(), false);
    return r;
}

FieldRaster read_ppm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_ppm(ss.str());
}

nlohmann::json raster_sidecar(const FieldRaster& raster, const NavGrid& grid) {
    return {{"schema", "ansfield.raster/1"},
            {"width", raster.width},
            {"height", raster.height},
            {"transform", raster.transform},
            {"grid", to_json(grid)},
            {"navmask", bitstring(raster.navmask)},
            {"question_id", raster.question_id}};
}

void save_raster(const std::filesystem::path& stem, const FieldRaster& raster, const NavGrid& grid) {
    write_ppm(std::filesystem::path(stem.string() + ".ppm"), raster);
    std::ofstream meta(stem.string() + ".meta.json");
    if (!meta) throw FormatError("cannot write sidecar for " + stem.string());
    meta << raster_sidecar(raster, grid).dump(1) << "\n";
}

FieldRaster load_raster(const std::filesystem::path& stem, NavGrid* grid) {
    FieldRaster r = read_ppm(stem.string() + ".ppm");
    std::ifstream meta(stem.string() + ".meta.json");
    if (!meta) throw FormatError("missing sidecar for " + stem.string());
    try {
        const auto j = nlohmann::json::parse(meta);
        if (j.at("width").get<int>() != r.width || j.at("height").get<int>() != r.height) {
            throw FormatError("sidecar dimensions disagree with PPM");
        }
        r.transform = j.at("transform").get<Affine2>();
        r.navmask = from_bitstring(j.at("navmask").get<std::string>());
        if (r.navmask.size() != r.pixels.size()) throw FormatError("navmask length");
        r.question_id = j.value("question_id", "");
        if (grid) *grid = navgrid_from_json(j.at("grid"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("raster sidecar: ") + e.what());
    }
    return r;
}

nlohmann::json to_json(const Field& field) {
    nlohmann::json scores = nlohmann::json::array();
    for (int c = 0; c < field.grid.cell_count(); ++c) {
        if (field.has_score(c)) {
            scores.push_back(field.scores[c]);
        } else {
            scores.push_back(nullptr);
        }
    }
    return {{"grid", to_json(field.grid)}, {"scores", scores}};
}

}  // namespace ansfield
