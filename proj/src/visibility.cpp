#include "ansfield/visibility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ansfield/errors.hpp"

namespace ansfield {

namespace {

// Closest distance from p to the boundary arc [s_a, s_b] (arc length, may wrap).
double boundary_piece_distance(const Rect& r, double s_a, double s_b, Vec2 p) {
    const double w = r.width();
    const double h = r.height();
    const double perim = r.perimeter();
    const std::array<double, 4> corners{0.0, w, w + h, 2.0 * w + h};
    std::vector<double> cuts{s_a};
    for (double base : {-perim, 0.0, perim}) {
        for (double c : corners) {
            const double s = c + base;
            if (s > s_a && s < s_b) cuts.push_back(s);
        }
    }
    cuts.push_back(s_b);
    std::sort(cuts.begin(), cuts.end());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Segment seg{r.boundary_point(cuts[i]), r.boundary_point(cuts[i + 1])};
        best = std::min(best, point_segment_distance(p, seg));
    }
    return best;
}

// Angular interval (relative to ref) subtended by the boundary arc [s_a, s_b]. The viewer is
// outside the rectangle, so each straight piece sweeps monotonically and the extremes sit at
// the piece ends or at corners inside it.
std::pair<double, double> boundary_piece_angles(const Rect& r, double s_a, double s_b, Vec2 p, double ref) {
    const double w = r.width();
    const double h = r.height();
    const double perim = r.perimeter();
    const std::array<double, 4> corners{0.0, w, w + h, 2.0 * w + h};
    auto angle = [&](double s) {
        const Vec2 q = r.boundary_point(s);
        return wrap_angle(std::atan2(q.y - p.y, q.x - p.x) - ref);
    };
    double lo = std::min(angle(s_a), angle(s_b));
    double hi = std::max(angle(s_a), angle(s_b));
    for (double base : {-perim, 0.0, perim}) {
        for (double c : corners) {
            const double s = c + base;
            if (s > s_a && s < s_b) {
                lo = std::min(lo, angle(s));
                hi = std::max(hi, angle(s));
            }
        }
    }
    return {lo, hi};
}

}  // namespace

bool occluded_excluding(const Scene& scene, Vec2 p, Vec2 q, int skip_object) {
    for (const auto& w : scene.walls) {
        if (open_segment_hits_segment(p, q, w)) return true;
    }
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (static_cast<int>(i) == skip_object) continue;
        if (open_segment_hits_rect(p, q, scene.objects[i].footprint)) return true;
    }
    return false;
}

bool occluded(const Scene& scene, Vec2 p, Vec2 q) {
    int owner = -1;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (scene.objects[i].footprint.contains(q)) {
            owner = static_cast<int>(i);
            break;
        }
    }
    return occluded_excluding(scene, p, q, owner);
}

Observation observe(const Scene& scene, const Pose& pose, const std::string& object_id, int n_samples) {
    const auto idx = scene.find(object_id);
    if (!idx) throw UnknownObject(object_id + " not in " + scene.id);
    if (n_samples < 8) throw InvalidArgument("n_samples must be at least 8");

    const Rect& fp = scene.objects[*idx].footprint;
    const Vec2 v = pose.point();
    const double spacing = fp.perimeter() / n_samples;
    const Vec2 c = fp.center();
    const double ref = std::atan2(c.y - v.y, c.x - v.x);

    std::vector<char> visible(n_samples);
    int n_visible = 0;
    for (int k = 0; k < n_samples; ++k) {
        const Vec2 q = fp.boundary_point((k + 0.5) * spacing);
        visible[k] = !occluded_excluding(scene, v, q, static_cast<int>(*idx));
        n_visible += visible[k];
    }

    Observation obs;
    obs.object_id = object_id;
    if (n_visible == 0) return obs;
    obs.visible_fraction = static_cast<double>(n_visible) / n_samples;

    // Each visible sample stands for its own boundary piece of length `spacing`.
    std::vector<std::pair<double, double>> arcs;
    arcs.reserve(n_visible);
    for (int k = 0; k < n_samples; ++k) {
        if (!visible[k]) continue;
        const double s_a = k * spacing;
        const double s_b = (k + 1) * spacing;
        arcs.push_back(boundary_piece_angles(fp, s_a, s_b, v, ref));
        obs.distance = std::min(obs.distance, boundary_piece_distance(fp, s_a, s_b, v));
    }
    std::sort(arcs.begin(), arcs.end());
    double total = 0.0;
    double lo = arcs.front().first;
    double hi = arcs.front().second;
    for (const auto& [a, b] : arcs) {
        if (a > hi) {
            total += hi - lo;
            lo = a;
            hi = b;
        } else {
            hi = std::max(hi, b);
        }
    }
    total += hi - lo;
    obs.angular_extent = total;
    return obs;
}

std::vector<Observation> observe_objects(const Scene& scene, const Pose& pose, const std::vector<std::string>& ids,
                                         int n_samples) {
    std::vector<Observation> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(observe(scene, pose, id, n_samples));
    return out;
}

std::vector<Observation> panorama(const Scene& scene, const Pose& pose, int n_samples) {
    std::vector<std::string> ids;
    ids.reserve(scene.objects.size());
    for (const auto& o : scene.objects) ids.push_back(o.id);
    std::sort(ids.begin(), ids.end());
    return observe_objects(scene, pose, ids, n_samples);
}

double subtended_angle(const Rect& fp, Vec2 p) {
    const Vec2 c = fp.center();
    const double ref = std::atan2(c.y - p.y, c.x - p.x);
    double lo = 0.0;
    double hi = 0.0;
    for (Vec2 corner : {Vec2{fp.x0, fp.y0}, Vec2{fp.x1, fp.y0}, Vec2{fp.x1, fp.y1}, Vec2{fp.x0, fp.y1}}) {
        const double a = wrap_angle(std::atan2(corner.y - p.y, corner.x - p.x) - ref);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    return hi - lo;
}

nlohmann::json to_json(const Observation& o) {
    nlohmann::json j{{"object_id", o.object_id},
                     {"visible_fraction", o.visible_fraction},
                     {"angular_extent", o.angular_extent}};
    if (std::isfinite(o.distance)) {
        j["distance"] = o.distance;
    } else {
        j["distance"] = nullptr;
    }
    return j;
}

}  // namespace ansfield
