#pragma once

// Independent brute-force references used only by tests. Nothing here calls
// into the library's geometry or visibility code paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ansfield/scene.hpp"

namespace oracle {

using ansfield::Rect;
using ansfield::Scene;
using ansfield::Segment;
using ansfield::Vec2;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool point_in_rect(Vec2 p, const Rect& r) {
    return !(p.x < r.x0 || p.x > r.x1 || p.y < r.y0 || p.y > r.y1);
}

/// Closed rectangles intersect iff their projections overlap on both axes.
inline bool rects_intersect(const Rect& a, const Rect& b) {
    const bool x_apart = a.x1 < b.x0 || b.x1 < a.x0;
    const bool y_apart = a.y1 < b.y0 || b.y1 < a.y0;
    return !(x_apart || y_apart);
}

/// Distance from p to a segment by dense parametric sampling followed by a
/// golden-section refinement of the (convex) squared-distance profile.
inline double segment_distance_search(Vec2 p, const Segment& s) {
    auto dist2 = [&](double t) {
        const double x = s.a.x + t * (s.b.x - s.a.x) - p.x;
        const double y = s.a.y + t * (s.b.y - s.a.y) - p.y;
        return x * x + y * y;
    };
    double lo = 0.0;
    double hi = 1.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 200; ++i) {
        const double m1 = hi - g * (hi - lo);
        const double m2 = lo + g * (hi - lo);
        if (dist2(m1) < dist2(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return std::sqrt(std::min({dist2(0.0), dist2(1.0), dist2(0.5 * (lo + hi))}));
}

/// Closed-form distance from a point to an axis-aligned rectangle (0 inside).
inline double rect_distance_closed_form(Vec2 p, const Rect& r) {
    const double cx = std::clamp(p.x, r.x0, r.x1);
    const double cy = std::clamp(p.y, r.y0, r.y1);
    return std::sqrt((p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy));
}

/// Brute-force navigability of a point.
inline bool navigable(const Scene& scene, Vec2 p, double wall_buffer) {
    if (!(p.x > 0.0 && p.x < scene.width && p.y > 0.0 && p.y < scene.height)) return false;
    for (const auto& o : scene.objects) {
        if (point_in_rect(p, o.footprint)) return false;
    }
    for (const auto& w : scene.walls) {
        if (segment_distance_search(p, w) < wall_buffer - 1e-12) return false;
    }
    return true;
}

/// Does the sampled open segment (p,q) cross the wall? Sign change of the
/// signed distance to the wall line between consecutive samples, with the
/// crossing point projecting inside the wall's extent.
inline bool sampled_crosses_wall(Vec2 p, Vec2 q, const Segment& w, int n) {
    const double wx = w.b.x - w.a.x;
    const double wy = w.b.y - w.a.y;
    const double wl2 = wx * wx + wy * wy;
    auto side = [&](Vec2 s) { return wx * (s.y - w.a.y) - wy * (s.x - w.a.x); };
    auto along = [&](Vec2 s) { return ((s.x - w.a.x) * wx + (s.y - w.a.y) * wy) / wl2; };
    Vec2 prev = p;
    double prev_side = side(prev);
    for (int i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) / (n + 1);
        const Vec2 s{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        const double cur = side(s);
        if (i > 1 && (cur == 0.0 || (prev_side < 0.0) != (cur < 0.0))) {
            const double f = prev_side / (prev_side - cur);
            const Vec2 x{prev.x + f * (s.x - prev.x), prev.y + f * (s.y - prev.y)};
            const double u = along(x);
            if (u >= 0.0 && u <= 1.0) return true;
        }
        prev = s;
        prev_side = cur;
    }
    return false;
}

/// Point-sampling occlusion oracle: n interior points along (p,q) tested against
/// every footprint except the one containing q, plus wall crossings.
inline bool occluded_sampled(const Scene& scene, Vec2 p, Vec2 q, int n = 1000) {
    int owner = -1;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (point_in_rect(q, scene.objects[i].footprint)) {
            owner = static_cast<int>(i);
            break;
        }
    }
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (static_cast<int>(i) == owner) continue;
        for (int k = 1; k <= n; ++k) {
            const double t = static_cast<double>(k) / (n + 1);
            if (point_in_rect({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)}, scene.objects[i].footprint)) return true;
        }
    }
    for (const auto& w : scene.walls) {
        if (sampled_crosses_wall(p, q, w, n)) return true;
    }
    return false;
}

// --- dense-ray visibility ------------------------------------------------

/// Ray/segment hit distance by solving the 2×2 system with Cramer's rule.
inline double ray_wall(Vec2 o, double dx, double dy, const Segment& w) {
    const double ex = w.b.x - w.a.x;
    const double ey = w.b.y - w.a.y;
    const double det = -dx * ey + dy * ex;
    if (std::abs(det) < 1e-300) return kInf;
    const double rx = w.a.x - o.x;
    const double ry = w.a.y - o.y;
    const double t = (-rx * ey + ry * ex) / det;
    const double u = (dx * ry - dy * rx) / det;
    return (t > 0.0 && u >= 0.0 && u <= 1.0) ? t : kInf;
}

/// Entry distance of a ray into a rectangle via the slab method.
inline double ray_box(Vec2 o, double dx, double dy, const Rect& r) {
    double tmin = -kInf;
    double tmax = kInf;
    const double lo[2] = {r.x0, r.y0};
    const double hi[2] = {r.x1, r.y1};
    const double org[2] = {o.x, o.y};
    const double dir[2] = {dx, dy};
    for (int a = 0; a < 2; ++a) {
        if (dir[a] == 0.0) {
            if (org[a] < lo[a] || org[a] > hi[a]) return kInf;
            continue;
        }
        double t1 = (lo[a] - org[a]) / dir[a];
        double t2 = (hi[a] - org[a]) / dir[a];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
    }
    if (tmax < tmin || tmax <= 0.0) return kInf;
    return std::max(tmin, 0.0);
}

struct RayObservation {
    double visible_fraction = 0.0;
    double angular_extent = 0.0;
};

/// Visibility of objects[target] from v with `rays` rays: the visible fraction
/// casts one ray to each of `rays` evenly spaced perimeter points; the angular
/// extent counts uniformly spaced directions whose first hit is the target.
inline RayObservation dense_ray_observe(const Scene& scene, Vec2 v, std::size_t target, int rays = 20000) {
    const Rect& fp = scene.objects[target].footprint;
    auto nearest_other = [&](double dx, double dy, bool skip_target) {
        double best = kInf;
        for (const auto& w : scene.walls) best = std::min(best, ray_wall(v, dx, dy, w));
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            if (skip_target && i == target) continue;
            best = std::min(best, ray_box(v, dx, dy, scene.objects[i].footprint));
        }
        return best;
    };
    RayObservation out;
    const double w = fp.x1 - fp.x0;
    const double h = fp.y1 - fp.y0;
    const double perim = 2.0 * (w + h);
    int visible = 0;
    for (int k = 0; k < rays; ++k) {
        double s = (k + 0.5) * perim / rays;
        Vec2 q;
        if (s <= w) {
            q = {fp.x0 + s, fp.y0};
        } else if ((s -= w) <= h) {
            q = {fp.x1, fp.y0 + s};
        } else if ((s -= h) <= w) {
            q = {fp.x1 - s, fp.y1};
        } else {
            s -= w;
            q = {fp.x0, fp.y1 - s};
        }
        const double dx = q.x - v.x;
        const double dy = q.y - v.y;
        const double len = std::sqrt(dx * dx + dy * dy);
        if (nearest_other(dx / len, dy / len, true) >= len * (1.0 - 1e-12)) ++visible;
    }
    out.visible_fraction = static_cast<double>(visible) / rays;
    int hits = 0;
    for (int k = 0; k < rays; ++k) {
        const double a = 2.0 * std::numbers::pi * (k + 0.5) / rays;
        const double dx = std::cos(a);
        const double dy = std::sin(a);
        const double t_target = ray_box(v, dx, dy, fp);
        if (t_target < kInf && t_target < nearest_other(dx, dy, true)) ++hits;
    }
    out.angular_extent = 2.0 * std::numbers::pi * hits / rays;
    return out;
}

/// Band-pass quality, written out independently of the library.
inline double band_quality(double e, double lo, double hi, double cut) {
    if (e <= 0.0) return 0.0;
    if (e < lo) return e / lo;
    if (e <= hi) return 1.0;
    if (e < cut) return 1.0 - (e - hi) / (cut - hi);
    return 0.0;
}

}  // namespace oracle
