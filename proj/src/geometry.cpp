#include "ansfield/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace ansfield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Liang-Barsky clip of p + t·d, t in [t_lo, t_hi], against a closed rectangle.
bool clip_to_rect(Vec2 p, Vec2 d, const Rect& r, double& t_lo, double& t_hi) {
    const double pv[4] = {-d.x, d.x, -d.y, d.y};
    const double qv[4] = {p.x - r.x0, r.x1 - p.x, p.y - r.y0, r.y1 - p.y};
    for (int i = 0; i < 4; ++i) {
        if (pv[i] == 0.0) {
            if (qv[i] < 0.0) return false;
            continue;
        }
        const double t = qv[i] / pv[i];
        if (pv[i] < 0.0) {
            t_lo = std::max(t_lo, t);
        } else {
            t_hi = std::min(t_hi, t);
        }
        if (t_lo > t_hi) return false;
    }
    return true;
}

}  // namespace

Vec2 Rect::boundary_point(double s) const {
    const double w = width();
    const double h = height();
    s = std::fmod(s, perimeter());
    if (s < 0.0) s += perimeter();
    if (s <= w) return {x0 + s, y0};
    s -= w;
    if (s <= h) return {x1, y0 + s};
    s -= h;
    if (s <= w) return {x1 - s, y1};
    s -= w;
    return {x0, y1 - s};
}

double point_segment_distance(Vec2 p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return distance(p, s.a);
    const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
    return distance(p, s.a + t * d);
}

double point_rect_distance(Vec2 p, const Rect& r) {
    const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
    const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
    return std::hypot(dx, dy);
}

double rect_rect_distance(const Rect& a, const Rect& b) {
    const double dx = std::max({b.x0 - a.x1, 0.0, a.x0 - b.x1});
    const double dy = std::max({b.y0 - a.y1, 0.0, a.y0 - b.y1});
    return std::hypot(dx, dy);
}

bool rects_overlap(const Rect& a, const Rect& b) {
    return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1;
}

bool open_segment_hits_segment(Vec2 p, Vec2 q, const Segment& s) {
    const Vec2 r = q - p;
    const Vec2 e = s.b - s.a;
    const double denom = cross(r, e);
    const Vec2 ap = s.a - p;
    if (denom == 0.0) {
        if (cross(ap, r) != 0.0) return false;
        // Collinear: overlap of parameter ranges with the open interval (0,1).
        const double rr = dot(r, r);
        if (rr == 0.0) return false;
        double t0 = dot(s.a - p, r) / rr;
        double t1 = dot(s.b - p, r) / rr;
        if (t0 > t1) std::swap(t0, t1);
        return t0 < 1.0 && t1 > 0.0;
    }
    const double t = cross(ap, e) / denom;
    const double u = cross(ap, r) / denom;
    return t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0;
}

bool open_segment_hits_rect(Vec2 p, Vec2 q, const Rect& r) {
    double t_lo = 0.0;
    double t_hi = 1.0;
    if (!clip_to_rect(p, q - p, r, t_lo, t_hi)) return false;
    // The clipped interval lies in [0,1]; it meets (0,1) unless it collapses onto an endpoint.
    return !(t_hi <= 0.0 || t_lo >= 1.0);
}

bool segment_hits_rect(const Segment& s, const Rect& r) {
    double t_lo = 0.0;
    double t_hi = 1.0;
    return clip_to_rect(s.a, s.b - s.a, r, t_lo, t_hi);
}

double ray_segment_hit(Vec2 p, Vec2 dir, const Segment& s) {
    const Vec2 e = s.b - s.a;
    const double denom = cross(dir, e);
    if (denom == 0.0) return kInf;
    const Vec2 ap = s.a - p;
    const double t = cross(ap, e) / denom;
    const double u = cross(ap, dir) / denom;
    if (t > 0.0 && u >= 0.0 && u <= 1.0) return t;
    return kInf;
}

double ray_rect_hit(Vec2 p, Vec2 dir, const Rect& r) {
    double t_lo = 0.0;
    double t_hi = kInf;
    if (!clip_to_rect(p, dir, r, t_lo, t_hi)) return kInf;
    return t_lo > 0.0 ? t_lo : (t_hi > 0.0 ? 0.0 : kInf);
}

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

}  // namespace ansfield
