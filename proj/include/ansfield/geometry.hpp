#pragma once

#include <cmath>

namespace ansfield {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

struct Segment {
    Vec2 a;
    Vec2 b;
    double length() const { return distance(a, b); }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Closed axis-aligned rectangle [x0,x1]×[y0,y1].
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double perimeter() const { return 2.0 * (width() + height()); }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool contains_strict(Vec2 p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
    Rect inflated(double d) const { return {x0 - d, y0 - d, x1 + d, y1 + d}; }

    /// Point at arc length s along the boundary, counter-clockwise from (x0,y0).
    Vec2 boundary_point(double s) const;

    friend bool operator==(const Rect&, const Rect&) = default;
};

double point_segment_distance(Vec2 p, const Segment& s);
double point_rect_distance(Vec2 p, const Rect& r);
double rect_rect_distance(const Rect& a, const Rect& b);
bool rects_overlap(const Rect& a, const Rect& b);

/// True when the open segment (p,q) meets segment s (touching counts).
bool open_segment_hits_segment(Vec2 p, Vec2 q, const Segment& s);
/// True when the open segment (p,q) meets the closed rectangle r.
bool open_segment_hits_rect(Vec2 p, Vec2 q, const Rect& r);
/// True when the closed segment s meets the closed rectangle r.
bool segment_hits_rect(const Segment& s, const Rect& r);

/// Ray p + t·dir, t > 0: smallest t at which the ray meets the target, or +inf.
double ray_segment_hit(Vec2 p, Vec2 dir, const Segment& s);
double ray_rect_hit(Vec2 p, Vec2 dir, const Rect& r);

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace ansfield
