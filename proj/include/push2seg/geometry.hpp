#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace push2seg {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm_sq(Vec2 v) { return v.x * v.x + v.y * v.y; }

inline Vec2 normalized(Vec2 v) {
    double n = norm(v);
    if (n <= 0.0) throw std::invalid_argument("normalized: zero vector");
    return {v.x / n, v.y / n};
}

/// Counter-clockwise rotation in the usual math convention (x right, y up);
/// in image coordinates (y down) the same matrix turns clockwise on screen.
inline Vec2 rotate(Vec2 v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct BBox {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{0.0, 0.0};
};

inline BBox bbox_of(const std::array<Vec2, 4>& pts) {
    BBox b{pts[0], pts[0]};
    for (const Vec2& p : pts) {
        b.lo.x = std::min(b.lo.x, p.x);
        b.lo.y = std::min(b.lo.y, p.y);
        b.hi.x = std::max(b.hi.x, p.x);
        b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len_sq = norm_sq(ab);
    if (len_sq <= 0.0) return norm(p - a);
    double t = std::clamp(dot(p - a, ab) / len_sq, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

inline bool segments_intersect(Vec2 a1, Vec2 a2, Vec2 b1, Vec2 b2) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
        double v = cross(q - p, r - p);
        return (v > 0.0) - (v < 0.0);
    };
    int o1 = orient(a1, a2, b1), o2 = orient(a1, a2, b2);
    int o3 = orient(b1, b2, a1), o4 = orient(b1, b2, a2);
    if (o1 != o2 && o3 != o4) return true;
    auto on = [](Vec2 p, Vec2 q, Vec2 r) {
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
               std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
    };
    if (o1 == 0 && on(a1, a2, b1)) return true;
    if (o2 == 0 && on(a1, a2, b2)) return true;
    if (o3 == 0 && on(b1, b2, a1)) return true;
    if (o4 == 0 && on(b1, b2, a2)) return true;
    return false;
}

inline double segment_segment_distance(Vec2 a1, Vec2 a2, Vec2 b1, Vec2 b2) {
    if (segments_intersect(a1, a2, b1, b2)) return 0.0;
    return std::min(std::min(point_segment_distance(b1, a1, a2), point_segment_distance(b2, a1, a2)),
                    std::min(point_segment_distance(a1, b1, b2), point_segment_distance(a2, b1, b2)));
}

}  // namespace push2seg
