#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "push2seg/config.hpp"
#include "push2seg/flow.hpp"
#include "push2seg/geometry.hpp"
#include "push2seg/mask.hpp"
#include "push2seg/percept.hpp"
#include "push2seg/rng.hpp"

namespace push2seg {

// ---------------------------------------------------------------------------
// Scene model
// ---------------------------------------------------------------------------

enum class ShapeKind { Disc, Rectangle };

struct ObjectShape {
    ShapeKind kind = ShapeKind::Disc;
    double radius = 1.0;  // disc
    double hx = 1.0;      // rectangle half extents
    double hy = 1.0;

    static ObjectShape disc(double r) {
        if (r <= 0.0) throw std::invalid_argument("ObjectShape: radius must be positive");
        ObjectShape s;
        s.kind = ShapeKind::Disc;
        s.radius = r;
        return s;
    }
    static ObjectShape rectangle(double hx, double hy) {
        if (hx <= 0.0 || hy <= 0.0)
            throw std::invalid_argument("ObjectShape: half extents must be positive");
        ObjectShape s;
        s.kind = ShapeKind::Rectangle;
        s.hx = hx;
        s.hy = hy;
        return s;
    }
};

struct ObjectState {
    int id = 0;
    ObjectShape shape;
    Vec2 position;
    double rotation = 0.0;
};

struct Scene {
    int width = 0;
    int height = 0;
    std::vector<ObjectState> objects;

    const ObjectState* find(int id) const {
        for (const ObjectState& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
};

/// A push of one initially segmented mask. `direction` is unit length and
/// `distance > 0` (validated where the action is consumed).
struct PushAction {
    int target_mask_index = 0;
    Vec2 direction{1.0, 0.0};
    double distance = 0.0;
};

struct Episode {
    PipelineConfig config;
    std::vector<LabelImage> labels;      // ground truth per frame
    std::vector<GrayImage> appearances;  // per frame
    std::vector<FlowField> fwd;          // fwd[t]: frame t -> t+1
    std::vector<FlowField> bwd;          // bwd[t]: frame t+1 -> t
    std::vector<PushAction> actions;
    std::vector<Scene> scenes;

    int frame_count() const { return static_cast<int>(labels.size()); }
};

// ---------------------------------------------------------------------------
// Shape geometry
// ---------------------------------------------------------------------------

inline bool point_in_object(const ObjectState& o, Vec2 p) {
    if (o.shape.kind == ShapeKind::Disc)
        return norm_sq(p - o.position) <= o.shape.radius * o.shape.radius;
    Vec2 q = rotate(p - o.position, -o.rotation);
    return std::abs(q.x) <= o.shape.hx && std::abs(q.y) <= o.shape.hy;
}

inline std::array<Vec2, 4> rect_corners(const ObjectState& o) {
    double hx = o.shape.hx, hy = o.shape.hy;
    return {o.position + rotate({hx, hy}, o.rotation), o.position + rotate({hx, -hy}, o.rotation),
            o.position + rotate({-hx, -hy}, o.rotation),
            o.position + rotate({-hx, hy}, o.rotation)};
}

inline BBox footprint_bbox(const ObjectState& o) {
    if (o.shape.kind == ShapeKind::Disc) {
        double r = o.shape.radius;
        return {{o.position.x - r, o.position.y - r}, {o.position.x + r, o.position.y + r}};
    }
    return bbox_of(rect_corners(o));
}

/// Signed distance from a point to a rectangle's surface (negative inside).
inline double point_rect_signed_distance(Vec2 p, const ObjectState& rect) {
    Vec2 q = rotate(p - rect.position, -rect.rotation);
    double dx = std::abs(q.x) - rect.shape.hx;
    double dy = std::abs(q.y) - rect.shape.hy;
    if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
    return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
}

namespace detail {

inline bool rects_overlap_sat(const ObjectState& a, const ObjectState& b) {
    auto ca = rect_corners(a), cb = rect_corners(b);
    std::array<Vec2, 4> axes = {rotate({1, 0}, a.rotation), rotate({0, 1}, a.rotation),
                                rotate({1, 0}, b.rotation), rotate({0, 1}, b.rotation)};
    for (const Vec2& axis : axes) {
        double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
        for (const Vec2& p : ca) {
            double t = dot(p, axis);
            amin = std::min(amin, t);
            amax = std::max(amax, t);
        }
        for (const Vec2& p : cb) {
            double t = dot(p, axis);
            bmin = std::min(bmin, t);
            bmax = std::max(bmax, t);
        }
        if (amax < bmin || bmax < amin) return false;
    }
    return true;
}

inline double rects_penetration_sat(const ObjectState& a, const ObjectState& b) {
    auto ca = rect_corners(a), cb = rect_corners(b);
    std::array<Vec2, 4> axes = {rotate({1, 0}, a.rotation), rotate({0, 1}, a.rotation),
                                rotate({1, 0}, b.rotation), rotate({0, 1}, b.rotation)};
    double depth = 1e300;
    for (const Vec2& axis : axes) {
        double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
        for (const Vec2& p : ca) {
            double t = dot(p, axis);
            amin = std::min(amin, t);
            amax = std::max(amax, t);
        }
        for (const Vec2& p : cb) {
            double t = dot(p, axis);
            bmin = std::min(bmin, t);
            bmax = std::max(bmax, t);
        }
        depth = std::min(depth, std::min(amax, bmax) - std::max(amin, bmin));
    }
    return depth;  // positive when overlapping
}

}  // namespace detail

inline bool footprints_overlap(const ObjectState& a, const ObjectState& b) {
    bool da = a.shape.kind == ShapeKind::Disc, db = b.shape.kind == ShapeKind::Disc;
    if (da && db) return norm(a.position - b.position) < a.shape.radius + b.shape.radius;
    if (da) return point_rect_signed_distance(a.position, b) < a.shape.radius;
    if (db) return point_rect_signed_distance(b.position, a) < b.shape.radius;
    return detail::rects_overlap_sat(a, b);
}

/// Surface-to-surface distance between two footprints; nonpositive when they
/// touch or overlap.
inline double surface_distance(const ObjectState& a, const ObjectState& b) {
    bool da = a.shape.kind == ShapeKind::Disc, db = b.shape.kind == ShapeKind::Disc;
    if (da && db) return norm(a.position - b.position) - a.shape.radius - b.shape.radius;
    if (da) return point_rect_signed_distance(a.position, b) - a.shape.radius;
    if (db) return point_rect_signed_distance(b.position, a) - b.shape.radius;
    if (detail::rects_overlap_sat(a, b)) return -detail::rects_penetration_sat(a, b);
    auto ca = rect_corners(a), cb = rect_corners(b);
    double d = 1e300;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            d = std::min(d, segment_segment_distance(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
    return d;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Per-object base intensity: injective for ids up to 14, always a multiple
/// of 16 in [16, 224] so id ranges stay disjoint after texture dithering.
inline std::uint8_t appearance_base(int id) {
    return static_cast<std::uint8_t>(16 * (((id - 1) * 5) % 14 + 1));
}

struct RenderResult {
    LabelImage label;
    GrayImage appearance;
};

/// Rasterizes a scene: pixel (x,y) belongs to the object whose footprint
/// contains the point (x,y). The appearance channel carries the per-id base
/// intensity plus a small texture hashed from object-local coordinates, so
/// that intensity ranges identify ids while block matching still has local
/// structure to lock onto.
inline RenderResult render(const Scene& s) {
    RenderResult out{LabelImage(s.width, s.height), GrayImage(s.width, s.height)};
    for (const ObjectState& o : s.objects) {
        BBox bb = footprint_bbox(o);
        int x0 = std::max(0, static_cast<int>(std::ceil(bb.lo.x)));
        int x1 = std::min(s.width - 1, static_cast<int>(std::floor(bb.hi.x)));
        int y0 = std::max(0, static_cast<int>(std::ceil(bb.lo.y)));
        int y1 = std::min(s.height - 1, static_cast<int>(std::floor(bb.hi.y)));
        std::uint8_t base = appearance_base(o.id);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                Vec2 p{static_cast<double>(x), static_cast<double>(y)};
                if (!point_in_object(o, p)) continue;
                out.label.set(x, y, static_cast<std::uint16_t>(o.id));
                Vec2 local = rotate(p - o.position, -o.rotation);
                std::uint64_t hx = static_cast<std::uint64_t>(
                    static_cast<std::int64_t>(std::floor(local.x)) + (1ll << 31));
                std::uint64_t hy = static_cast<std::uint64_t>(
                    static_cast<std::int64_t>(std::floor(local.y)) + (1ll << 31));
                std::uint8_t dither = static_cast<std::uint8_t>(
                    hash_combine(hash_combine(static_cast<std::uint64_t>(o.id), hx), hy) & 15);
                out.appearance.set(x, y, static_cast<std::uint8_t>(base + dither));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracle flow
// ---------------------------------------------------------------------------

/// Exact rigid-motion flow between two scenes with identical object id sets.
/// Forward flow is defined on the source frame's object pixels, backward flow
/// on the destination frame's; background pixels carry zero flow.
inline std::pair<FlowField, FlowField> oracle_flow(const Scene& s_t, const Scene& s_t1) {
    if (s_t.objects.size() != s_t1.objects.size())
        throw std::invalid_argument("oracle_flow: object id sets differ");
    for (const ObjectState& o : s_t.objects)
        if (!s_t1.find(o.id)) throw std::invalid_argument("oracle_flow: object id sets differ");

    LabelImage lab_t = render(s_t).label;
    LabelImage lab_t1 = render(s_t1).label;
    FlowField fwd(s_t.width, s_t.height), bwd(s_t.width, s_t.height);
    for (int y = 0; y < s_t.height; ++y) {
        for (int x = 0; x < s_t.width; ++x) {
            Vec2 p{static_cast<double>(x), static_cast<double>(y)};
            if (int id = lab_t.at(x, y); id != 0) {
                const ObjectState* a = s_t.find(id);
                const ObjectState* b = s_t1.find(id);
                Vec2 q = b->position + rotate(p - a->position, b->rotation - a->rotation);
                fwd.set(x, y, static_cast<float>(q.x - p.x), static_cast<float>(q.y - p.y));
            }
            if (int id = lab_t1.at(x, y); id != 0) {
                const ObjectState* a = s_t.find(id);
                const ObjectState* b = s_t1.find(id);
                Vec2 q = a->position + rotate(p - b->position, a->rotation - b->rotation);
                bwd.set(x, y, static_cast<float>(q.x - p.x), static_cast<float>(q.y - p.y));
            }
        }
    }
    return {std::move(fwd), std::move(bwd)};
}

// ---------------------------------------------------------------------------
// Pushing
// ---------------------------------------------------------------------------

namespace detail {

struct IVec {
    long long x = 0, y = 0;
};

inline IVec round_vec(Vec2 v) { return {std::llround(v.x), std::llround(v.y)}; }

/// Integer shift that brings the footprint back inside [0,w-1] x [0,h-1].
/// Integer so that per-frame pose deltas stay whole pixels.
inline void clamp_into_workspace(ObjectState& o, int width, int height) {
    BBox bb = footprint_bbox(o);
    double dx = 0.0, dy = 0.0;
    if (bb.lo.x < 0.0)
        dx = std::ceil(-bb.lo.x);
    else if (bb.hi.x > width - 1.0)
        dx = -std::ceil(bb.hi.x - (width - 1.0));
    if (bb.lo.y < 0.0)
        dy = std::ceil(-bb.lo.y);
    else if (bb.hi.y > height - 1.0)
        dy = -std::ceil(bb.hi.y - (height - 1.0));
    o.position.x += dx;
    o.position.y += dy;
}

inline bool inside_workspace(const ObjectState& o, int width, int height, double margin = 0.0) {
    BBox bb = footprint_bbox(o);
    return bb.lo.x >= margin && bb.lo.y >= margin && bb.hi.x <= width - 1.0 - margin &&
           bb.hi.y <= height - 1.0 - margin;
}

/// Quasi-static separation projection: every object overlapping a moved
/// object is displaced (whole-pixel steps) until it clears with a small skid
/// margin, which may set off a chain. The primary displacement ray blends the
/// push direction with the contact normal, so obstacles fan out around the
/// pusher's path instead of stacking up in front of it; objects pinned
/// against the workspace edge deflect sideways. Throws when the chain cannot
/// be resolved.
inline void resolve_contacts(Scene& s, Vec2 dir, std::vector<char>& moved, int skip_index,
                             int width, int height) {
    constexpr double kSeparation = 6.0;
    const int n = static_cast<int>(s.objects.size());
    const int max_rounds = 8 * std::max(1, n);
    const int max_steps = std::max(width, height);
    for (int round = 0; round < max_rounds; ++round) {
        bool changed = false;
        for (int mi = 0; mi < n; ++mi) {
            if (!moved[mi]) continue;
            for (int oi = 0; oi < n; ++oi) {
                if (oi == mi || oi == skip_index) continue;
                if (!footprints_overlap(s.objects[mi], s.objects[oi])) continue;
                Vec2 normal = s.objects[oi].position - s.objects[mi].position;
                Vec2 primary = norm(normal) > 1e-9 ? normalized(0.5 * dir + normalized(normal))
                                                   : dir;
                const std::array<Vec2, 4> rays = {primary, dir, Vec2{-dir.y, dir.x},
                                                  Vec2{dir.y, -dir.x}};
                Vec2 base = s.objects[oi].position;
                bool cleared = false;
                for (const Vec2& ray : rays) {
                    for (int t = 1; t <= max_steps && !cleared; ++t) {
                        IVec d = round_vec(t * ray);
                        s.objects[oi].position = {base.x + d.x, base.y + d.y};
                        if (!inside_workspace(s.objects[oi], width, height)) break;
                        bool clear = true;
                        for (int mj = 0; mj < n && clear; ++mj)
                            if (moved[mj] && mj != oi &&
                                surface_distance(s.objects[mj], s.objects[oi]) < kSeparation)
                                clear = false;
                        cleared = clear;
                    }
                    if (cleared) break;
                }
                if (!cleared) throw std::runtime_error("apply_push: unresolvable overlap");
                moved[oi] = 1;
                changed = true;
            }
        }
        if (!changed) return;
    }
    // The chain kept oscillating.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (footprints_overlap(s.objects[i], s.objects[j]))
                throw std::runtime_error("apply_push: unresolvable overlap");
}

}  // namespace detail

/// Executes one push. The ground-truth object with the largest overlap against
/// the targeted initial mask translates by round(distance * direction) in
/// sub-steps; contacted objects are displaced along the push direction until
/// separated; moved objects receive uniform rotation noise and everything is
/// clamped into the workspace. Net per-object translations are whole pixels,
/// which keeps oracle-flow warps of pure translations exact.
inline Scene apply_push(const Scene& s, const PushAction& a,
                        const std::vector<BinaryMask>& init_masks, Rng& rng,
                        const PipelineConfig& cfg) {
    if (a.distance <= 0.0) throw std::invalid_argument("apply_push: distance must be positive");
    if (std::abs(norm(a.direction) - 1.0) > 1e-9)
        throw std::invalid_argument("apply_push: direction must be unit length");
    if (a.target_mask_index < 0 ||
        a.target_mask_index >= static_cast<int>(init_masks.size()))
        throw std::invalid_argument("apply_push: target mask index out of range");
    if (s.objects.empty()) throw std::invalid_argument("apply_push: empty scene");

    LabelImage labels = render(s).label;
    const BinaryMask& target_mask = init_masks[a.target_mask_index];
    int target_index = 0;
    long long best_overlap = -1;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        long long ov = intersection_area(labels.mask_of(s.objects[i].id), target_mask);
        if (ov > best_overlap) {
            best_overlap = ov;
            target_index = static_cast<int>(i);
        }
    }

    Scene out = s;
    std::vector<char> moved(out.objects.size(), 0);
    moved[target_index] = 1;

    detail::IVec net = detail::round_vec(a.distance * a.direction);
    long long span = std::max(std::llabs(net.x), std::llabs(net.y));
    int n_sub = static_cast<int>(std::max(1ll, (span + 3) / 4));
    detail::IVec prev{0, 0};
    for (int i = 1; i <= n_sub; ++i) {
        detail::IVec cur{std::llround(static_cast<double>(net.x) * i / n_sub),
                         std::llround(static_cast<double>(net.y) * i / n_sub)};
        out.objects[target_index].position.x += static_cast<double>(cur.x - prev.x);
        out.objects[target_index].position.y += static_cast<double>(cur.y - prev.y);
        prev = cur;
        detail::clamp_into_workspace(out.objects[target_index], out.width, out.height);
        detail::resolve_contacts(out, a.direction, moved, target_index, out.width, out.height);
    }

    if (cfg.rotation_noise > 0.0) {
        for (std::size_t i = 0; i < out.objects.size(); ++i) {
            if (!moved[i]) continue;
            out.objects[i].rotation += rng.uniform(-cfg.rotation_noise, cfg.rotation_noise);
            detail::clamp_into_workspace(out.objects[i], out.width, out.height);
        }
        detail::resolve_contacts(out, a.direction, moved, -1, out.width, out.height);
    }

    for (std::size_t i = 0; i < out.objects.size(); ++i) {
        if (!detail::inside_workspace(out.objects[i], out.width, out.height))
            throw std::runtime_error("apply_push: object escaped workspace");
        for (std::size_t j = i + 1; j < out.objects.size(); ++j)
            if (footprints_overlap(out.objects[i], out.objects[j]))
                throw std::runtime_error("apply_push: unresolvable overlap");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scene sampling and push selection
// ---------------------------------------------------------------------------

namespace detail {

inline ObjectShape sample_shape(Rng& rng, const PipelineConfig& cfg) {
    double lo = cfg.obj_min_extent / 2.0, hi = cfg.obj_max_extent / 2.0;
    if (rng.bernoulli(0.5)) return ObjectShape::disc(rng.uniform(lo, hi));
    return ObjectShape::rectangle(rng.uniform(lo, hi), rng.uniform(lo, hi));
}

}  // namespace detail

/// Samples a clustered scene: the first object lands near the workspace
/// center, every following object is placed against a random member of the
/// cluster with a surface gap uniform in [0, g_init].
inline Scene sample_scene(Rng& rng, int n_objects, const PipelineConfig& cfg) {
    if (n_objects < 1) throw std::invalid_argument("sample_scene: need at least one object");
    Scene s{cfg.width, cfg.height, {}};
    Vec2 center{cfg.width / 2.0, cfg.height / 2.0};
    for (int i = 0; i < n_objects; ++i) {
        ObjectState obj;
        obj.id = i + 1;
        obj.shape = detail::sample_shape(rng, cfg);
        obj.rotation = rng.uniform(0.0, 6.283185307179586476925286766559);
        if (i == 0) {
            obj.position = center + Vec2{rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0)};
            detail::clamp_into_workspace(obj, s.width, s.height);
            s.objects.push_back(obj);
            continue;
        }
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const ObjectState& anchor = s.objects[rng.uniform_int(0, i - 1)];
            Vec2 dirn = rng.unit_vector();
            double gap = rng.uniform(0.0, cfg.g_init);
            // Bisect the offset along the ray until the surface gap matches.
            double lo = 0.0, hi = 4.0 * (cfg.obj_max_extent + cfg.g_init) + 8.0;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                obj.position = anchor.position + mid * dirn;
                if (surface_distance(obj, anchor) < gap)
                    lo = mid;
                else
                    hi = mid;
            }
            obj.position = anchor.position + hi * dirn;
            if (!detail::inside_workspace(obj, s.width, s.height, 1.0)) continue;
            bool ok = true;
            for (const ObjectState& other : s.objects)
                if (surface_distance(obj, other) < 0.01) ok = false;
            if (!ok) continue;
            s.objects.push_back(obj);
            placed = true;
        }
        if (!placed) throw std::runtime_error("sample_scene: object placement failed");
    }
    return s;
}

/// Picks a push: a uniformly random nonempty mask, pushed toward the workspace
/// center (random direction when the mask already sits at the center).
inline PushAction select_push(const std::vector<BinaryMask>& masks, int width, int height,
                              double distance, Rng& rng) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < masks.size(); ++i)
        if (!masks[i].empty()) candidates.push_back(static_cast<int>(i));
    if (candidates.empty()) throw std::invalid_argument("select_push: all masks empty");

    int target = candidates[rng.uniform_int(0, static_cast<int>(candidates.size()) - 1)];
    PixelBBox bb = mask_bbox(masks[target]);
    Vec2 bc{(bb.x0 + bb.x1) / 2.0, (bb.y0 + bb.y1) / 2.0};
    Vec2 delta = Vec2{width / 2.0, height / 2.0} - bc;
    Vec2 dir = norm(delta) < 1.0 ? rng.unit_vector() : normalized(delta);
    return {target, dir, distance};
}

// ---------------------------------------------------------------------------
// Episode generation
// ---------------------------------------------------------------------------

/// Runs a pushing episode starting at a given scene: render, then repeat
/// (segment with the imperfect segmenter, select a push, apply it, render,
/// record oracle flows) cfg.n_pushes times.
inline Episode run_episode_from(const Scene& initial, const PipelineConfig& cfg, Rng& rng) {
    Episode ep;
    ep.config = cfg;
    ep.scenes.push_back(initial);
    RenderResult r = render(initial);
    ep.labels.push_back(std::move(r.label));
    ep.appearances.push_back(std::move(r.appearance));

    for (int p = 0; p < cfg.n_pushes; ++p) {
        std::vector<BinaryMask> segs = undersegment(ep.labels.back(), cfg.d_merge, rng, cfg.p_noise);
        PushAction action = select_push(segs, cfg.width, cfg.height, cfg.push_distance, rng);
        Scene next = apply_push(ep.scenes.back(), action, segs, rng, cfg);
        RenderResult rr = render(next);
        auto [fwd, bwd] = oracle_flow(ep.scenes.back(), next);
        ep.actions.push_back(action);
        ep.scenes.push_back(std::move(next));
        ep.labels.push_back(std::move(rr.label));
        ep.appearances.push_back(std::move(rr.appearance));
        ep.fwd.push_back(std::move(fwd));
        ep.bwd.push_back(std::move(bwd));
    }
    return ep;
}

inline Episode run_episode(const PipelineConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    Scene initial = sample_scene(rng, cfg.n_objects, cfg);
    return run_episode_from(initial, cfg, rng);
}

}  // namespace push2seg
