#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "push2seg/geometry.hpp"

namespace push2seg {

/// Dense binary pixel mask. Membership is stored per pixel; all member
/// coordinates are inside [0,width) x [0,height) by construction.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {
        if (w < 0 || h < 0) throw std::invalid_argument("BinaryMask: negative dimensions");
    }

    bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) {
        data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    int area() const {
        int n = 0;
        for (std::uint8_t v : data) n += (v != 0);
        return n;
    }
    bool empty() const {
        for (std::uint8_t v : data)
            if (v) return false;
        return true;
    }
    bool same_dims(const BinaryMask& o) const { return width == o.width && height == o.height; }

    template <typename F>
    void for_each_pixel(F&& f) const {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (at(x, y)) f(x, y);
    }

    bool operator==(const BinaryMask& o) const = default;
};

struct PixelBBox {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; x1 < x0 means empty
    bool valid() const { return x1 >= x0 && y1 >= y0; }
};

inline PixelBBox mask_bbox(const BinaryMask& m) {
    PixelBBox b{m.width, m.height, -1, -1};
    m.for_each_pixel([&](int x, int y) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
    });
    return b;
}

/// Per-pixel instance-id raster; id 0 is background.
struct LabelImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;

    LabelImage() = default;
    LabelImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {
        if (w < 0 || h < 0) throw std::invalid_argument("LabelImage: negative dimensions");
    }

    std::uint16_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    void set(int x, int y, std::uint16_t id) {
        data[static_cast<std::size_t>(y) * width + x] = id;
    }

    /// Distinct nonzero ids present, ascending.
    std::vector<int> ids() const {
        std::vector<std::uint8_t> seen(65536, 0);
        for (std::uint16_t v : data) seen[v] = 1;
        std::vector<int> out;
        for (int id = 1; id < 65536; ++id)
            if (seen[id]) out.push_back(id);
        return out;
    }

    BinaryMask mask_of(int id) const {
        BinaryMask m(width, height);
        for (std::size_t i = 0; i < data.size(); ++i) m.data[i] = (data[i] == id);
        return m;
    }

    /// All nonzero-id masks, ascending by id. Masks are pairwise disjoint by
    /// construction of the raster.
    std::vector<std::pair<int, BinaryMask>> extract_masks() const {
        std::vector<std::pair<int, BinaryMask>> out;
        for (int id : ids()) out.emplace_back(id, mask_of(id));
        return out;
    }

    bool operator==(const LabelImage& o) const = default;
};

/// 8-bit intensity raster (the simulator's appearance channel).
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    void set(int x, int y, std::uint8_t v) { data[static_cast<std::size_t>(y) * width + x] = v; }

    bool operator==(const GrayImage& o) const = default;
};

inline void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* op) {
    if (!a.same_dims(b)) throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

inline long long intersection_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b, "intersection_area");
    long long n = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) n += (a.data[i] && b.data[i]);
    return n;
}

/// Intersection over union. Defined as 0 when both masks are empty so that an
/// empty detection never counts as a match.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b, "iou");
    long long inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        bool av = a.data[i] != 0, bv = b.data[i] != 0;
        inter += (av && bv);
        uni += (av || bv);
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Member pixels with at least one 4-neighbor outside the mask; the image
/// border counts as outside.
inline BinaryMask boundary(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    m.for_each_pixel([&](int x, int y) {
        bool edge = x == 0 || x == m.width - 1 || y == 0 || y == m.height - 1;
        if (!edge) {
            edge = !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) || !m.at(x, y + 1);
        }
        if (edge) out.set(x, y);
    });
    return out;
}

/// Chebyshev dilation by radius r, clipped to the image bounds. r = 0 is the
/// identity.
inline BinaryMask dilate(const BinaryMask& m, int r) {
    if (r < 0) throw std::invalid_argument("dilate: negative radius");
    if (r == 0) return m;
    BinaryMask out(m.width, m.height);
    m.for_each_pixel([&](int x, int y) {
        int x0 = std::max(0, x - r), x1 = std::min(m.width - 1, x + r);
        int y0 = std::max(0, y - r), y1 = std::min(m.height - 1, y + r);
        for (int yy = y0; yy <= y1; ++yy)
            for (int xx = x0; xx <= x1; ++xx) out.set(xx, yy);
    });
    return out;
}

/// Chebyshev erosion by radius r; out-of-bounds neighbors count as background,
/// so pixels touching the image border erode away.
inline BinaryMask erode(const BinaryMask& m, int r) {
    if (r < 0) throw std::invalid_argument("erode: negative radius");
    if (r == 0) return m;
    BinaryMask out(m.width, m.height);
    m.for_each_pixel([&](int x, int y) {
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                int xx = x + dx, yy = y + dy;
                if (!m.in_bounds(xx, yy) || !m.at(xx, yy)) return;
            }
        out.set(x, y);
    });
    return out;
}

/// 8-connected components, ordered by descending area, ties broken by the
/// smallest (y,x) member pixel.
inline std::vector<BinaryMask> connected_components(const BinaryMask& m) {
    std::vector<std::uint8_t> visited(m.data.size(), 0);
    std::vector<BinaryMask> comps;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * m.width + x;
            if (!m.data[idx] || visited[idx]) continue;
            BinaryMask comp(m.width, m.height);
            stack.clear();
            stack.emplace_back(x, y);
            visited[idx] = 1;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                comp.set(cx, cy);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = cx + dx, ny = cy + dy;
                        if (!m.in_bounds(nx, ny)) continue;
                        std::size_t nidx = static_cast<std::size_t>(ny) * m.width + nx;
                        if (m.data[nidx] && !visited[nidx]) {
                            visited[nidx] = 1;
                            stack.emplace_back(nx, ny);
                        }
                    }
            }
            comps.push_back(std::move(comp));
        }
    }
    // Row-major discovery already orders by smallest (y,x); a stable sort by
    // area keeps that order among ties.
    std::stable_sort(comps.begin(), comps.end(),
                     [](const BinaryMask& a, const BinaryMask& b) { return a.area() > b.area(); });
    return comps;
}

inline Vec2 centroid(const BinaryMask& m) {
    double sx = 0.0, sy = 0.0;
    long long n = 0;
    m.for_each_pixel([&](int x, int y) {
        sx += x;
        sy += y;
        ++n;
    });
    if (n == 0) throw std::invalid_argument("centroid: empty mask");
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

}  // namespace push2seg
