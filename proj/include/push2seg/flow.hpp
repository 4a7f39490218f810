#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "push2seg/mask.hpp"

namespace push2seg {

/// Dense per-pixel 2D displacement field between two frames of the same size.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;  // x displacement, row-major
    std::vector<float> v;  // y displacement, row-major

    FlowField() = default;
    FlowField(int w, int h)
        : width(w),
          height(h),
          u(static_cast<std::size_t>(w) * h, 0.0f),
          v(static_cast<std::size_t>(w) * h, 0.0f) {}

    float u_at(int x, int y) const { return u[static_cast<std::size_t>(y) * width + x]; }
    float v_at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
    void set(int x, int y, float du, float dv) {
        std::size_t i = static_cast<std::size_t>(y) * width + x;
        u[i] = du;
        v[i] = dv;
    }

    bool operator==(const FlowField& o) const = default;
};

inline void require_same_dims(const BinaryMask& m, const FlowField& f, const char* op) {
    if (m.width != f.width || m.height != f.height)
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

/// Forward-warps a mask: every member pixel p lands on round(p + flow(p)).
/// Out-of-bounds targets are dropped; colliding targets union.
inline BinaryMask warp_mask(const BinaryMask& m, const FlowField& f) {
    require_same_dims(m, f, "warp_mask");
    BinaryMask out(m.width, m.height);
    m.for_each_pixel([&](int x, int y) {
        int tx = static_cast<int>(std::llround(x + static_cast<double>(f.u_at(x, y))));
        int ty = static_cast<int>(std::llround(y + static_cast<double>(f.v_at(x, y))));
        if (out.in_bounds(tx, ty)) out.set(tx, ty);
    });
    return out;
}

/// Chains two adjacent-frame flows: composed(p) = f_ab(p) + f_bc(p + round(f_ab(p))).
/// The intermediate lookup clamps to the nearest valid pixel.
inline FlowField compose_flow(const FlowField& f_ab, const FlowField& f_bc) {
    if (f_ab.width != f_bc.width || f_ab.height != f_bc.height)
        throw std::invalid_argument("compose_flow: dimension mismatch");
    FlowField out(f_ab.width, f_ab.height);
    for (int y = 0; y < f_ab.height; ++y) {
        for (int x = 0; x < f_ab.width; ++x) {
            double du = f_ab.u_at(x, y);
            double dv = f_ab.v_at(x, y);
            int mx = std::clamp(static_cast<int>(std::llround(x + du)), 0, f_ab.width - 1);
            int my = std::clamp(static_cast<int>(std::llround(y + dv)), 0, f_ab.height - 1);
            out.set(x, y, static_cast<float>(du + f_bc.u_at(mx, my)),
                    static_cast<float>(dv + f_bc.v_at(mx, my)));
        }
    }
    return out;
}

}  // namespace push2seg
