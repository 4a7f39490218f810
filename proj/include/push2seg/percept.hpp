#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "push2seg/flow.hpp"
#include "push2seg/mask.hpp"
#include "push2seg/rng.hpp"

namespace push2seg {

/// Models the failure mode of a segmentation network trained on synthetic
/// data: objects closer than roughly d_merge pixels come out as one mask.
///
/// Each ground-truth mask is dilated by ceil(d_merge/2); masks whose dilations
/// form one connected component are merged, and the output is the union of the
/// original (undilated) masks per component. d_merge = 0 is the identity.
/// With probability p_noise an output mask is eroded by one pixel.
inline std::vector<BinaryMask> undersegment(const LabelImage& gt, int d_merge, Rng& rng,
                                            double p_noise = 0.0) {
    if (d_merge < 0) throw std::invalid_argument("undersegment: d_merge must be nonnegative");
    std::vector<std::pair<int, BinaryMask>> gt_masks = gt.extract_masks();

    std::vector<BinaryMask> out;
    if (d_merge == 0) {
        for (auto& [id, m] : gt_masks) out.push_back(std::move(m));
    } else {
        int r = (d_merge + 1) / 2;
        BinaryMask merged_union(gt.width, gt.height);
        std::vector<BinaryMask> dilated;
        dilated.reserve(gt_masks.size());
        for (const auto& [id, m] : gt_masks) {
            dilated.push_back(dilate(m, r));
            for (std::size_t i = 0; i < merged_union.data.size(); ++i)
                merged_union.data[i] |= dilated.back().data[i];
        }
        std::vector<BinaryMask> comps = connected_components(merged_union);
        out.assign(comps.size(), BinaryMask(gt.width, gt.height));
        for (std::size_t k = 0; k < gt_masks.size(); ++k) {
            // A dilated mask is connected, so any one pixel locates its component.
            int px = -1, py = -1;
            for (int y = 0; y < gt.height && px < 0; ++y)
                for (int x = 0; x < gt.width; ++x)
                    if (dilated[k].at(x, y)) {
                        px = x;
                        py = y;
                        break;
                    }
            for (std::size_t c = 0; c < comps.size(); ++c) {
                if (comps[c].at(px, py)) {
                    for (std::size_t i = 0; i < out[c].data.size(); ++i)
                        out[c].data[i] |= gt_masks[k].second.data[i];
                    break;
                }
            }
        }
    }

    if (p_noise > 0.0) {
        std::vector<BinaryMask> noisy;
        for (BinaryMask& m : out) {
            if (rng.bernoulli(p_noise)) {
                BinaryMask e = erode(m, 1);
                if (!e.empty()) noisy.push_back(std::move(e));
            } else {
                noisy.push_back(std::move(m));
            }
        }
        return noisy;
    }
    return out;
}

/// Renders an initial segmentation as a label raster (ids 1..n in mask order).
inline LabelImage segmentation_to_label(const std::vector<BinaryMask>& masks, int width,
                                        int height) {
    LabelImage out(width, height);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        masks[k].for_each_pixel(
            [&](int x, int y) { out.set(x, y, static_cast<std::uint16_t>(k + 1)); });
    }
    return out;
}

/// Exhaustive block-matching flow estimator. Per pixel it picks the integer
/// displacement in the [-search, search]^2 window minimizing the sum of
/// absolute differences over a patch x patch window (clipped at the image
/// border; target lookups clamp). Ties go to the smallest displacement
/// magnitude, then the smallest (dy,dx).
inline FlowField block_match_flow(const GrayImage& a, const GrayImage& b, int patch, int search) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("block_match_flow: dimension mismatch");
    if (patch < 1 || patch % 2 == 0)
        throw std::invalid_argument("block_match_flow: patch must be odd and positive");
    if (search < 1) throw std::invalid_argument("block_match_flow: search must be at least 1");

    const int w = a.width, h = a.height, half = patch / 2;
    struct Disp {
        int dx, dy;
    };
    std::vector<Disp> disps;
    disps.reserve(static_cast<std::size_t>(2 * search + 1) * (2 * search + 1));
    for (int dy = -search; dy <= search; ++dy)
        for (int dx = -search; dx <= search; ++dx) disps.push_back({dx, dy});
    std::sort(disps.begin(), disps.end(), [](const Disp& l, const Disp& r) {
        int ml = l.dx * l.dx + l.dy * l.dy, mr = r.dx * r.dx + r.dy * r.dy;
        if (ml != mr) return ml < mr;
        if (l.dy != r.dy) return l.dy < r.dy;
        return l.dx < r.dx;
    });

    std::vector<std::uint32_t> best_cost(static_cast<std::size_t>(w) * h, 0xffffffffu);
    FlowField flow(w, h);
    std::vector<std::uint32_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);

    for (const Disp& d : disps) {
        // Integral image of |a(p) - b(clamp(p + d))| makes each window sum O(1).
        for (int y = 0; y < h; ++y) {
            int sy = std::clamp(y + d.dy, 0, h - 1);
            std::uint32_t row = 0;
            for (int x = 0; x < w; ++x) {
                int sx = std::clamp(x + d.dx, 0, w - 1);
                row += static_cast<std::uint32_t>(std::abs(int(a.at(x, y)) - int(b.at(sx, sy))));
                integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                    integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
            }
        }
        for (int y = 0; y < h; ++y) {
            int y0 = std::max(0, y - half), y1 = std::min(h - 1, y + half);
            for (int x = 0; x < w; ++x) {
                int x0 = std::max(0, x - half), x1 = std::min(w - 1, x + half);
                std::uint32_t cost =
                    integral[static_cast<std::size_t>(y1 + 1) * (w + 1) + (x1 + 1)] -
                    integral[static_cast<std::size_t>(y0) * (w + 1) + (x1 + 1)] -
                    integral[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
                    integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
                std::size_t i = static_cast<std::size_t>(y) * w + x;
                if (cost < best_cost[i]) {
                    best_cost[i] = cost;
                    flow.u[i] = static_cast<float>(d.dx);
                    flow.v[i] = static_cast<float>(d.dy);
                }
            }
        }
    }
    return flow;
}

}  // namespace push2seg
