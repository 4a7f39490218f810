#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "push2seg/flow.hpp"
#include "push2seg/mask.hpp"

namespace push2seg {

/// One initial-segmentation mask at a specific frame.
struct Detection {
    int frame_index = 0;
    int mask_index = 0;
    BinaryMask mask;
};

/// A chain of detections in strictly adjacent frames believed to be one
/// physical object, with the matching score of each consecutive link.
struct Tracklet {
    std::vector<Detection> detections;  // ascending frame_index, gap exactly 1
    std::vector<double> link_scores;    // size = detections.size() - 1

    int first_frame() const { return detections.front().frame_index; }
    int last_frame() const { return detections.back().frame_index; }
    int length() const { return static_cast<int>(detections.size()); }
};

/// Flow-consistency matching score between a mask at frame t and a mask at
/// frame t+1: each mask is warped into the other frame and compared by IoU;
/// the score is the worse of the two directions.
inline double pairwise_score(const BinaryMask& mask_t, const BinaryMask& mask_t1,
                             const FlowField& fwd, const FlowField& bwd) {
    double forward = iou(warp_mask(mask_t, fwd), mask_t1);
    double backward = iou(warp_mask(mask_t1, bwd), mask_t);
    return std::min(forward, backward);
}

inline double pairwise_score(const Detection& a, const Detection& b, const FlowField& fwd,
                             const FlowField& bwd) {
    if (b.frame_index != a.frame_index + 1)
        throw std::invalid_argument("pairwise_score: detections must be in adjacent frames");
    return pairwise_score(a.mask, b.mask, fwd, bwd);
}

/// Greedy backward data association. Seeds are taken from unclaimed masks
/// starting at the last frame (descending area, then smallest mask index);
/// each tracklet repeatedly links to the best-scoring unclaimed mask of the
/// previous frame while that score exceeds tau_assoc. Leftover masks in
/// earlier frames seed their own tracklets, so every mask ends up in exactly
/// one tracklet.
inline std::vector<Tracklet> associate_greedy(const std::vector<std::vector<BinaryMask>>& segs,
                                              const std::vector<FlowField>& fwd,
                                              const std::vector<FlowField>& bwd,
                                              double tau_assoc) {
    const int n_frames = static_cast<int>(segs.size());
    if (n_frames == 0) return {};
    if (static_cast<int>(fwd.size()) != n_frames - 1 ||
        static_cast<int>(bwd.size()) != n_frames - 1)
        throw std::invalid_argument("associate_greedy: flow count must be frame count - 1");

    std::vector<std::vector<char>> claimed(n_frames);
    for (int f = 0; f < n_frames; ++f) claimed[f].assign(segs[f].size(), 0);

    std::vector<Tracklet> tracklets;
    for (int f = n_frames - 1; f >= 0; --f) {
        std::vector<int> seed_order(segs[f].size());
        for (std::size_t i = 0; i < seed_order.size(); ++i) seed_order[i] = static_cast<int>(i);
        std::stable_sort(seed_order.begin(), seed_order.end(), [&](int a, int b) {
            return segs[f][a].area() > segs[f][b].area();
        });

        for (int seed : seed_order) {
            if (claimed[f][seed]) continue;
            claimed[f][seed] = 1;

            std::vector<Detection> chain{{f, seed, segs[f][seed]}};
            std::vector<double> scores;
            int t = f;
            int cur = seed;
            while (t > 0) {
                // Warping the current mask backward is candidate-independent.
                BinaryMask cur_back = warp_mask(segs[t][cur], bwd[t - 1]);
                int best = -1;
                double best_score = -1.0;
                for (std::size_t j = 0; j < segs[t - 1].size(); ++j) {
                    if (claimed[t - 1][j]) continue;
                    double s = std::min(iou(warp_mask(segs[t - 1][j], fwd[t - 1]), segs[t][cur]),
                                        iou(cur_back, segs[t - 1][j]));
                    if (s > best_score) {
                        best_score = s;
                        best = static_cast<int>(j);
                    }
                }
                if (best < 0 || best_score <= tau_assoc) break;
                claimed[t - 1][best] = 1;
                chain.push_back({t - 1, best, segs[t - 1][best]});
                scores.push_back(best_score);
                --t;
                cur = best;
            }
            std::reverse(chain.begin(), chain.end());
            std::reverse(scores.begin(), scores.end());
            tracklets.push_back({std::move(chain), std::move(scores)});
        }
    }
    return tracklets;
}

}  // namespace push2seg
