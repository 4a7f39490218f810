#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "push2seg/config.hpp"
#include "push2seg/flow.hpp"
#include "push2seg/mask.hpp"
#include "push2seg/percept.hpp"
#include "push2seg/rng.hpp"
#include "push2seg/sim.hpp"
#include "push2seg/track.hpp"

namespace push2seg {

enum class Provenance : std::uint8_t { Seed, Snapped, Warped };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Seed: return "seed";
        case Provenance::Snapped: return "snapped";
        default: return "warped";
    }
}

/// One object's mask in every frame of an episode, grown from a single seed
/// detection by bidirectional flow propagation.
struct PropagatedObject {
    int object_id = 0;
    int seed_frame = 0;
    BinaryMask seed_mask;
    std::vector<BinaryMask> masks;        // one per frame
    std::vector<Provenance> provenance;   // one per frame
    int tracklet_length = 0;
};

/// Picks the tracklet detection to seed propagation from: among detections
/// that were actually pushed (mean flow magnitude into the next frame at
/// least delta_move) the one with the best worst-side link score wins; if
/// nothing moved, the best worst-side link score alone decides. Ties go to
/// the latest frame. Returns the index into the tracklet.
inline int select_seed_index(const Tracklet& t, const std::vector<FlowField>& fwd,
                             double delta_move) {
    if (t.detections.empty()) throw std::invalid_argument("select_seed: empty tracklet");
    const int n = t.length();
    if (n == 1) return 0;

    auto min_link = [&](int i) {
        double pred = i > 0 ? t.link_scores[i - 1] : 1.0;
        double succ = i < n - 1 ? t.link_scores[i] : 1.0;
        return std::min(pred, succ);
    };
    // A detection counts as pushed when the majority of its pixels displace
    // by at least delta_move into the next frame. (A mean-magnitude test
    // would also fire on a merged mask whose minor constituent was pushed
    // out, seeding propagation from the merged blob.)
    auto moved = [&](int i) {
        int frame = t.detections[i].frame_index;
        if (frame >= static_cast<int>(fwd.size())) return false;  // last episode frame
        const FlowField& f = fwd[frame];
        long long displaced = 0, count = 0;
        t.detections[i].mask.for_each_pixel([&](int x, int y) {
            double mag = std::hypot(static_cast<double>(f.u_at(x, y)),
                                    static_cast<double>(f.v_at(x, y)));
            displaced += (mag >= delta_move);
            ++count;
        });
        return count > 0 && 2 * displaced >= count;
    };

    int best = -1;
    double best_score = -1.0;
    for (int i = 0; i < n; ++i) {
        if (!moved(i)) continue;
        double s = min_link(i);
        if (s >= best_score) {  // >= makes the latest frame win ties
            best_score = s;
            best = i;
        }
    }
    if (best >= 0) return best;
    for (int i = 0; i < n; ++i) {
        double s = min_link(i);
        if (s >= best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

inline std::pair<int, BinaryMask> select_seed(const Tracklet& t,
                                              const std::vector<FlowField>& fwd,
                                              double delta_move) {
    int i = select_seed_index(t, fwd, delta_move);
    return {t.detections[i].frame_index, t.detections[i].mask};
}

/// Marches the seed mask frame by frame toward both episode ends. Each step
/// warps the previous frame's mask; if some initial mask of the new frame
/// matches the warp with IoU >= tau_refine, the mask snaps to it, otherwise
/// the warp is kept (the frames where the initial segmentation merged
/// objects).
inline PropagatedObject propagate_bidirectional(int seed_frame, const BinaryMask& seed_mask,
                                                const std::vector<FlowField>& fwd,
                                                const std::vector<FlowField>& bwd,
                                                const std::vector<std::vector<BinaryMask>>& segs,
                                                double tau_refine) {
    const int n_frames = static_cast<int>(segs.size());
    if (seed_frame < 0 || seed_frame >= n_frames)
        throw std::invalid_argument("propagate_bidirectional: seed frame out of range");
    if (static_cast<int>(fwd.size()) != n_frames - 1 ||
        static_cast<int>(bwd.size()) != n_frames - 1)
        throw std::invalid_argument("propagate_bidirectional: missing flow for a frame pair");

    PropagatedObject obj;
    obj.seed_frame = seed_frame;
    obj.seed_mask = seed_mask;
    obj.masks.resize(n_frames);
    obj.provenance.assign(n_frames, Provenance::Warped);
    obj.masks[seed_frame] = seed_mask;
    obj.provenance[seed_frame] = Provenance::Seed;

    // A snapped mask is clipped to a small dilation of the warp. An honest
    // match lies within warp rounding error, so nothing is lost; a merged
    // mask that clears tau_refine because its extra constituent is small
    // (IoU = |big|/(|big|+|small|) can reach ~0.97) would otherwise bleed
    // the neighbor's region into this object's propagation.
    constexpr int kSnapTrimRadius = 2;
    auto refine = [&](int frame, BinaryMask&& warped) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t j = 0; j < segs[frame].size(); ++j) {
            double v = iou(warped, segs[frame][j]);
            if (v > best_iou) {
                best_iou = v;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && best_iou >= tau_refine) {
            BinaryMask guard = dilate(warped, kSnapTrimRadius);
            BinaryMask snapped = segs[frame][best];
            for (std::size_t i = 0; i < snapped.data.size(); ++i) snapped.data[i] &= guard.data[i];
            obj.masks[frame] = std::move(snapped);
            obj.provenance[frame] = Provenance::Snapped;
        } else {
            obj.masks[frame] = std::move(warped);
            obj.provenance[frame] = Provenance::Warped;
        }
    };

    for (int t = seed_frame - 1; t >= 0; --t) refine(t, warp_mask(obj.masks[t + 1], bwd[t]));
    for (int t = seed_frame + 1; t < n_frames; ++t) refine(t, warp_mask(obj.masks[t - 1], fwd[t - 1]));
    return obj;
}

/// Rasterizes propagated objects into one label image per frame. A pixel
/// claimed by several objects goes to the one whose seed frame is temporally
/// nearest; ties prefer snapped/seed masks over warped ones, then the smaller
/// object id. Unclaimed pixels stay background.
inline std::vector<LabelImage> fuse(const std::vector<PropagatedObject>& objs, int width,
                                    int height) {
    int n_frames = objs.empty() ? 0 : static_cast<int>(objs.front().masks.size());
    for (const PropagatedObject& o : objs) {
        if (static_cast<int>(o.masks.size()) != n_frames)
            throw std::invalid_argument("fuse: objects cover different frame ranges");
        for (const BinaryMask& m : o.masks)
            if (m.width != width || m.height != height)
                throw std::invalid_argument("fuse: dimension mismatch");
    }

    std::vector<LabelImage> out;
    out.reserve(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        LabelImage frame(width, height);
        std::vector<int> owner(static_cast<std::size_t>(width) * height, -1);
        auto rank = [&](int k) {
            const PropagatedObject& o = objs[k];
            int warp_penalty = o.provenance[f] == Provenance::Warped ? 1 : 0;
            return std::tuple<int, int, int>(std::abs(o.seed_frame - f), warp_penalty,
                                             o.object_id);
        };
        for (std::size_t k = 0; k < objs.size(); ++k) {
            objs[k].masks[f].for_each_pixel([&](int x, int y) {
                std::size_t i = static_cast<std::size_t>(y) * width + x;
                if (owner[i] < 0 || rank(static_cast<int>(k)) < rank(owner[i]))
                    owner[i] = static_cast<int>(k);
            });
        }
        for (std::size_t i = 0; i < owner.size(); ++i)
            if (owner[i] >= 0)
                frame.data[i] = static_cast<std::uint16_t>(objs[owner[i]].object_id);
        out.push_back(std::move(frame));
    }
    return out;
}

struct FrameStats {
    int init_mask_count = 0;
    int final_mask_count = 0;
    int snapped = 0;
    int warped = 0;
    int seed = 0;
};

struct ObjectStats {
    int object_id = 0;
    int seed_frame = 0;
    int tracklet_length = 0;
};

struct LabelReport {
    std::vector<FrameStats> frames;
    std::vector<ObjectStats> objects;
    int tracklet_count = 0;
    int merged_tracklets = 0;      // absorbed as duplicates of another object
    int suppressed_tracklets = 0;  // dropped as multi-object (blob) tracklets
};

struct LabelResult {
    std::vector<LabelImage> labels;
    LabelReport report;
    std::vector<Tracklet> tracklets;
    std::vector<PropagatedObject> objects;
};

namespace detail {

/// Two tracklets describe the same physical object when one's propagation,
/// evaluated at the other's seed frame, essentially reproduces that seed.
inline bool same_object(const PropagatedObject& a, const PropagatedObject& b) {
    return iou(a.masks[b.seed_frame], b.seed_mask) >= 0.95 ||
           iou(b.masks[a.seed_frame], a.seed_mask) >= 0.95;
}

/// A seed that substantially contains another object's propagated mask (with
/// meaningful area left over) came from a merged initial mask; propagating it
/// would overwrite the per-object recovery, so it is dropped. Near-duplicate
/// tracklets of the same object are exempt (the dedupe pass handles those).
/// Unexplained pixels are preferable to wrong labels in the fused output.
inline bool is_blob_seed(const PropagatedObject& x, const std::vector<PropagatedObject>& all,
                         std::size_t x_index) {
    constexpr double kContainment = 0.7;
    constexpr long long kMinExcessArea = 40;  // just below the smallest object footprint
    long long seed_area = x.seed_mask.area();
    for (std::size_t k = 0; k < all.size(); ++k) {
        if (k == x_index || same_object(x, all[k])) continue;
        const BinaryMask& other = all[k].masks[x.seed_frame];
        long long other_area = other.area();
        if (other_area == 0) continue;
        long long inter = intersection_area(x.seed_mask, other);
        if (static_cast<double>(inter) >= kContainment * static_cast<double>(other_area) &&
            seed_area - inter >= kMinExcessArea)
            return true;
    }
    return false;
}

}  // namespace detail

/// Full labeling pipeline for one episode: imperfect segmentation per frame,
/// greedy tracking, seed selection, bidirectional propagation, duplicate
/// merging, blob suppression, and fusion into final per-frame labels.
inline LabelResult label_episode(const Episode& ep, const PipelineConfig& cfg) {
    const int n_frames = ep.frame_count();
    if (n_frames == 0) throw std::invalid_argument("label_episode: empty episode");
    if (static_cast<int>(ep.fwd.size()) != n_frames - 1 ||
        static_cast<int>(ep.bwd.size()) != n_frames - 1)
        throw std::invalid_argument("label_episode: episode flows incomplete");

    LabelResult result;
    Rng noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::vector<BinaryMask>> segs;
    segs.reserve(n_frames);
    for (const LabelImage& lab : ep.labels)
        segs.push_back(undersegment(lab, cfg.d_merge, noise_rng, cfg.p_noise));

    result.tracklets = associate_greedy(segs, ep.fwd, ep.bwd, cfg.tau_assoc);

    std::vector<PropagatedObject> propagated;
    propagated.reserve(result.tracklets.size());
    for (const Tracklet& t : result.tracklets) {
        int i = select_seed_index(t, ep.fwd, cfg.delta_move);
        PropagatedObject obj =
            propagate_bidirectional(t.detections[i].frame_index, t.detections[i].mask, ep.fwd,
                                    ep.bwd, segs, cfg.tau_refine);
        obj.tracklet_length = t.length();
        propagated.push_back(std::move(obj));
    }

    // Drop multi-object seeds first (flags computed simultaneously over the
    // full set), so a blob tracklet cannot absorb a pure tracklet of one of
    // its constituents during deduplication.
    std::vector<char> blob(propagated.size(), 0);
    for (std::size_t i = 0; i < propagated.size(); ++i)
        blob[i] = detail::is_blob_seed(propagated[i], propagated, i);
    std::vector<PropagatedObject> kept;
    int suppressed_count = 0;
    for (std::size_t i = 0; i < propagated.size(); ++i) {
        if (blob[i]) {
            ++suppressed_count;
            continue;
        }
        kept.push_back(std::move(propagated[i]));
    }

    // Merge tracklets that resolve to the same seed mask: longer tracklets
    // carry more snapping evidence, so they win.
    std::vector<int> order(kept.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return kept[a].tracklet_length > kept[b].tracklet_length;
    });
    std::vector<PropagatedObject> survivors;
    int merged_count = 0;
    for (int idx : order) {
        bool dup = false;
        for (const PropagatedObject& existing : survivors)
            if (detail::same_object(existing, kept[idx])) {
                dup = true;
                break;
            }
        if (dup)
            ++merged_count;
        else
            survivors.push_back(std::move(kept[idx]));
    }
    for (std::size_t i = 0; i < survivors.size(); ++i)
        survivors[i].object_id = static_cast<int>(i) + 1;

    result.labels = fuse(survivors, ep.labels.front().width, ep.labels.front().height);
    if (survivors.empty())
        result.labels.assign(n_frames,
                             LabelImage(ep.labels.front().width, ep.labels.front().height));

    result.report.tracklet_count = static_cast<int>(result.tracklets.size());
    result.report.merged_tracklets = merged_count;
    result.report.suppressed_tracklets = suppressed_count;
    for (int f = 0; f < n_frames; ++f) {
        FrameStats fs;
        fs.init_mask_count = static_cast<int>(segs[f].size());
        fs.final_mask_count = static_cast<int>(result.labels[f].ids().size());
        for (const PropagatedObject& o : survivors) {
            switch (o.provenance[f]) {
                case Provenance::Seed: ++fs.seed; break;
                case Provenance::Snapped: ++fs.snapped; break;
                case Provenance::Warped: ++fs.warped; break;
            }
        }
        result.report.frames.push_back(fs);
    }
    for (const PropagatedObject& o : survivors)
        result.report.objects.push_back({o.object_id, o.seed_frame, o.tracklet_length});
    result.objects = std::move(survivors);
    return result;
}

inline void to_json(nlohmann::json& j, const FrameStats& s) {
    j = nlohmann::json{{"init_mask_count", s.init_mask_count},
                       {"final_mask_count", s.final_mask_count},
                       {"snapped", s.snapped},
                       {"warped", s.warped},
                       {"seed", s.seed}};
}

inline void to_json(nlohmann::json& j, const ObjectStats& s) {
    j = nlohmann::json{{"object_id", s.object_id},
                       {"seed_frame", s.seed_frame},
                       {"tracklet_length", s.tracklet_length}};
}

inline nlohmann::json tracklet_to_json(const Tracklet& t) {
    nlohmann::json dets = nlohmann::json::array();
    for (const Detection& d : t.detections)
        dets.push_back({{"frame_index", d.frame_index}, {"mask_index", d.mask_index}});
    return {{"detections", dets}, {"link_scores", t.link_scores}};
}

inline nlohmann::json label_report_to_json(const LabelReport& r,
                                           const std::vector<Tracklet>& tracklets) {
    nlohmann::json j;
    j["frames"] = r.frames;
    j["objects"] = r.objects;
    j["tracklet_count"] = r.tracklet_count;
    j["merged_tracklets"] = r.merged_tracklets;
    j["suppressed_tracklets"] = r.suppressed_tracklets;
    nlohmann::json tr = nlohmann::json::array();
    for (const Tracklet& t : tracklets) tr.push_back(tracklet_to_json(t));
    j["tracklets"] = tr;
    return j;
}

}  // namespace push2seg
