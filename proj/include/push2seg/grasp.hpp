#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "push2seg/config.hpp"
#include "push2seg/geometry.hpp"
#include "push2seg/mask.hpp"
#include "push2seg/percept.hpp"
#include "push2seg/propagate.hpp"
#include "push2seg/rng.hpp"
#include "push2seg/sim.hpp"

namespace push2seg {

/// Planar two-finger grasp: closing-axis angle theta is normalized to
/// [0, pi) since the axis is orientation-symmetric.
struct GraspPose {
    Vec2 center;
    double theta = 0.0;
    double width = 0.0;
};

enum class GraspFailure : std::uint8_t {
    None,
    WidthExceeded,
    FingerCollision,
    TargetMissed,
    HardFailure
};

inline const char* grasp_failure_name(GraspFailure f) {
    switch (f) {
        case GraspFailure::None: return "none";
        case GraspFailure::WidthExceeded: return "width_exceeded";
        case GraspFailure::FingerCollision: return "finger_collision";
        case GraspFailure::TargetMissed: return "target_missed";
        default: return "hard_failure";
    }
}

struct GraspOutcome {
    bool success = false;
    GraspFailure reason = GraspFailure::None;
};

struct GraspParams {
    double w_max = 60.0;
    double finger_length = 20.0;
    double clearance = 2.0;

    static GraspParams from_config(const PipelineConfig& cfg) {
        return {cfg.grasp_w_max, cfg.grasp_finger_length, cfg.grasp_clearance};
    }
};

/// Principal components of a planar point set (population covariance).
struct PlanarPca {
    Vec2 mean;
    double theta_minor = 0.0;  // direction of the smaller eigenvalue, [0, pi)
    double eval_major = 0.0;
    double eval_minor = 0.0;
    bool degenerate = false;  // eigenvalues equal within tolerance
};

inline PlanarPca planar_pca(const std::vector<Vec2>& pts) {
    if (pts.empty()) throw std::invalid_argument("planar_pca: empty point set");
    PlanarPca out;
    double n = static_cast<double>(pts.size());
    for (const Vec2& p : pts) {
        out.mean.x += p.x;
        out.mean.y += p.y;
    }
    out.mean.x /= n;
    out.mean.y /= n;
    double a = 0.0, b = 0.0, c = 0.0;
    for (const Vec2& p : pts) {
        double dx = p.x - out.mean.x, dy = p.y - out.mean.y;
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    a /= n;
    b /= n;
    c /= n;
    double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
    out.eval_major = 0.5 * (a + c + disc);
    out.eval_minor = 0.5 * (a + c - disc);
    if (disc <= 1e-9) {
        // Rotationally ambiguous (e.g. a disc): closing axis defaults to 0.
        out.degenerate = true;
        out.theta_minor = 0.0;
        return out;
    }
    // Eigenvector of the smaller eigenvalue; pick the better-conditioned form.
    Vec2 v1{b, out.eval_minor - a};
    Vec2 v2{out.eval_minor - c, b};
    Vec2 v = norm_sq(v1) >= norm_sq(v2) ? v1 : v2;
    double theta = std::atan2(v.y, v.x);
    if (theta < 0.0) theta += M_PI;
    if (theta >= M_PI) theta -= M_PI;
    out.theta_minor = theta;
    return out;
}

/// Plans a top-down grasp from a point set: center at the mean, closing axis
/// along the second (smaller) principal component, width from the extent of
/// the projections onto that axis.
inline GraspPose plan_grasp_points(const std::vector<Vec2>& pts) {
    if (pts.size() < 3) throw std::invalid_argument("plan_grasp: need at least 3 points");
    PlanarPca pca = planar_pca(pts);
    GraspPose pose;
    pose.center = pca.mean;
    pose.theta = pca.theta_minor;
    Vec2 axis{std::cos(pose.theta), std::sin(pose.theta)};
    double lo = 1e300, hi = -1e300;
    for (const Vec2& p : pts) {
        double t = dot(p, axis);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    pose.width = hi - lo + 1.0;
    return pose;
}

inline GraspPose plan_grasp(const BinaryMask& m) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(m.area()));
    m.for_each_pixel([&](int x, int y) {
        pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    });
    if (pts.size() < 3) throw std::invalid_argument("plan_grasp: mask area below 3");
    return plan_grasp_points(pts);
}

/// Simulates a top-down grasp against ground truth. Success requires the
/// width to fit the gripper, the closing segment to touch the target, and the
/// full closing sweep (the rectangle the fingers pass through, widened by the
/// finger length) to contain no pixel of any other object; merged-mask grasps
/// fail on that last rule because the sweep runs over the co-segmented
/// neighbor. On success the caller removes the target from the scene.
inline GraspOutcome attempt_grasp(const Scene& s, int target_id, const GraspPose& g,
                                  const GraspParams& params) {
    if (!s.find(target_id)) throw std::invalid_argument("attempt_grasp: unknown target id");
    if (g.width > params.w_max) return {false, GraspFailure::WidthExceeded};

    LabelImage labels = render(s).label;
    Vec2 axis{std::cos(g.theta), std::sin(g.theta)};
    double half_span = g.width / 2.0 + params.clearance;

    bool touches_target = false;
    for (double t = -half_span; t <= half_span; t += 0.25) {
        int x = static_cast<int>(std::llround(g.center.x + t * axis.x));
        int y = static_cast<int>(std::llround(g.center.y + t * axis.y));
        if (x < 0 || x >= s.width || y < 0 || y >= s.height) continue;
        if (labels.at(x, y) == target_id) {
            touches_target = true;
            break;
        }
    }
    if (!touches_target) return {false, GraspFailure::TargetMissed};

    // Sweep region: |u| <= half_span along the closing axis, |v| <= L_f/2
    // across it.
    Vec2 perp{-axis.y, axis.x};
    double half_len = params.finger_length / 2.0;
    double reach = std::hypot(half_span, half_len);
    int x0 = std::max(0, static_cast<int>(std::floor(g.center.x - reach)));
    int x1 = std::min(s.width - 1, static_cast<int>(std::ceil(g.center.x + reach)));
    int y0 = std::max(0, static_cast<int>(std::floor(g.center.y - reach)));
    int y1 = std::min(s.height - 1, static_cast<int>(std::ceil(g.center.y + reach)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            int id = labels.at(x, y);
            if (id == 0 || id == target_id) continue;
            Vec2 d = Vec2{static_cast<double>(x), static_cast<double>(y)} - g.center;
            if (std::abs(dot(d, axis)) <= half_span && std::abs(dot(d, perp)) <= half_len)
                return {false, GraspFailure::FingerCollision};
        }
    return {true, GraspFailure::None};
}

// ---------------------------------------------------------------------------
// Table clearing benchmark
// ---------------------------------------------------------------------------

enum class SegMode { Baseline, Refined };

inline const char* seg_mode_name(SegMode m) {
    return m == SegMode::Baseline ? "baseline" : "refined";
}

struct TrialRecord {
    int trial = 0;
    int target_id = -1;  // -1 when no graspable candidate remained
    bool success = false;
    GraspFailure reason = GraspFailure::None;
};

struct ClearTableRecord {
    bool hard_failure = false;
    int successes = 0;
    int n_objects = 0;
    std::vector<TrialRecord> trials;
};

namespace detail {

/// Segments the current scene: the baseline mode runs the imperfect
/// segmenter directly; the refined mode runs a full virtual pushing episode
/// from the scene and takes the pipeline's frame-0 labels.
inline std::vector<BinaryMask> segment_scene(const Scene& s, SegMode mode, Rng& rng,
                                             const PipelineConfig& cfg) {
    if (mode == SegMode::Baseline)
        return undersegment(render(s).label, cfg.d_merge, rng, cfg.p_noise);
    PipelineConfig vcfg = cfg;
    vcfg.seed = rng.next();
    Rng vrng(vcfg.seed);
    Episode ep = run_episode_from(s, vcfg, vrng);
    LabelResult res = label_episode(ep, vcfg);
    std::vector<BinaryMask> masks;
    for (auto& [id, m] : res.labels[0].extract_masks()) masks.push_back(std::move(m));
    return masks;
}

/// The ground-truth object a predicted mask most plausibly refers to.
inline int resolve_target(const Scene& s, const LabelImage& labels, const BinaryMask& mask) {
    int best_id = -1;
    long long best = 0;
    for (const ObjectState& o : s.objects) {
        long long ov = intersection_area(labels.mask_of(o.id), mask);
        if (ov > best) {
            best = ov;
            best_id = o.id;
        }
    }
    return best_id;
}

}  // namespace detail

/// Clears a scene object by object: each trial re-segments, plans a grasp per
/// predicted mask, and attempts the largest-area mask whose resolved target
/// has not been tried yet. A scene aborts as a hard failure when the initial
/// segmentation admits no feasible grasp at all.
inline ClearTableRecord clear_table(Scene scene, SegMode mode, Rng& rng,
                                    const PipelineConfig& cfg) {
    const GraspParams params = GraspParams::from_config(cfg);
    ClearTableRecord rec;
    rec.n_objects = static_cast<int>(scene.objects.size());

    auto planned_masks = [&](const Scene& s) {
        std::vector<BinaryMask> masks = detail::segment_scene(s, mode, rng, cfg);
        std::stable_sort(masks.begin(), masks.end(),
                         [](const BinaryMask& a, const BinaryMask& b) {
                             return a.area() > b.area();
                         });
        return masks;
    };

    // Hard-failure probe on the full initial scene.
    {
        LabelImage labels = render(scene).label;
        bool any_feasible = false;
        for (const BinaryMask& m : planned_masks(scene)) {
            if (m.area() < 3) continue;
            int target = detail::resolve_target(scene, labels, m);
            if (target < 0) continue;
            if (attempt_grasp(scene, target, plan_grasp(m), params).success) {
                any_feasible = true;
                break;
            }
        }
        if (!any_feasible) {
            rec.hard_failure = true;
            for (int t = 0; t < rec.n_objects; ++t)
                rec.trials.push_back({t, -1, false, GraspFailure::HardFailure});
            return rec;
        }
    }

    std::vector<char> attempted(65536, 0);
    for (int trial = 0; trial < rec.n_objects; ++trial) {
        LabelImage labels = render(scene).label;
        TrialRecord tr;
        tr.trial = trial;
        tr.reason = GraspFailure::HardFailure;  // until a candidate is found
        for (const BinaryMask& m : planned_masks(scene)) {
            if (m.area() < 3) continue;
            int target = detail::resolve_target(scene, labels, m);
            if (target < 0 || attempted[target]) continue;
            attempted[target] = 1;
            tr.target_id = target;
            GraspOutcome outcome = attempt_grasp(scene, target, plan_grasp(m), params);
            tr.success = outcome.success;
            tr.reason = outcome.reason;
            if (outcome.success) {
                std::erase_if(scene.objects,
                              [&](const ObjectState& o) { return o.id == target; });
                ++rec.successes;
            }
            break;
        }
        rec.trials.push_back(tr);
        if (scene.objects.empty()) break;
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Benchmark driver
// ---------------------------------------------------------------------------

struct BenchSceneSpec {
    std::string config_name;
    double g_init = 2.0;
    std::uint64_t seed = 0;
};

struct BenchSceneResult {
    BenchSceneSpec spec;
    SegMode mode = SegMode::Baseline;
    ClearTableRecord record;
};

struct GraspBenchReport {
    std::vector<BenchSceneResult> results;

    int total(SegMode mode) const {
        int sum = 0;
        for (const BenchSceneResult& r : results)
            if (r.mode == mode) sum += r.record.successes;
        return sum;
    }
    int total(SegMode mode, const std::string& config_name) const {
        int sum = 0;
        for (const BenchSceneResult& r : results)
            if (r.mode == mode && r.spec.config_name == config_name)
                sum += r.record.successes;
        return sum;
    }
    int hard_failures(SegMode mode) const {
        int count = 0;
        for (const BenchSceneResult& r : results)
            if (r.mode == mode) count += r.record.hard_failure;
        return count;
    }
};

/// Two scenes per clutter level, from tightly packed to well separated.
inline std::vector<BenchSceneSpec> default_bench_specs(std::uint64_t base_seed) {
    std::vector<BenchSceneSpec> specs;
    const std::pair<const char*, double> levels[] = {
        {"packed_tight", 0.5}, {"packed", 1.5}, {"medium", 8.0}, {"spread", 30.0}};
    int i = 0;
    for (const auto& [name, gap] : levels)
        for (int k = 0; k < 2; ++k) specs.push_back({name, gap, base_seed + i++});
    return specs;
}

/// Runs clear_table for every (scene spec, mode) pair. Seeds are paired:
/// both modes see the identical initial scene and start from the same rng
/// state, so totals are directly comparable.
inline GraspBenchReport run_grasp_bench(const PipelineConfig& cfg,
                                        const std::vector<BenchSceneSpec>& specs,
                                        const std::vector<SegMode>& modes) {
    GraspBenchReport report;
    for (const BenchSceneSpec& spec : specs) {
        for (SegMode mode : modes) {
            PipelineConfig scfg = cfg;
            scfg.g_init = spec.g_init;
            Rng rng(spec.seed);
            Scene scene = sample_scene(rng, scfg.n_objects, scfg);
            BenchSceneResult r;
            r.spec = spec;
            r.mode = mode;
            r.record = clear_table(scene, mode, rng, scfg);
            report.results.push_back(std::move(r));
        }
    }
    return report;
}

inline nlohmann::json grasp_bench_to_json(const GraspBenchReport& report) {
    nlohmann::json scenes = nlohmann::json::array();
    for (const BenchSceneResult& r : report.results) {
        nlohmann::json trials = nlohmann::json::array();
        for (const TrialRecord& t : r.record.trials)
            trials.push_back({{"trial", t.trial},
                              {"target_id", t.target_id},
                              {"success", t.success},
                              {"failure_reason", grasp_failure_name(t.reason)}});
        scenes.push_back({{"config", r.spec.config_name},
                          {"seed", r.spec.seed},
                          {"mode", seg_mode_name(r.mode)},
                          {"hard_failure", r.record.hard_failure},
                          {"successes", r.record.successes},
                          {"n_objects", r.record.n_objects},
                          {"trials", trials}});
    }
    nlohmann::json totals;
    for (SegMode mode : {SegMode::Baseline, SegMode::Refined}) {
        nlohmann::json per_config;
        bool present = false;
        for (const BenchSceneResult& r : report.results)
            if (r.mode == mode) {
                per_config[r.spec.config_name] = report.total(mode, r.spec.config_name);
                present = true;
            }
        if (!present) continue;
        totals[seg_mode_name(mode)] = {{"successes", report.total(mode)},
                                       {"hard_failures", report.hard_failures(mode)},
                                       {"per_config", per_config}};
    }
    return {{"scenes", scenes}, {"totals", totals}};
}

}  // namespace push2seg
