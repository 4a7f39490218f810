#include "push2seg/track.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "push2seg/percept.hpp"
#include "push2seg/sim.hpp"

using namespace push2seg;

namespace {

BinaryMask filled_rect(int w, int h, int x0, int y0, int x1, int y1) {
    BinaryMask m(w, h);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.set(x, y);
    return m;
}

FlowField flow_on_mask(const BinaryMask& m, float du, float dv) {
    FlowField f(m.width, m.height);
    m.for_each_pixel([&](int x, int y) { f.set(x, y, du, dv); });
    return f;
}

TEST(PairwiseScore, RigidTranslationWithOracleFlowScoresOne) {
    BinaryMask at_t = filled_rect(64, 64, 10, 10, 19, 19);
    BinaryMask at_t1 = filled_rect(64, 64, 35, 10, 44, 19);
    FlowField fwd = flow_on_mask(at_t, 25.0f, 0.0f);
    FlowField bwd = flow_on_mask(at_t1, -25.0f, 0.0f);
    EXPECT_NEAR(pairwise_score(at_t, at_t1, fwd, bwd), 1.0, 1e-6);
}

TEST(PairwiseScore, MergedMaskVersusConstituentIsLow) {
    // A merged mask at t (10x10 square A plus abutting 12x12 square B), one
    // constituent at t+1 after B is pushed 25 px. Pixel enumeration: both
    // warps intersect A in 100 px against a union of 244 px, so the score is
    // 100/244. (With equal squares the value would be exactly 0.5, which is
    // why the constituents differ in size here.)
    BinaryMask square_a = filled_rect(64, 64, 10, 10, 19, 19);
    BinaryMask square_b = filled_rect(64, 64, 20, 9, 31, 20);
    BinaryMask merged(64, 64);
    for (std::size_t i = 0; i < merged.data.size(); ++i)
        merged.data[i] = square_a.data[i] | square_b.data[i];
    ASSERT_EQ(merged.area(), 244);
    BinaryMask a_at_t1 = square_a;
    FlowField fwd = flow_on_mask(square_b, 25.0f, 0.0f);  // B pushed right
    FlowField bwd(64, 64);                                // A static
    double s = pairwise_score(merged, a_at_t1, fwd, bwd);
    EXPECT_LT(s, 0.5);
    EXPECT_DOUBLE_EQ(s, 100.0 / 244.0);
}

TEST(PairwiseScore, DisjointFarMasksScoreZero) {
    BinaryMask a = filled_rect(64, 64, 5, 5, 10, 10);
    BinaryMask b = filled_rect(64, 64, 50, 50, 55, 55);
    EXPECT_DOUBLE_EQ(pairwise_score(a, b, FlowField(64, 64), FlowField(64, 64)), 0.0);
}

TEST(PairwiseScore, NonAdjacentDetectionsThrow) {
    Detection a{0, 0, filled_rect(8, 8, 1, 1, 2, 2)};
    Detection b{2, 0, filled_rect(8, 8, 1, 1, 2, 2)};
    EXPECT_THROW(pairwise_score(a, b, FlowField(8, 8), FlowField(8, 8)), std::invalid_argument);
}

TEST(PairwiseScore, RoleSwapGivesSameValue) {
    BinaryMask a = filled_rect(32, 32, 4, 4, 12, 10);
    BinaryMask b = filled_rect(32, 32, 6, 5, 14, 11);
    FlowField fwd = flow_on_mask(a, 2.0f, 1.0f);
    FlowField bwd = flow_on_mask(b, -2.0f, -1.0f);
    // min of the same two IoUs, whichever argument order.
    EXPECT_DOUBLE_EQ(pairwise_score(a, b, fwd, bwd),
                     std::min(iou(warp_mask(b, bwd), a), iou(warp_mask(a, fwd), b)));
}

TEST(AssociateGreedy, SingleFrameGivesOneTrackletPerMask) {
    std::vector<std::vector<BinaryMask>> segs(1);
    segs[0].push_back(filled_rect(32, 32, 1, 1, 5, 5));
    segs[0].push_back(filled_rect(32, 32, 10, 10, 12, 12));
    auto tracklets = associate_greedy(segs, {}, {}, 0.6);
    ASSERT_EQ(tracklets.size(), 2u);
    EXPECT_EQ(tracklets[0].length(), 1);
    EXPECT_EQ(tracklets[1].length(), 1);
    // Seed order within the frame: descending area.
    EXPECT_EQ(tracklets[0].detections[0].mask_index, 0);
}

TEST(AssociateGreedy, SeparatedObjectsProduceFullSpanTracklets) {
    // Five always-separated objects with oracle flow: every link scores 1,
    // so exactly five tracklets spanning all frames.
    PipelineConfig cfg;
    cfg.n_objects = 5;
    cfg.n_pushes = 6;
    cfg.g_init = 40.0;  // spread out at sampling time
    cfg.d_merge = 0;    // perfect initial segmentation
    Episode ep = run_episode(cfg, 8);
    Rng rng(0);
    std::vector<std::vector<BinaryMask>> segs;
    for (const LabelImage& lab : ep.labels) segs.push_back(undersegment(lab, 0, rng));
    auto tracklets = associate_greedy(segs, ep.fwd, ep.bwd, 0.6);
    ASSERT_EQ(tracklets.size(), 5u);
    for (const Tracklet& t : tracklets) {
        EXPECT_EQ(t.length(), ep.frame_count());
        for (double s : t.link_scores) EXPECT_GT(s, 0.6);
    }
}

TEST(AssociateGreedy, MergedFrameZeroMaskFormsItsOwnTracklet) {
    // Two squares merged at frame 0, separated at frame 1. The merged mask's
    // best backward link stays below the threshold (enumerated in the
    // PairwiseScore test), so it seeds a length-1 tracklet.
    BinaryMask square_a = filled_rect(64, 64, 10, 10, 19, 19);
    BinaryMask square_b = filled_rect(64, 64, 20, 10, 29, 19);
    BinaryMask merged(64, 64);
    for (std::size_t i = 0; i < merged.data.size(); ++i)
        merged.data[i] = square_a.data[i] | square_b.data[i];
    BinaryMask b_moved = filled_rect(64, 64, 45, 10, 54, 19);

    std::vector<std::vector<BinaryMask>> segs(2);
    segs[0] = {merged};
    segs[1] = {square_a, b_moved};
    std::vector<FlowField> fwd{flow_on_mask(square_b, 25.0f, 0.0f)};
    std::vector<FlowField> bwd{flow_on_mask(b_moved, -25.0f, 0.0f)};

    auto tracklets = associate_greedy(segs, fwd, bwd, 0.6);
    ASSERT_EQ(tracklets.size(), 3u);
    std::multiset<int> lengths;
    for (const Tracklet& t : tracklets) lengths.insert(t.length());
    EXPECT_EQ(lengths, (std::multiset<int>{1, 1, 1}));
}

TEST(AssociateGreedy, PartitionPropertyOnDefaultEpisodes) {
    PipelineConfig cfg;
    cfg.n_pushes = 10;
    for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
        Episode ep = run_episode(cfg, seed);
        Rng rng(0);
        std::vector<std::vector<BinaryMask>> segs;
        for (const LabelImage& lab : ep.labels)
            segs.push_back(undersegment(lab, cfg.d_merge, rng));
        auto tracklets = associate_greedy(segs, ep.fwd, ep.bwd, cfg.tau_assoc);

        std::map<std::pair<int, int>, int> seen;
        int total = 0;
        for (const Tracklet& t : tracklets) {
            ASSERT_EQ(t.link_scores.size(), t.detections.size() - 1);
            for (std::size_t i = 0; i + 1 < t.detections.size(); ++i) {
                EXPECT_EQ(t.detections[i + 1].frame_index, t.detections[i].frame_index + 1);
                EXPECT_GT(t.link_scores[i], cfg.tau_assoc);
            }
            for (const Detection& d : t.detections) {
                ++seen[{d.frame_index, d.mask_index}];
                ++total;
            }
        }
        int expected = 0;
        for (int f = 0; f < ep.frame_count(); ++f)
            expected += static_cast<int>(segs[f].size());
        EXPECT_EQ(total, expected);
        for (const auto& [key, count] : seen) EXPECT_EQ(count, 1);
    }
}

TEST(AssociateGreedy, PurityUnderPerfectSegmentation) {
    // With d_merge = 0 every tracklet must contain detections of exactly one
    // ground-truth object (majority-overlap check).
    PipelineConfig cfg;
    cfg.d_merge = 0;
    cfg.n_pushes = 10;
    Episode ep = run_episode(cfg, 31);
    Rng rng(0);
    std::vector<std::vector<BinaryMask>> segs;
    for (const LabelImage& lab : ep.labels) segs.push_back(undersegment(lab, 0, rng));
    auto tracklets = associate_greedy(segs, ep.fwd, ep.bwd, cfg.tau_assoc);
    for (const Tracklet& t : tracklets) {
        std::set<int> gt_ids;
        for (const Detection& d : t.detections) {
            int best_id = 0;
            long long best_overlap = -1;
            for (int id : ep.labels[d.frame_index].ids()) {
                long long ov = intersection_area(ep.labels[d.frame_index].mask_of(id), d.mask);
                if (ov > best_overlap) {
                    best_overlap = ov;
                    best_id = id;
                }
            }
            gt_ids.insert(best_id);
        }
        EXPECT_EQ(gt_ids.size(), 1u);
    }
}

TEST(AssociateGreedy, RaisingThresholdNeverDecreasesTrackletCount) {
    PipelineConfig cfg;
    cfg.n_pushes = 8;
    Episode ep = run_episode(cfg, 40);
    Rng rng(0);
    std::vector<std::vector<BinaryMask>> segs;
    for (const LabelImage& lab : ep.labels) segs.push_back(undersegment(lab, cfg.d_merge, rng));
    std::size_t prev = 0;
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        std::size_t n = associate_greedy(segs, ep.fwd, ep.bwd, tau).size();
        EXPECT_GE(n, prev);
        prev = n;
    }
}

}  // namespace
