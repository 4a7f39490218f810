#include "push2seg/mask.hpp"

#include <gtest/gtest.h>

#include <set>
#include <utility>

#include "push2seg/rng.hpp"

using namespace push2seg;

namespace {

BinaryMask from_pixels(int w, int h, std::initializer_list<std::pair<int, int>> px) {
    BinaryMask m(w, h);
    for (auto [x, y] : px) m.set(x, y);
    return m;
}

BinaryMask filled_rect(int w, int h, int x0, int y0, int x1, int y1) {
    BinaryMask m(w, h);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.set(x, y);
    return m;
}

BinaryMask random_mask(Rng& rng, int w, int h, double density) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rng.uniform() < density) m.set(x, y);
    return m;
}

// Brute-force IoU over explicit pixel sets, independent of the dense loop in
// the implementation.
double iou_oracle(const BinaryMask& a, const BinaryMask& b) {
    std::set<std::pair<int, int>> sa, sb;
    a.for_each_pixel([&](int x, int y) { sa.emplace(x, y); });
    b.for_each_pixel([&](int x, int y) { sb.emplace(x, y); });
    int inter = 0;
    for (const auto& p : sa) inter += sb.count(p);
    int uni = static_cast<int>(sa.size() + sb.size()) - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

TEST(Iou, IdenticalNonempty) {
    BinaryMask m = filled_rect(8, 8, 2, 2, 5, 5);
    EXPECT_DOUBLE_EQ(iou(m, m), 1.0);
}

TEST(Iou, DisjointMasks) {
    BinaryMask a = filled_rect(8, 8, 0, 0, 1, 1);
    BinaryMask b = filled_rect(8, 8, 4, 4, 6, 6);
    EXPECT_DOUBLE_EQ(iou(a, b), 0.0);
}

TEST(Iou, PartialOverlapMatchesEnumeration) {
    // a = {(0,0),(0,1)}, b = {(0,1),(1,1)}: intersection 1, union 3.
    BinaryMask a = from_pixels(4, 4, {{0, 0}, {0, 1}});
    BinaryMask b = from_pixels(4, 4, {{0, 1}, {1, 1}});
    EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(iou(a, b), iou_oracle(a, b));
}

TEST(Iou, BothEmptyIsZero) {
    BinaryMask a(4, 4), b(4, 4);
    EXPECT_DOUBLE_EQ(iou(a, b), 0.0);
}

TEST(Iou, DimensionMismatchThrows) {
    BinaryMask a(4, 4), b(5, 4);
    EXPECT_THROW(iou(a, b), std::invalid_argument);
}

TEST(Iou, SymmetricAndBoundedOnRandomMasks) {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        BinaryMask a = random_mask(rng, 16, 16, 0.3);
        BinaryMask b = random_mask(rng, 16, 16, 0.3);
        double ab = iou(a, b);
        EXPECT_DOUBLE_EQ(ab, iou(b, a));
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_DOUBLE_EQ(ab, iou_oracle(a, b));
    }
}

TEST(Boundary, SinglePixel) {
    BinaryMask m = from_pixels(5, 5, {{2, 2}});
    EXPECT_EQ(boundary(m), m);
}

TEST(Boundary, FilledSquareLeavesPerimeterRing) {
    BinaryMask m = filled_rect(8, 8, 2, 2, 5, 5);
    BinaryMask b = boundary(m);
    // Enumerate: 4x4 square has a 12-pixel perimeter.
    EXPECT_EQ(b.area(), 12);
    EXPECT_FALSE(b.at(3, 3));
    EXPECT_FALSE(b.at(4, 4));
    EXPECT_TRUE(b.at(2, 2));
    EXPECT_TRUE(b.at(5, 3));
}

TEST(Boundary, EmptyMask) {
    BinaryMask m(6, 6);
    EXPECT_TRUE(boundary(m).empty());
}

TEST(Boundary, ImageBorderCountsAsOutside) {
    BinaryMask m = filled_rect(4, 4, 0, 0, 3, 3);  // full image
    BinaryMask b = boundary(m);
    EXPECT_EQ(b.area(), 12);
    EXPECT_FALSE(b.at(1, 1));
    EXPECT_TRUE(b.at(0, 0));
}

TEST(Boundary, SubsetOfMaskAndNoInteriorPixels) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask m = random_mask(rng, 12, 12, 0.4);
        BinaryMask b = boundary(m);
        b.for_each_pixel([&](int x, int y) { EXPECT_TRUE(m.at(x, y)); });
        m.for_each_pixel([&](int x, int y) {
            bool interior = x > 0 && x < 11 && y > 0 && y < 11 && m.at(x - 1, y) &&
                            m.at(x + 1, y) && m.at(x, y - 1) && m.at(x, y + 1);
            if (interior) {
                EXPECT_FALSE(b.at(x, y));
            }
        });
    }
}

TEST(Dilate, ZeroRadiusIsIdentity) {
    BinaryMask m = from_pixels(6, 6, {{1, 2}, {4, 4}});
    EXPECT_EQ(dilate(m, 0), m);
}

TEST(Dilate, SinglePixelRadiusOneGivesBlock) {
    BinaryMask m = from_pixels(7, 7, {{3, 3}});
    BinaryMask d = dilate(m, 1);
    EXPECT_EQ(d, filled_rect(7, 7, 2, 2, 4, 4));
}

TEST(Dilate, ClipsAtCorner) {
    // 2x2 block at the corner dilated by 2: brute-force Chebyshev check.
    BinaryMask m = filled_rect(8, 8, 0, 0, 1, 1);
    BinaryMask d = dilate(m, 2);
    BinaryMask expect(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            bool close = false;
            m.for_each_pixel([&](int mx, int my) {
                if (std::max(std::abs(x - mx), std::abs(y - my)) <= 2) close = true;
            });
            if (close) expect.set(x, y);
        }
    EXPECT_EQ(d, expect);
    EXPECT_EQ(d, filled_rect(8, 8, 0, 0, 3, 3));
}

TEST(Dilate, MonotoneInMaskAndRadius) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask m = random_mask(rng, 10, 10, 0.2);
        BinaryMask d1 = dilate(m, 1);
        BinaryMask d2 = dilate(m, 2);
        m.for_each_pixel([&](int x, int y) { EXPECT_TRUE(d1.at(x, y)); });
        d1.for_each_pixel([&](int x, int y) { EXPECT_TRUE(d2.at(x, y)); });
    }
}

TEST(Erode, InverseOfDilateOnInteriorBlob) {
    BinaryMask m = filled_rect(10, 10, 3, 3, 6, 6);
    EXPECT_EQ(erode(dilate(m, 1), 1), m);
    EXPECT_EQ(erode(m, 1), filled_rect(10, 10, 4, 4, 5, 5));
}

TEST(ConnectedComponents, EmptyMask) {
    EXPECT_TRUE(connected_components(BinaryMask(5, 5)).empty());
}

TEST(ConnectedComponents, TwoSeparatedSquares) {
    BinaryMask m(12, 12);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) m.set(x, y);
    for (int y = 7; y <= 8; ++y)
        for (int x = 7; x <= 8; ++x) m.set(x, y);
    auto comps = connected_components(m);
    ASSERT_EQ(comps.size(), 2u);
    EXPECT_EQ(comps[0].area(), 9);  // descending area
    EXPECT_EQ(comps[1].area(), 4);
}

TEST(ConnectedComponents, DiagonalTouchIsOneComponent) {
    BinaryMask m = from_pixels(5, 5, {{1, 1}, {2, 2}});
    EXPECT_EQ(connected_components(m).size(), 1u);
}

TEST(ConnectedComponents, ReassemblesAndDisjoint) {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask m = random_mask(rng, 14, 14, 0.35);
        auto comps = connected_components(m);
        BinaryMask uni(14, 14);
        long long total = 0;
        for (const auto& c : comps) {
            c.for_each_pixel([&](int x, int y) {
                EXPECT_FALSE(uni.at(x, y));  // pairwise disjoint
                uni.set(x, y);
            });
            total += c.area();
        }
        EXPECT_EQ(uni, m);
        EXPECT_EQ(total, m.area());
    }
}

TEST(ConnectedComponents, AreaTieBrokenBySmallestYX) {
    BinaryMask m = from_pixels(6, 6, {{4, 0}, {0, 2}});
    auto comps = connected_components(m);
    ASSERT_EQ(comps.size(), 2u);
    EXPECT_TRUE(comps[0].at(4, 0));  // (y,x) = (0,4) beats (2,0)
    EXPECT_TRUE(comps[1].at(0, 2));
}

TEST(Centroid, SinglePixel) {
    BinaryMask m = from_pixels(10, 10, {{3, 7}});
    Vec2 c = centroid(m);
    EXPECT_DOUBLE_EQ(c.x, 3.0);
    EXPECT_DOUBLE_EQ(c.y, 7.0);
}

TEST(Centroid, TwoByTwoBlockAtOrigin) {
    BinaryMask m = filled_rect(4, 4, 0, 0, 1, 1);
    Vec2 c = centroid(m);
    EXPECT_DOUBLE_EQ(c.x, 0.5);
    EXPECT_DOUBLE_EQ(c.y, 0.5);
}

TEST(Centroid, LShapeBruteForceMean) {
    BinaryMask m = from_pixels(4, 4, {{0, 0}, {1, 0}, {0, 1}});
    Vec2 c = centroid(m);
    EXPECT_DOUBLE_EQ(c.x, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.y, 1.0 / 3.0);
}

TEST(Centroid, EmptyMaskThrows) {
    EXPECT_THROW(centroid(BinaryMask(4, 4)), std::invalid_argument);
}

TEST(LabelImage, ExtractMasksDisjointCoverNonBackground) {
    LabelImage li(8, 8);
    li.set(1, 1, 3);
    li.set(2, 1, 3);
    li.set(5, 5, 7);
    auto masks = li.extract_masks();
    ASSERT_EQ(masks.size(), 2u);
    EXPECT_EQ(masks[0].first, 3);
    EXPECT_EQ(masks[1].first, 7);
    EXPECT_EQ(masks[0].second.area() + masks[1].second.area(), 3);
    EXPECT_EQ(intersection_area(masks[0].second, masks[1].second), 0);
}

}  // namespace
