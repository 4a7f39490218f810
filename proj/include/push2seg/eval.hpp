#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "push2seg/mask.hpp"

namespace push2seg {

/// Segmentation quality metrics for one prediction/ground-truth pair.
struct MetricsReport {
    double overlap_p = 0.0;
    double overlap_r = 0.0;
    double overlap_f = 0.0;
    double boundary_p = 0.0;
    double boundary_r = 0.0;
    double boundary_f = 0.0;
    double f75 = 0.0;  // percentage in [0, 100]
    int n_pred = 0;
    int n_gt = 0;
};

/// Pairwise F-measure between one prediction and one ground-truth mask.
/// With P = |c n g|/|c| and R = |c n g|/|g| this reduces to the Dice form
/// 2|c n g| / (|c| + |g|).
inline double pairwise_f_measure(const BinaryMask& c, const BinaryMask& g) {
    long long inter = intersection_area(c, g);
    long long denom = static_cast<long long>(c.area()) + g.area();
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(denom);
}

namespace detail {

/// O(n^3) Hungarian algorithm (potentials formulation) for a square
/// min-cost assignment; returns the column picked for each row.
inline std::vector<int> solve_min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] >= 1) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

inline void require_common_dims(const std::vector<BinaryMask>& preds,
                                const std::vector<BinaryMask>& gts) {
    const BinaryMask* ref = nullptr;
    for (const auto& m : preds) {
        if (!ref) ref = &m;
        if (!m.same_dims(*ref)) throw std::invalid_argument("eval: dimension mismatch");
    }
    for (const auto& m : gts) {
        if (!ref) ref = &m;
        if (!m.same_dims(*ref)) throw std::invalid_argument("eval: dimension mismatch");
    }
}

}  // namespace detail

/// Matches predictions to ground-truth masks by maximizing the summed
/// pairwise F-measure (Hungarian algorithm on the padded square matrix).
/// Returns, per prediction, the matched ground-truth index or -1; zero-score
/// pairs count as unmatched. The map is injective.
inline std::vector<int> match_hungarian(const std::vector<BinaryMask>& preds,
                                        const std::vector<BinaryMask>& gts) {
    detail::require_common_dims(preds, gts);
    const int np = static_cast<int>(preds.size());
    const int ng = static_cast<int>(gts.size());
    if (np == 0) return {};
    const int n = std::max(np, ng);
    std::vector<std::vector<double>> f(np, std::vector<double>(ng, 0.0));
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < ng; ++j) f[i][j] = pairwise_f_measure(preds[i], gts[j]);

    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < ng; ++j) cost[i][j] = -f[i][j];
    std::vector<int> row_to_col = detail::solve_min_cost_assignment(cost);

    std::vector<int> assignment(np, -1);
    for (int i = 0; i < np; ++i) {
        int j = row_to_col[i];
        if (j >= 0 && j < ng && f[i][j] > 0.0) assignment[i] = j;
    }
    return assignment;
}

namespace detail {

/// Empty-denominator rule: a ratio with zero denominator is 1 when the
/// opposing set is also empty, 0 otherwise.
inline double safe_ratio(double numer, double denom, bool opposing_empty) {
    if (denom > 0.0) return numer / denom;
    return opposing_empty ? 1.0 : 0.0;
}

inline double f_from_pr(double p, double r) {
    if (p + r <= 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

}  // namespace detail

struct Prf {
    double p = 0.0, r = 0.0, f = 0.0;
};

/// Overlap precision/recall/F: P sums matched intersections over total
/// predicted area, R over total ground-truth area.
inline Prf overlap_prf(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts,
                       const std::vector<int>& assignment) {
    long long inter_sum = 0, pred_sum = 0, gt_sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        pred_sum += preds[i].area();
        if (assignment[i] >= 0) inter_sum += intersection_area(preds[i], gts[assignment[i]]);
    }
    for (const BinaryMask& g : gts) gt_sum += g.area();
    Prf out;
    out.p = detail::safe_ratio(static_cast<double>(inter_sum), static_cast<double>(pred_sum),
                               gt_sum == 0);
    out.r = detail::safe_ratio(static_cast<double>(inter_sum), static_cast<double>(gt_sum),
                               pred_sum == 0);
    out.f = (pred_sum == 0 && gt_sum == 0) ? 1.0 : detail::f_from_pr(out.p, out.r);
    return out;
}

/// Boundary precision/recall/F: intersections are computed between one side's
/// boundary pixels and the tolerance-dilated boundary of its matched partner.
inline Prf boundary_prf(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts,
                        const std::vector<int>& assignment, int tol) {
    if (tol < 0) throw std::invalid_argument("boundary_prf: negative tolerance");
    std::vector<BinaryMask> pred_b, gt_b;
    pred_b.reserve(preds.size());
    gt_b.reserve(gts.size());
    for (const BinaryMask& m : preds) pred_b.push_back(boundary(m));
    for (const BinaryMask& m : gts) gt_b.push_back(boundary(m));

    std::vector<int> gt_to_pred(gts.size(), -1);
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (assignment[i] >= 0) gt_to_pred[assignment[i]] = static_cast<int>(i);

    long long p_inter = 0, p_total = 0, r_inter = 0, r_total = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        p_total += pred_b[i].area();
        if (assignment[i] >= 0)
            p_inter += intersection_area(pred_b[i], dilate(gt_b[assignment[i]], tol));
    }
    for (std::size_t j = 0; j < gts.size(); ++j) {
        r_total += gt_b[j].area();
        if (gt_to_pred[j] >= 0)
            r_inter += intersection_area(gt_b[j], dilate(pred_b[gt_to_pred[j]], tol));
    }
    Prf out;
    out.p = detail::safe_ratio(static_cast<double>(p_inter), static_cast<double>(p_total),
                               r_total == 0);
    out.r = detail::safe_ratio(static_cast<double>(r_inter), static_cast<double>(r_total),
                               p_total == 0);
    out.f = (p_total == 0 && r_total == 0) ? 1.0 : detail::f_from_pr(out.p, out.r);
    return out;
}

/// Percentage of ground-truth objects whose matched prediction reaches a
/// pairwise overlap F-measure of at least 0.75 (inclusive).
inline double f75(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts,
                  const std::vector<int>& assignment) {
    if (gts.empty()) return preds.empty() ? 100.0 : 0.0;
    int hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (assignment[i] < 0) continue;
        if (pairwise_f_measure(preds[i], gts[assignment[i]]) >= 0.75) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gts.size());
}

/// Raw per-image tallies, the ingredients of the ratio metrics. Summing
/// these across a dataset and applying the formulas once gives the
/// micro-averaged metrics.
struct EvalCounts {
    long long overlap_inter = 0;
    long long pred_area = 0;
    long long gt_area = 0;
    long long boundary_inter_p = 0;
    long long boundary_total_p = 0;
    long long boundary_inter_r = 0;
    long long boundary_total_r = 0;
    long long f75_hits = 0;
    long long n_pred = 0;
    long long n_gt = 0;
};

/// Evaluates a predicted label image against ground truth: Hungarian matching
/// on pairwise F, then overlap P/R/F, boundary P/R/F at the given pixel
/// tolerance, and the F>=75% percentage. Background (id 0) is excluded.
inline MetricsReport evaluate(const LabelImage& pred, const LabelImage& gt, int tol,
                              EvalCounts* counts = nullptr) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("evaluate: dimension mismatch");
    std::vector<BinaryMask> preds, gts;
    for (auto& [id, m] : pred.extract_masks()) preds.push_back(std::move(m));
    for (auto& [id, m] : gt.extract_masks()) gts.push_back(std::move(m));

    std::vector<int> assignment = match_hungarian(preds, gts);
    Prf ov = overlap_prf(preds, gts, assignment);
    Prf bd = boundary_prf(preds, gts, assignment, tol);

    MetricsReport r;
    r.overlap_p = ov.p;
    r.overlap_r = ov.r;
    r.overlap_f = ov.f;
    r.boundary_p = bd.p;
    r.boundary_r = bd.r;
    r.boundary_f = bd.f;
    r.f75 = f75(preds, gts, assignment);
    r.n_pred = static_cast<int>(preds.size());
    r.n_gt = static_cast<int>(gts.size());

    if (counts) {
        *counts = EvalCounts{};
        std::vector<int> gt_to_pred(gts.size(), -1);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            counts->pred_area += preds[i].area();
            if (assignment[i] >= 0) {
                counts->overlap_inter += intersection_area(preds[i], gts[assignment[i]]);
                gt_to_pred[assignment[i]] = static_cast<int>(i);
                counts->f75_hits += (pairwise_f_measure(preds[i], gts[assignment[i]]) >= 0.75);
            }
        }
        for (const BinaryMask& g : gts) counts->gt_area += g.area();
        for (std::size_t i = 0; i < preds.size(); ++i) {
            BinaryMask b = boundary(preds[i]);
            counts->boundary_total_p += b.area();
            if (assignment[i] >= 0)
                counts->boundary_inter_p +=
                    intersection_area(b, dilate(boundary(gts[assignment[i]]), tol));
        }
        for (std::size_t j = 0; j < gts.size(); ++j) {
            BinaryMask b = boundary(gts[j]);
            counts->boundary_total_r += b.area();
            if (gt_to_pred[j] >= 0)
                counts->boundary_inter_r +=
                    intersection_area(b, dilate(boundary(preds[gt_to_pred[j]]), tol));
        }
        counts->n_pred = static_cast<long long>(preds.size());
        counts->n_gt = static_cast<long long>(gts.size());
    }
    return r;
}

/// Micro average: tallies summed over all images, formulas applied once.
inline MetricsReport micro_metrics(const std::vector<EvalCounts>& counts) {
    EvalCounts total;
    for (const EvalCounts& c : counts) {
        total.overlap_inter += c.overlap_inter;
        total.pred_area += c.pred_area;
        total.gt_area += c.gt_area;
        total.boundary_inter_p += c.boundary_inter_p;
        total.boundary_total_p += c.boundary_total_p;
        total.boundary_inter_r += c.boundary_inter_r;
        total.boundary_total_r += c.boundary_total_r;
        total.f75_hits += c.f75_hits;
        total.n_pred += c.n_pred;
        total.n_gt += c.n_gt;
    }
    MetricsReport r;
    r.overlap_p = detail::safe_ratio(static_cast<double>(total.overlap_inter),
                                     static_cast<double>(total.pred_area), total.gt_area == 0);
    r.overlap_r = detail::safe_ratio(static_cast<double>(total.overlap_inter),
                                     static_cast<double>(total.gt_area), total.pred_area == 0);
    r.overlap_f = (total.pred_area == 0 && total.gt_area == 0)
                      ? 1.0
                      : detail::f_from_pr(r.overlap_p, r.overlap_r);
    r.boundary_p =
        detail::safe_ratio(static_cast<double>(total.boundary_inter_p),
                           static_cast<double>(total.boundary_total_p), total.boundary_total_r == 0);
    r.boundary_r =
        detail::safe_ratio(static_cast<double>(total.boundary_inter_r),
                           static_cast<double>(total.boundary_total_r), total.boundary_total_p == 0);
    r.boundary_f = (total.boundary_total_p == 0 && total.boundary_total_r == 0)
                       ? 1.0
                       : detail::f_from_pr(r.boundary_p, r.boundary_r);
    r.f75 = total.n_gt > 0 ? 100.0 * static_cast<double>(total.f75_hits) /
                                 static_cast<double>(total.n_gt)
                           : (total.n_pred == 0 ? 100.0 : 0.0);
    r.n_pred = static_cast<int>(total.n_pred);
    r.n_gt = static_cast<int>(total.n_gt);
    return r;
}

/// Per-image arithmetic mean with weight 1 per image (macro average).
struct MeanReport {
    double overlap_p = 0.0, overlap_r = 0.0, overlap_f = 0.0;
    double boundary_p = 0.0, boundary_r = 0.0, boundary_f = 0.0;
    double f75 = 0.0;
    double n_pred = 0.0, n_gt = 0.0;
    int n_images = 0;
};

inline MeanReport mean_metrics(const std::vector<MetricsReport>& reports) {
    MeanReport m;
    m.n_images = static_cast<int>(reports.size());
    if (reports.empty()) return m;
    for (const MetricsReport& r : reports) {
        m.overlap_p += r.overlap_p;
        m.overlap_r += r.overlap_r;
        m.overlap_f += r.overlap_f;
        m.boundary_p += r.boundary_p;
        m.boundary_r += r.boundary_r;
        m.boundary_f += r.boundary_f;
        m.f75 += r.f75;
        m.n_pred += r.n_pred;
        m.n_gt += r.n_gt;
    }
    double n = static_cast<double>(reports.size());
    m.overlap_p /= n;
    m.overlap_r /= n;
    m.overlap_f /= n;
    m.boundary_p /= n;
    m.boundary_r /= n;
    m.boundary_f /= n;
    m.f75 /= n;
    m.n_pred /= n;
    m.n_gt /= n;
    return m;
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{{"overlap_p", r.overlap_p},   {"overlap_r", r.overlap_r},
                       {"overlap_f", r.overlap_f},   {"boundary_p", r.boundary_p},
                       {"boundary_r", r.boundary_r}, {"boundary_f", r.boundary_f},
                       {"f75", r.f75},               {"n_pred", r.n_pred},
                       {"n_gt", r.n_gt}};
}

inline void to_json(nlohmann::json& j, const MeanReport& r) {
    j = nlohmann::json{{"overlap_p", r.overlap_p},   {"overlap_r", r.overlap_r},
                       {"overlap_f", r.overlap_f},   {"boundary_p", r.boundary_p},
                       {"boundary_r", r.boundary_r}, {"boundary_f", r.boundary_f},
                       {"f75", r.f75},               {"n_pred", r.n_pred},
                       {"n_gt", r.n_gt},             {"n_images", r.n_images}};
}

}  // namespace push2seg
