#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace push2seg {

/// All knobs of the pipeline in one serializable struct. The JSON mapping is
/// lossless: save followed by load reproduces every field exactly.
struct PipelineConfig {
    // workspace / scene
    int width = 256;
    int height = 256;
    int n_objects = 5;
    int n_pushes = 20;
    double push_distance = 25.0;
    // Radians, uniform in +/- this per pushed object. 0.03 keeps the rigid
    // warp of every moved object within rounding slack of its next-frame
    // raster; larger values re-rasterize small shapes too aggressively.
    double rotation_noise = 0.03;
    double g_init = 2.0;          // max surface gap when clustering objects
    double obj_min_extent = 8.0;  // full extent (diameter / side length), pixels
    double obj_max_extent = 40.0;

    // imperfect segmenter
    int d_merge = 3;
    double p_noise = 0.0;  // probability of 1-px boundary erosion per mask

    // tracking / propagation
    double tau_assoc = 0.6;
    double tau_refine = 0.8;
    double delta_move = 1.0;

    // evaluation; tol < 0 means auto = max(1, round(0.0075 * image diagonal))
    int boundary_tol = -1;

    // flow provider
    std::string flow_mode = "oracle";  // "oracle" | "blockmatch"
    int bm_patch = 7;
    int bm_search = 31;

    // gripper geometry
    double grasp_w_max = 60.0;
    double grasp_finger_length = 20.0;
    double grasp_clearance = 2.0;

    std::uint64_t seed = 1;

    int effective_boundary_tol() const {
        if (boundary_tol >= 0) return boundary_tol;
        double diag = std::sqrt(static_cast<double>(width) * width +
                                static_cast<double>(height) * height);
        return std::max(1, static_cast<int>(std::llround(0.0075 * diag)));
    }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const {
        auto fail = [](const std::string& field, const std::string& why) {
            throw std::invalid_argument("config field '" + field + "': " + why);
        };
        if (width <= 0) fail("width", "must be positive");
        if (height <= 0) fail("height", "must be positive");
        if (n_objects < 1) fail("n_objects", "must be at least 1");
        if (n_pushes < 0) fail("n_pushes", "must be nonnegative");
        if (push_distance <= 0.0) fail("push_distance", "must be positive");
        if (rotation_noise < 0.0) fail("rotation_noise", "must be nonnegative");
        if (g_init < 0.0) fail("g_init", "must be nonnegative");
        if (obj_min_extent <= 0.0) fail("obj_min_extent", "must be positive");
        if (obj_max_extent < obj_min_extent) fail("obj_max_extent", "must be >= obj_min_extent");
        if (d_merge < 0) fail("d_merge", "must be nonnegative");
        if (p_noise < 0.0 || p_noise > 1.0) fail("p_noise", "must be in [0,1]");
        if (tau_assoc < 0.0 || tau_assoc > 1.0) fail("tau_assoc", "must be in [0,1]");
        if (tau_refine < 0.0 || tau_refine > 1.0) fail("tau_refine", "must be in [0,1]");
        if (delta_move < 0.0) fail("delta_move", "must be nonnegative");
        if (flow_mode != "oracle" && flow_mode != "blockmatch")
            fail("flow_mode", "must be 'oracle' or 'blockmatch'");
        if (bm_patch < 1 || bm_patch % 2 == 0) fail("bm_patch", "must be odd and positive");
        if (bm_search < 1) fail("bm_search", "must be at least 1");
        if (grasp_w_max <= 0.0) fail("grasp_w_max", "must be positive");
        if (grasp_finger_length <= 0.0) fail("grasp_finger_length", "must be positive");
        if (grasp_clearance < 0.0) fail("grasp_clearance", "must be nonnegative");
    }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = nlohmann::json{{"width", c.width},
                       {"height", c.height},
                       {"n_objects", c.n_objects},
                       {"n_pushes", c.n_pushes},
                       {"push_distance", c.push_distance},
                       {"rotation_noise", c.rotation_noise},
                       {"g_init", c.g_init},
                       {"obj_min_extent", c.obj_min_extent},
                       {"obj_max_extent", c.obj_max_extent},
                       {"d_merge", c.d_merge},
                       {"p_noise", c.p_noise},
                       {"tau_assoc", c.tau_assoc},
                       {"tau_refine", c.tau_refine},
                       {"delta_move", c.delta_move},
                       {"boundary_tol", c.boundary_tol},
                       {"flow_mode", c.flow_mode},
                       {"bm_patch", c.bm_patch},
                       {"bm_search", c.bm_search},
                       {"grasp_w_max", c.grasp_w_max},
                       {"grasp_finger_length", c.grasp_finger_length},
                       {"grasp_clearance", c.grasp_clearance},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    PipelineConfig defaults;
    auto get = [&](const char* key, auto& field, const auto& fallback) {
        if (j.contains(key))
            j.at(key).get_to(field);
        else
            field = fallback;
    };
    get("width", c.width, defaults.width);
    get("height", c.height, defaults.height);
    get("n_objects", c.n_objects, defaults.n_objects);
    get("n_pushes", c.n_pushes, defaults.n_pushes);
    get("push_distance", c.push_distance, defaults.push_distance);
    get("rotation_noise", c.rotation_noise, defaults.rotation_noise);
    get("g_init", c.g_init, defaults.g_init);
    get("obj_min_extent", c.obj_min_extent, defaults.obj_min_extent);
    get("obj_max_extent", c.obj_max_extent, defaults.obj_max_extent);
    get("d_merge", c.d_merge, defaults.d_merge);
    get("p_noise", c.p_noise, defaults.p_noise);
    get("tau_assoc", c.tau_assoc, defaults.tau_assoc);
    get("tau_refine", c.tau_refine, defaults.tau_refine);
    get("delta_move", c.delta_move, defaults.delta_move);
    get("boundary_tol", c.boundary_tol, defaults.boundary_tol);
    get("flow_mode", c.flow_mode, defaults.flow_mode);
    get("bm_patch", c.bm_patch, defaults.bm_patch);
    get("bm_search", c.bm_search, defaults.bm_search);
    get("grasp_w_max", c.grasp_w_max, defaults.grasp_w_max);
    get("grasp_finger_length", c.grasp_finger_length, defaults.grasp_finger_length);
    get("grasp_clearance", c.grasp_clearance, defaults.grasp_clearance);
    get("seed", c.seed, defaults.seed);
}

}  // namespace push2seg
