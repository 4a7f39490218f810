#pragma once

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "push2seg/config.hpp"
#include "push2seg/io.hpp"
#include "push2seg/sim.hpp"

namespace push2seg {

// Episode directory layout:
//   frame_%03d_label.pgm   ground-truth labels (16-bit PGM)
//   frame_%03d_app.pgm     appearance (8-bit PGM)
//   flow_%03d_fwd.flo      flow frame i -> i+1
//   flow_%03d_bwd.flo      flow frame i+1 -> i
//   actions.json           {"actions": [{target_mask_index, direction, distance}]}
//   config.json            the PipelineConfig snapshot

inline std::string indexed_name(const char* pattern, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, index);
    return buf;
}

inline nlohmann::json actions_to_json(const std::vector<PushAction>& actions) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PushAction& a : actions)
        arr.push_back({{"target_mask_index", a.target_mask_index},
                       {"direction", {a.direction.x, a.direction.y}},
                       {"distance", a.distance}});
    return {{"actions", arr}};
}

inline std::vector<PushAction> actions_from_json(const nlohmann::json& j) {
    std::vector<PushAction> out;
    for (const auto& e : j.at("actions")) {
        PushAction a;
        a.target_mask_index = e.at("target_mask_index").get<int>();
        a.direction.x = e.at("direction").at(0).get<double>();
        a.direction.y = e.at("direction").at(1).get<double>();
        a.distance = e.at("distance").get<double>();
        out.push_back(a);
    }
    return out;
}

inline void write_episode_dir(const std::filesystem::path& dir, const Episode& ep) {
    std::filesystem::create_directories(dir);
    for (int f = 0; f < ep.frame_count(); ++f) {
        write_label_pgm(dir / indexed_name("frame_%03d_label.pgm", f), ep.labels[f]);
        write_gray_pgm(dir / indexed_name("frame_%03d_app.pgm", f), ep.appearances[f]);
    }
    for (std::size_t i = 0; i < ep.fwd.size(); ++i) {
        write_flo(dir / indexed_name("flow_%03d_fwd.flo", static_cast<int>(i)), ep.fwd[i]);
        write_flo(dir / indexed_name("flow_%03d_bwd.flo", static_cast<int>(i)), ep.bwd[i]);
    }
    atomic_write_file(dir / "actions.json", actions_to_json(ep.actions).dump(2) + "\n");
    atomic_write_file(dir / "config.json", nlohmann::json(ep.config).dump(2) + "\n");
}

/// Loads an episode directory back into memory. Scenes are not serialized;
/// labeling works from rasters and flows alone. Throws naming the first
/// missing or corrupt file.
inline Episode read_episode_dir(const std::filesystem::path& dir) {
    Episode ep;
    std::filesystem::path config_path = dir / "config.json";
    if (!std::filesystem::exists(config_path))
        throw std::runtime_error("missing file: " + config_path.string());
    ep.config = nlohmann::json::parse(read_file(config_path)).get<PipelineConfig>();

    for (int f = 0;; ++f) {
        std::filesystem::path label_path = dir / indexed_name("frame_%03d_label.pgm", f);
        if (!std::filesystem::exists(label_path)) break;
        ep.labels.push_back(read_label_pgm(label_path));
        std::filesystem::path app_path = dir / indexed_name("frame_%03d_app.pgm", f);
        if (!std::filesystem::exists(app_path))
            throw std::runtime_error("missing file: " + app_path.string());
        ep.appearances.push_back(read_gray_pgm(app_path));
    }
    if (ep.labels.empty()) throw std::runtime_error("no frames found in " + dir.string());

    for (int i = 0; i + 1 < ep.frame_count(); ++i) {
        std::filesystem::path fwd_path = dir / indexed_name("flow_%03d_fwd.flo", i);
        std::filesystem::path bwd_path = dir / indexed_name("flow_%03d_bwd.flo", i);
        if (!std::filesystem::exists(fwd_path))
            throw std::runtime_error("missing file: " + fwd_path.string());
        if (!std::filesystem::exists(bwd_path))
            throw std::runtime_error("missing file: " + bwd_path.string());
        ep.fwd.push_back(read_flo(fwd_path));
        ep.bwd.push_back(read_flo(bwd_path));
    }

    std::filesystem::path actions_path = dir / "actions.json";
    if (!std::filesystem::exists(actions_path))
        throw std::runtime_error("missing file: " + actions_path.string());
    ep.actions = actions_from_json(nlohmann::json::parse(read_file(actions_path)));
    return ep;
}

}  // namespace push2seg
