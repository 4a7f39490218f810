// push2seg command-line tool: episode generation, labeling, evaluation, and
// the grasping benchmark.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 pipeline error.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "push2seg/push2seg.hpp"

namespace fs = std::filesystem;
using namespace push2seg;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitPipelineError = 4;

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("PUSH2SEG_LOG");
        std::string v = env ? env : "warn";
        if (v == "error") return LogLevel::Error;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[push2seg] " << msg << "\n";
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

PipelineConfig load_config(const std::string& path) {
    PipelineConfig cfg;
    if (!path.empty()) {
        std::string bytes;
        try {
            bytes = read_file(path);
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
        try {
            cfg = nlohmann::json::parse(bytes).get<PipelineConfig>();
        } catch (const std::exception& e) {
            throw ConfigError("config " + path + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

/// Replaces an episode's oracle flows with block-matching estimates from the
/// appearance channel.
void apply_blockmatch_flows(Episode& ep, const PipelineConfig& cfg) {
    for (int t = 0; t + 1 < ep.frame_count(); ++t) {
        log_info("block matching frames " + std::to_string(t) + " -> " + std::to_string(t + 1));
        ep.fwd[t] = block_match_flow(ep.appearances[t], ep.appearances[t + 1], cfg.bm_patch,
                                     cfg.bm_search);
        ep.bwd[t] = block_match_flow(ep.appearances[t + 1], ep.appearances[t], cfg.bm_patch,
                                     cfg.bm_search);
    }
}

int cmd_generate(const std::string& config_path, const std::string& out_dir, int episodes,
                 std::uint64_t seed, bool seed_set, int jobs) {
    PipelineConfig cfg = load_config(config_path);
    std::uint64_t base_seed = seed_set ? seed : cfg.seed;
    try {
        fs::create_directories(out_dir);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= episodes || failed.load()) return;
            try {
                PipelineConfig ecfg = cfg;
                ecfg.seed = base_seed + static_cast<std::uint64_t>(i);
                Episode ep = run_episode(ecfg, ecfg.seed);
                write_episode_dir(fs::path(out_dir) / indexed_name("episode_%03d", i), ep);
                log_info("episode " + std::to_string(i) + " done (seed " +
                         std::to_string(ecfg.seed) + ")");
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    int n_threads = std::max(1, std::min(jobs, episodes));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failed.load()) throw std::runtime_error(first_error);
    return 0;
}

int cmd_label(const std::string& episode_dir, const std::string& out_dir,
              const std::string& flow_mode) {
    Episode ep;
    try {
        ep = read_episode_dir(episode_dir);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    PipelineConfig cfg = ep.config;
    if (!flow_mode.empty()) cfg.flow_mode = flow_mode;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    if (cfg.flow_mode == "blockmatch") apply_blockmatch_flows(ep, cfg);
    LabelResult res = label_episode(ep, cfg);

    try {
        fs::create_directories(out_dir);
        Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        for (int f = 0; f < ep.frame_count(); ++f) {
            auto init = undersegment(ep.labels[f], cfg.d_merge, rng, cfg.p_noise);
            write_label_pgm(fs::path(out_dir) / indexed_name("init_%03d_label.pgm", f),
                            segmentation_to_label(init, ep.labels[f].width, ep.labels[f].height));
            write_label_pgm(fs::path(out_dir) / indexed_name("final_%03d_label.pgm", f),
                            res.labels[f]);
        }
        atomic_write_file(fs::path(out_dir) / "label_report.json",
                          label_report_to_json(res.report, res.tracklets).dump(2) + "\n");
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    log_info("labeled " + std::to_string(ep.frame_count()) + " frames");
    return 0;
}

std::vector<fs::path> collect_label_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const char* pattern : {"final_%03d_label.pgm", "frame_%03d_label.pgm"}) {
        files.clear();
        for (int f = 0;; ++f) {
            fs::path p = dir / indexed_name(pattern, f);
            if (!fs::exists(p)) break;
            files.push_back(p);
        }
        if (!files.empty()) return files;
    }
    throw IoError("no label images found in " + dir.string());
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, int tol,
             const std::string& report_path) {
    std::vector<fs::path> pred_files = collect_label_files(pred_dir);
    std::vector<fs::path> gt_files = collect_label_files(gt_dir);
    if (pred_files.size() != gt_files.size())
        throw std::runtime_error("frame count mismatch: " + std::to_string(pred_files.size()) +
                                 " predictions vs " + std::to_string(gt_files.size()) +
                                 " ground-truth frames");

    std::vector<MetricsReport> reports;
    std::vector<EvalCounts> counts;
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t f = 0; f < pred_files.size(); ++f) {
        LabelImage pred, gt;
        try {
            pred = read_label_pgm(pred_files[f]);
            gt = read_label_pgm(gt_files[f]);
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
        int use_tol = tol;
        if (use_tol < 0) {
            PipelineConfig c;
            c.width = gt.width;
            c.height = gt.height;
            use_tol = c.effective_boundary_tol();
        }
        EvalCounts ec;
        MetricsReport r = evaluate(pred, gt, use_tol, &ec);
        reports.push_back(r);
        counts.push_back(ec);
        nlohmann::json jf = r;
        jf["frame"] = static_cast<int>(f);
        frames.push_back(jf);
    }
    MeanReport mean = mean_metrics(reports);
    nlohmann::json out{{"frames", frames}, {"mean", mean}, {"micro", micro_metrics(counts)}};
    if (!report_path.empty()) {
        try {
            if (fs::path(report_path).has_parent_path())
                fs::create_directories(fs::path(report_path).parent_path());
            atomic_write_file(report_path, out.dump(2) + "\n");
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
    }
    std::cout << nlohmann::json(mean).dump(2) << "\n";
    return 0;
}

int cmd_grasp_bench(const std::string& config_path, std::uint64_t seed, bool seed_set,
                    const std::string& modes_arg, const std::string& report_path) {
    PipelineConfig cfg = load_config(config_path);
    std::uint64_t base_seed = seed_set ? seed : cfg.seed;
    std::vector<SegMode> modes;
    if (modes_arg == "both")
        modes = {SegMode::Baseline, SegMode::Refined};
    else if (modes_arg == "baseline")
        modes = {SegMode::Baseline};
    else if (modes_arg == "refined")
        modes = {SegMode::Refined};
    else
        throw ConfigError("config field 'modes': must be both, baseline, or refined");

    GraspBenchReport report = run_grasp_bench(cfg, default_bench_specs(base_seed), modes);
    nlohmann::json j = grasp_bench_to_json(report);
    if (!report_path.empty()) {
        try {
            if (fs::path(report_path).has_parent_path())
                fs::create_directories(fs::path(report_path).parent_path());
            atomic_write_file(report_path, j.dump(2) + "\n");
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
    }
    std::cout << j["totals"].dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"push2seg: self-supervised object mask refinement from simulated pushing"};
    app.require_subcommand(1);

    std::string config_path, out_path, episode_dir, pred_dir, gt_dir, flow_mode, modes = "both";
    int episodes = 1, jobs = 1, tol = -1;
    std::uint64_t seed = 0;

    CLI::App* generate = app.add_subcommand("generate", "generate pushing episodes");
    generate->add_option("--config", config_path, "pipeline config JSON");
    generate->add_option("--out", out_path, "output directory")->required();
    generate->add_option("--episodes", episodes, "number of episodes")
        ->check(CLI::PositiveNumber);
    auto* gen_seed = generate->add_option("--seed", seed, "base seed (episode i uses seed+i)");
    generate->add_option("--jobs", jobs, "parallel episode workers")->check(CLI::PositiveNumber);

    CLI::App* label = app.add_subcommand("label", "run the labeling pipeline on an episode");
    label->add_option("episode_dir", episode_dir, "episode directory")->required();
    label->add_option("--out", out_path, "output directory")->required();
    label->add_option("--flow", flow_mode, "flow provider")
        ->check(CLI::IsMember({"oracle", "blockmatch"}));

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate predicted labels against ground truth");
    eval_cmd->add_option("pred_dir", pred_dir, "directory with predicted labels")->required();
    eval_cmd->add_option("gt_dir", gt_dir, "directory with ground-truth labels")->required();
    eval_cmd->add_option("--tol", tol, "boundary tolerance in pixels (-1 = auto)");
    eval_cmd->add_option("--out", out_path, "report JSON path");

    CLI::App* bench = app.add_subcommand("grasp-bench", "run the table-clearing benchmark");
    bench->add_option("--config", config_path, "pipeline config JSON");
    auto* bench_seed = bench->add_option("--seed", seed, "base seed for the scene set");
    bench->add_option("--modes", modes, "segmentation modes to run")
        ->check(CLI::IsMember({"both", "baseline", "refined"}));
    bench->add_option("--out", out_path, "report JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed())
            return cmd_generate(config_path, out_path, episodes, seed, !gen_seed->empty(), jobs);
        if (label->parsed()) return cmd_label(episode_dir, out_path, flow_mode);
        if (eval_cmd->parsed()) return cmd_eval(pred_dir, gt_dir, tol, out_path);
        if (bench->parsed())
            return cmd_grasp_bench(config_path, seed, !bench_seed->empty(), modes, out_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return kExitPipelineError;
    }
    return 0;
}
