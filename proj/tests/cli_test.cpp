#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "push2seg/push2seg.hpp"

using namespace push2seg;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(PUSH2SEG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("push2seg_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write_config(const PipelineConfig& cfg, const std::string& name) {
        fs::path p = dir_ / name;
        std::ofstream out(p);
        out << nlohmann::json(cfg).dump(2);
        return p.string();
    }

    fs::path dir_;
};

TEST_F(CliTest, ConfigJsonRoundTripsLosslessly) {
    PipelineConfig cfg;
    cfg.n_pushes = 7;
    cfg.push_distance = 19.5;
    cfg.tau_assoc = 0.55;
    cfg.flow_mode = "blockmatch";
    cfg.seed = 987654321;
    nlohmann::json j = cfg;
    PipelineConfig back = j.get<PipelineConfig>();
    EXPECT_EQ(nlohmann::json(back), j);
    EXPECT_EQ(back.push_distance, cfg.push_distance);
    EXPECT_EQ(back.seed, cfg.seed);
}

TEST_F(CliTest, GenerateDefaultLayout) {
    ASSERT_EQ(run_cli("generate --out " + (dir_ / "eps").string() + " --episodes 1 --seed 5"), 0);
    fs::path ep = dir_ / "eps" / "episode_000";
    int labels = 0, flows_fwd = 0, flows_bwd = 0;
    for (auto& e : fs::directory_iterator(ep)) {
        std::string name = e.path().filename().string();
        labels += name.find("_label.pgm") != std::string::npos;
        flows_fwd += name.find("_fwd.flo") != std::string::npos;
        flows_bwd += name.find("_bwd.flo") != std::string::npos;
    }
    EXPECT_EQ(labels, 21);  // 20 pushes -> 21 frames
    EXPECT_EQ(flows_fwd, 20);
    EXPECT_EQ(flows_bwd, 20);
    EXPECT_TRUE(fs::exists(ep / "actions.json"));
    EXPECT_TRUE(fs::exists(ep / "config.json"));
}

TEST_F(CliTest, GenerateZeroPushEpisode) {
    PipelineConfig cfg;
    cfg.n_pushes = 0;
    std::string config = write_config(cfg, "p0.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "p0").string() +
                      " --episodes 1"),
              0);
    fs::path ep = dir_ / "p0" / "episode_000";
    EXPECT_TRUE(fs::exists(ep / "frame_000_label.pgm"));
    EXPECT_FALSE(fs::exists(ep / "frame_001_label.pgm"));
    EXPECT_FALSE(fs::exists(ep / "flow_000_fwd.flo"));
}

TEST_F(CliTest, GenerateIsByteIdenticalAcrossReruns) {
    PipelineConfig cfg;
    cfg.n_pushes = 5;
    cfg.n_objects = 3;
    std::string config = write_config(cfg, "small.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "a").string() +
                      " --episodes 2 --seed 9 --jobs 2"),
              0);
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "b").string() +
                      " --episodes 2 --seed 9"),
              0);
    for (auto& e : fs::recursive_directory_iterator(dir_ / "a")) {
        if (!e.is_regular_file()) continue;
        fs::path rel = fs::relative(e.path(), dir_ / "a");
        EXPECT_EQ(read_file(e.path()), read_file(dir_ / "b" / rel)) << rel;
    }
}

TEST_F(CliTest, LabelWritesFinalsAndReport) {
    PipelineConfig cfg;
    cfg.n_pushes = 8;
    std::string config = write_config(cfg, "cfg.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "eps").string() +
                      " --episodes 1 --seed 2"),
              0);
    fs::path ep = dir_ / "eps" / "episode_000";
    ASSERT_EQ(run_cli("label " + ep.string() + " --out " + (dir_ / "labels").string()), 0);
    EXPECT_TRUE(fs::exists(dir_ / "labels" / "final_000_label.pgm"));
    EXPECT_TRUE(fs::exists(dir_ / "labels" / "init_000_label.pgm"));
    fs::path report = dir_ / "labels" / "label_report.json";
    ASSERT_TRUE(fs::exists(report));
    nlohmann::json j = nlohmann::json::parse(read_file(report));
    EXPECT_EQ(j["frames"].size(), 9u);
    // The initial frame merges objects; the final labels recover all five.
    EXPECT_LT(j["frames"][0]["init_mask_count"].get<int>(), 5);
}

TEST_F(CliTest, LabelPerfectSegmentationReproducesGt) {
    PipelineConfig cfg;
    cfg.n_pushes = 4;
    cfg.d_merge = 0;
    std::string config = write_config(cfg, "perfect.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "eps").string() +
                      " --episodes 1 --seed 3"),
              0);
    fs::path ep = dir_ / "eps" / "episode_000";
    ASSERT_EQ(run_cli("label " + ep.string() + " --out " + (dir_ / "labels").string()), 0);
    for (int f = 0; f < 5; ++f) {
        LabelImage pred =
            read_label_pgm(dir_ / "labels" / indexed_name("final_%03d_label.pgm", f));
        LabelImage gt = read_label_pgm(ep / indexed_name("frame_%03d_label.pgm", f));
        MetricsReport r = evaluate(pred, gt, 2);
        EXPECT_DOUBLE_EQ(r.overlap_f, 1.0) << "frame " << f;
    }
}

TEST_F(CliTest, LabelTruncatedEpisodeFailsWithIoError) {
    PipelineConfig cfg;
    cfg.n_pushes = 3;
    std::string config = write_config(cfg, "cfg.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "eps").string() +
                      " --episodes 1"),
              0);
    fs::path ep = dir_ / "eps" / "episode_000";
    fs::remove(ep / "flow_001_fwd.flo");
    EXPECT_EQ(run_cli("label " + ep.string() + " --out " + (dir_ / "labels").string()), 3);
}

TEST_F(CliTest, EvalSelfComparisonIsPerfect) {
    PipelineConfig cfg;
    cfg.n_pushes = 3;
    std::string config = write_config(cfg, "cfg.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "eps").string() +
                      " --episodes 1"),
              0);
    fs::path ep = dir_ / "eps" / "episode_000";
    fs::path report = dir_ / "report.json";
    ASSERT_EQ(run_cli("eval " + ep.string() + " " + ep.string() + " --out " + report.string()),
              0);
    nlohmann::json j = nlohmann::json::parse(read_file(report));
    EXPECT_DOUBLE_EQ(j["mean"]["overlap_f"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(j["mean"]["boundary_f"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(j["mean"]["f75"].get<double>(), 100.0);
    EXPECT_EQ(j["frames"].size(), 4u);
}

TEST_F(CliTest, EvalFrameCountMismatchFails) {
    PipelineConfig cfg;
    cfg.n_pushes = 2;
    std::string config = write_config(cfg, "a.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "a").string()), 0);
    cfg.n_pushes = 3;
    config = write_config(cfg, "b.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "b").string()), 0);
    EXPECT_EQ(run_cli("eval " + (dir_ / "a" / "episode_000").string() + " " +
                      (dir_ / "b" / "episode_000").string()),
              4);
}

TEST_F(CliTest, EvalEmptyDirFails) {
    fs::create_directories(dir_ / "empty");
    EXPECT_EQ(run_cli("eval " + (dir_ / "empty").string() + " " + (dir_ / "empty").string()), 3);
}

TEST_F(CliTest, InvalidConfigFailsWithConfigError) {
    fs::path p = dir_ / "bad.json";
    std::ofstream(p) << "{\"n_objects\": 0}";
    EXPECT_EQ(run_cli("generate --config " + p.string() + " --out " + (dir_ / "x").string()), 2);
    std::ofstream(p) << "{not json";
    EXPECT_EQ(run_cli("generate --config " + p.string() + " --out " + (dir_ / "x").string()), 2);
}

TEST_F(CliTest, MissingConfigFileFailsWithIoError) {
    EXPECT_EQ(run_cli("generate --config " + (dir_ / "nope.json").string() + " --out " +
                      (dir_ / "x").string()),
              3);
}

TEST_F(CliTest, LabelRerunsAreIdempotent) {
    PipelineConfig cfg;
    cfg.n_pushes = 4;
    std::string config = write_config(cfg, "cfg.json");
    ASSERT_EQ(run_cli("generate --config " + config + " --out " + (dir_ / "eps").string()), 0);
    fs::path ep = dir_ / "eps" / "episode_000";
    ASSERT_EQ(run_cli("label " + ep.string() + " --out " + (dir_ / "l1").string()), 0);
    ASSERT_EQ(run_cli("label " + ep.string() + " --out " + (dir_ / "l1").string()), 0);
    ASSERT_EQ(run_cli("label " + ep.string() + " --out " + (dir_ / "l2").string()), 0);
    for (auto& e : fs::directory_iterator(dir_ / "l1")) {
        fs::path rel = fs::relative(e.path(), dir_ / "l1");
        EXPECT_EQ(read_file(e.path()), read_file(dir_ / "l2" / rel)) << rel;
    }
}

TEST_F(CliTest, GraspBenchBaselineModeWritesReport) {
    PipelineConfig cfg;
    cfg.n_objects = 3;
    cfg.n_pushes = 4;
    std::string config = write_config(cfg, "bench.json");
    fs::path report = dir_ / "bench.json";
    ASSERT_EQ(run_cli("grasp-bench --config " + config + " --seed 40 --modes baseline --out " +
                      report.string()),
              0);
    nlohmann::json j = nlohmann::json::parse(read_file(report));
    EXPECT_EQ(j["scenes"].size(), 8u);  // 4 clutter levels x 2 scenes
    EXPECT_TRUE(j["totals"]["baseline"].contains("successes"));
}

}  // namespace
