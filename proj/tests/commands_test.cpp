/*
 * Copyright 2026 The hbgmm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hbgmm/commands.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <bit>
#include <cstdlib>
#include <sstream>

#include "hbgmm/io.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace hbgmm {
namespace {

namespace fs = std::filesystem;

constexpr const char* kClassMapIni = R"(
[class_map]
10 = 0
40 = 1
outlier = 1
ignore = 0
)";

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

/// Two ID surfaces and an outlier blob, each with a distinct intensity.
void write_scan(const fs::path& scan_dir, const fs::path& label_dir, const std::string& stem,
                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 0.6f);
  std::uniform_real_distribution<float> yaw(-3.1f, 3.1f);
  std::vector<std::byte> scan, labels;
  auto emit = [&](float x, float y, float z, float intensity, std::uint32_t raw) {
    for (float v : {x, y, z, intensity}) put_u32(scan, std::bit_cast<std::uint32_t>(v));
    put_u32(labels, raw | (std::uint32_t(seed & 0xFF) << 16));
  };
  for (int i = 0; i < 1500; ++i) {
    const float a = yaw(rng), r = 8.0f + n(rng);
    emit(r * std::cos(a), r * std::sin(a), -1.5f + 0.1f * n(rng), 0.2f + 0.02f * n(rng), 40);
  }
  for (int i = 0; i < 1500; ++i) {
    const float a = yaw(rng), r = 20.0f + n(rng);
    emit(r * std::cos(a), r * std::sin(a), 1.0f + n(rng), 0.8f + 0.02f * n(rng), 10);
  }
  for (int i = 0; i < 200; ++i) {
    emit(4.0f + n(rng), 4.0f + n(rng), 0.3f + 0.1f * n(rng), 0.5f + 0.02f * n(rng), 1);
  }
  for (int i = 0; i < 50; ++i) emit(-6.0f + n(rng), 2.0f + n(rng), -0.5f, 0.1f, 0);
  write_file(scan_dir / (stem + ".bin"), scan);
  write_file(label_dir / (stem + ".label"), labels);
}

struct Fixture {
  fs::path root, scans, labels, projected, model, config;
};

Fixture make_fixture(const std::string& name) {
  Fixture f;
  f.root = testing_util::temp_dir(name);
  f.scans = f.root / "scans";
  f.labels = f.root / "labels";
  f.projected = f.root / "projected";
  f.model = f.root / "model";
  for (int i = 0; i < 3; ++i) write_scan(f.scans, f.labels, "00000" + std::to_string(i), 100 + i);
  f.config = f.root / "run.ini";
  std::ostringstream ini;
  ini << "[paths]\n"
      << "scan_dir = " << f.scans.string() << "\n"
      << "label_dir = " << f.labels.string() << "\n"
      << "feature_dir = " << f.projected.string() << "\n"
      << "model_dir = " << f.model.string() << "\n"
      << "score_dir = " << (f.root / "scores").string() << "\n"
      << "[projection]\nheight = 16\nwidth = 128\n"
      << "[ensemble]\nn_samples = 10\n"
      << kClassMapIni;
  write_text(f.config, ini.str());
  return f;
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("HBGMM_CLI");
  if (!cli) return -1;
  const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text(p)); }

RunConfig config_for(const Fixture& f, std::map<std::string, std::string> overrides = {}) {
  return load_config(f.config, overrides);
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config("");
  EXPECT_EQ(c.projection.height, 64);
  EXPECT_EQ(c.projection.width, 1024);
  EXPECT_EQ(c.components, 2);
  EXPECT_EQ(c.n_samples, 20);
  EXPECT_EQ(c.top_fraction, 0.05);
  EXPECT_EQ(c.class_map.num_classes(), 19);
  EXPECT_EQ(c.prior, (NIGParams<double>{0, 1, 2, 1}));
  const auto o = parse_config("[model]\nK = 3\n", {{"model.K", "4"}, {"synth.overlap_pairs", "1-2 3-4"}});
  EXPECT_EQ(o.components, 4);
  EXPECT_EQ(o.synth.overlap_pairs, (std::vector<std::pair<int, int>>{{1, 2}, {3, 4}}));
}

TEST(Config, Rejections) {
  EXPECT_HBGMM_ERROR(parse_config("[model]\nK = 0\n"), Errc::kInvalidArgument);
  EXPECT_HBGMM_ERROR(parse_config("[prior]\nalpha0 = -1\n"), Errc::kInvalidArgument);
  EXPECT_HBGMM_ERROR(parse_config("[threshold]\ntop_fraction = 1.5\n"), Errc::kInvalidArgument);
  EXPECT_HBGMM_ERROR(parse_config("[class_map]\n10 = 0\n11 = 2\n"), Errc::kInvalidArgument);
  EXPECT_HBGMM_ERROR(parse_config("[class_map]\n10 = 0\n1 = 1\n"), Errc::kInvalidArgument);
  EXPECT_HBGMM_ERROR(parse_config("", {{"nosection", "1"}}), Errc::kInvalidArgument);
}

TEST(Config, CustomClassMap) {
  const auto c = parse_config(kClassMapIni);
  EXPECT_EQ(c.class_map.num_classes(), 2);
  EXPECT_EQ(c.class_map.train_id(40), 1);
  EXPECT_FALSE(c.class_map.train_id(0).has_value());
  EXPECT_TRUE(c.class_map.is_outlier(1));
}

TEST(Commands, ProjectFitScoreEval) {
  const auto f = make_fixture("pipeline");
  std::ostringstream log, out;
  const auto cfg = config_for(f, {{"paths.output_dir", f.projected.string()}});
  ASSERT_EQ(cmd_project(cfg, log), kExitOk) << log.str();
  const auto manifest = read_json(f.projected / "manifest.json");
  ASSERT_EQ(manifest["scans"].size(), 3u);
  EXPECT_EQ(manifest["failed"], 0);
  const auto image = decode_feature_map(read_file(f.projected / "000000.fmap"));
  EXPECT_EQ(image.dim(), 5);
  EXPECT_EQ(image.height, 16);
  EXPECT_EQ(image.width, 128);

  ASSERT_EQ(cmd_fit(config_for(f, {{"paths.output_dir", f.model.string()}}), log), kExitOk) << log.str();
  const auto fit = read_json(f.model / "fit_report.json");
  EXPECT_EQ(fit["C"], 2);
  EXPECT_EQ(fit["D"], 5);
  EXPECT_GT(fit["excluded_outlier_pixels"].get<int>(), 0);
  EXPECT_GT(fit["excluded_unmapped_pixels"].get<int>(), 0);

  const auto score_cfg = config_for(f, {{"paths.output_dir", f.root.string()}});
  ASSERT_EQ(cmd_score(score_cfg, log), kExitOk) << log.str();
  const auto score = read_json(f.root / "score_report.json");
  const auto valid = score["valid_pixels"].get<std::size_t>();
  const auto flagged = score["flagged"].get<std::size_t>();
  EXPECT_LE(flagged, (valid + 19) / 20);
  for (auto ch : kScoreChannels) {
    EXPECT_TRUE(fs::exists(f.root / "scores" / ("000001." + std::string(ch) + ".fmap"))) << ch;
  }
  const auto pred = decode_feature_map(read_file(f.root / "scores" / "000001.pred.fmap"));
  EXPECT_EQ(pred.valid, decode_feature_map(read_file(f.projected / "000001.fmap")).valid);

  ASSERT_EQ(cmd_eval(score_cfg, out, log), kExitOk) << log.str();
  const auto eval = read_json(f.root / "eval_report.json");
  for (auto ch : kScoreChannels) {
    const auto& r = eval[std::string(ch)];
    for (const char* key : {"auroc", "auprc", "fpr95", "miou", "per_class_iou", "n_id", "n_ood"}) {
      EXPECT_TRUE(r.contains(key)) << ch << " " << key;
    }
    EXPECT_TRUE(fs::exists(f.root / ("eval_" + std::string(ch) + ".csv")));
  }
  EXPECT_GT(eval["epistemic"]["n_ood"].get<int>(), 0);
  // The two ID surfaces are well separated in range and intensity.
  EXPECT_GT(eval["epistemic"]["miou"].get<double>(), 0.9);
  EXPECT_EQ(nlohmann::json::parse(out.str()), eval);
}

TEST(Commands, ProjectRecordsPerFileFailure) {
  const auto f = make_fixture("partial");
  write_file(f.scans / "bad.bin", std::vector<std::byte>(17));
  std::ostringstream log;
  EXPECT_EQ(cmd_project(config_for(f, {{"paths.output_dir", f.projected.string()}}), log), kExitPartial);
  const auto manifest = read_json(f.projected / "manifest.json");
  EXPECT_EQ(manifest["failed"], 1);
  ASSERT_EQ(manifest["scans"].size(), 4u);
  for (const auto& e : manifest["scans"]) {
    const bool bad = e["scan"].get<std::string>().ends_with("bad.bin");
    EXPECT_EQ(e["status"], bad ? "error" : "ok");
  }
  EXPECT_TRUE(fs::exists(f.projected / "000002.fmap"));
}

TEST(Commands, FitNamesInsufficientClass) {
  const auto f = make_fixture("insufficient");
  std::ostringstream log;
  ASSERT_EQ(cmd_project(config_for(f, {{"paths.output_dir", f.projected.string()}}), log), kExitOk);
  const auto cfg = config_for(f, {{"paths.output_dir", f.model.string()}, {"class_map.99", "2"}});
  try {
    cmd_fit(cfg, log);
    FAIL() << "expected insufficient-data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInsufficientData);
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos);
  }
}

TEST(Commands, SynthReportHasDelta) {
  const auto root = testing_util::temp_dir("synth_lib");
  std::ostringstream log, out;
  const auto cfg = parse_config("[synth]\nsamples_per_class = 200\nood_count = 60\n",
                                {{"paths.output_dir", root.string()}});
  ASSERT_EQ(cmd_synth(cfg, out, log), kExitOk);
  const auto r = read_json(root / "synth_report.json");
  EXPECT_NEAR(r["delta"]["auroc"].get<double>(),
              r["epistemic"]["auroc"].get<double>() - r["predictive_entropy"]["auroc"].get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(root / "synth" / "train_5.fmap"));
  EXPECT_TRUE(fs::exists(root / "synth" / "generating_params.json"));
  EXPECT_EQ(decode_feature_map(read_file(root / "synth" / "eval.fmap")).pixels(), 6 * 100 + 60);
}

TEST(Cli, ExitCodes) {
  if (!std::getenv("HBGMM_CLI")) GTEST_SKIP() << "HBGMM_CLI not set";
  const auto f = make_fixture("cli_exit");
  EXPECT_EQ(run_cli("project --config " + f.config.string() + " --out " + f.projected.string()), 0);
  write_file(f.scans / "zz.bin", std::vector<std::byte>(3));
  EXPECT_EQ(run_cli("project --config " + f.config.string() + " --out " + f.projected.string()), 1);
  EXPECT_EQ(run_cli("fit --config " + (f.root / "missing.ini").string()), 2);
  EXPECT_EQ(run_cli("fit --config " + f.config.string() + " --out " + f.model.string() + " --model.K 100000"), 2);
  EXPECT_EQ(run_cli("synth --bogus"), 2);
  EXPECT_EQ(run_cli(""), 2);
}

TEST(Cli, ScoreIdenticalAcrossJobCounts) {
  if (!std::getenv("HBGMM_CLI")) GTEST_SKIP() << "HBGMM_CLI not set";
  const auto f = make_fixture("cli_jobs");
  const std::string base = " --config " + f.config.string();
  ASSERT_EQ(run_cli("project" + base + " --out " + f.projected.string()), 0);
  ASSERT_EQ(run_cli("fit" + base + " --out " + f.model.string() + " --jobs 3"), 0);
  for (int jobs : {1, 8}) {
    const auto out = f.root / ("jobs" + std::to_string(jobs));
    ASSERT_EQ(run_cli("score" + base + " --seed 7 --jobs " + std::to_string(jobs) + " --out " + out.string() +
                      " --paths.score_dir=" + (out / "scores").string()),
              0);
  }
  for (const auto& entry : fs::directory_iterator(f.root / "jobs1" / "scores")) {
    const auto other = f.root / "jobs8" / "scores" / entry.path().filename();
    EXPECT_EQ(read_file(entry.path()), read_file(other)) << entry.path().filename();
  }
  EXPECT_EQ(read_text(f.root / "jobs1" / "score_report.json"), read_text(f.root / "jobs8" / "score_report.json"));
}

}  // namespace
}  // namespace hbgmm
