/*
 * Copyright 2026 The AdaCoF-CPP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adacof/checkpoint.hpp"
#include "adacof/datagen.hpp"
#include "adacof/image_io.hpp"
#include "adacof/synthnet.hpp"
#include "adacof/warp_io.hpp"
#include "cli.hpp"

using namespace adacof;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("adacof_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small model checkpoint written with untrained-but-jittered weights.
  std::string tiny_checkpoint(bool occlusion) const {
    Checkpoint ck;
    ck.config.kernel_size = 3;
    ck.config.depth = 2;
    ck.config.widths = {4, 6};
    ck.config.head_width = 4;
    ck.config.use_occlusion = occlusion;
    ck.params = init_parameters<float>(ck.config);
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      auto& v = ck.params.mutable_value(i);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += 0.05F * static_cast<float>((k * 7919 + i) % 13) - 0.3F;
    }
    const auto p = path(occlusion ? "occ.ackp" : "avg.ackp");
    write_checkpoint(p, ck);
    return p;
  }

  std::string tiny_train_json(const std::string& data) const {
    const auto p = path("train.json");
    std::ofstream(p) << R"({"dataset_dir": ")" << data
                     << R"(", "F": 3, "d": 1, "depth": 2, "widths": [4, 4], "head_width": 4,
        "lr": 0.001, "batch": 2, "epochs": 1, "seed": 1, "mode": "distortion",
        "lambda_1": 0.01, "lambda_vgg": 1.0, "lambda_adv": 0.005})";
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"warp", "--params", "x.acof"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen-data", "--out", path("d"), "--count", "0"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bench", "--size", "12"}).code, cli::kExitUsage);
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("interp"), std::string::npos);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  const auto r = run({"warp", "--params", path("missing.acof"), "--input", path("x.ppm"), "--out", path("y.ppm")});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("missing.acof"), std::string::npos);
}

TEST_F(CliTest, IdentityWarpIsByteExact) {
  const auto t = generate_triplet(MotionSpec{}, 16, 1);
  write_image(path("in.ppm"), t.first);
  ParamBundle b;
  b.directions = {WarpParams<float>::identity(16, 16)};
  b.occlusion = OcclusionMap<float>::filled(16, 16, 0.5F);
  write_acof(path("id.acof"), b);
  ASSERT_EQ(run({"warp", "--params", path("id.acof"), "--input", path("in.ppm"), "--out", path("out.ppm")}).code, 0);
  EXPECT_EQ(slurp(path("out.ppm")), slurp(path("in.ppm")));
  EXPECT_EQ(run({"warp", "--params", path("id.acof"), "--input", path("in.ppm"), "--direction", "1",
                 "--out", path("o2.ppm")}).code,
            cli::kExitFailure);
}

TEST_F(CliTest, InterpDumpReproducedByWarp) {
  MotionSpec spec;
  spec.dy = 1;
  spec.dx = 2;
  const auto t = generate_triplet(spec, 16, 2);
  write_image(path("f0.ppm"), t.first);
  write_image(path("f1.ppm"), t.last);
  for (bool occ : {true, false}) {
    const auto ck = tiny_checkpoint(occ);
    ASSERT_EQ(run({"interp", "--ckpt", ck, "--frame0", path("f0.ppm"), "--frame1", path("f1.ppm"),
                   "--out", path("mid.ppm"), "--dump-params", path("p.acof")}).code, 0);
    const auto bundle = read_acof(path("p.acof"));
    EXPECT_EQ(bundle.directions.size(), 2u);
    ASSERT_EQ(run({"warp", "--params", path("p.acof"), "--input", path("f0.ppm"), "--second", path("f1.ppm"),
                   "--out", path("re.ppm")}).code, 0);
    EXPECT_EQ(slurp(path("re.ppm")), slurp(path("mid.ppm"))) << "occlusion " << occ;
  }
}

TEST_F(CliTest, VisualizeWritesMaps) {
  ParamBundle b;
  b.directions = {WarpParams<float>::translation(8, 8, 1.0F, 0.0F), WarpParams<float>::identity(8, 8)};
  b.occlusion = OcclusionMap<float>::filled(8, 8, 0.5F);
  write_acof(path("t.acof"), b);
  const auto r = run({"visualize", "--params", path("t.acof"), "--out-prefix", path("viz")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"viz_meanflow_fwd.ppm", "viz_meanflow_bwd.ppm", "viz_varflow_fwd.ppm", "viz_occlusion.ppm"}) {
    EXPECT_TRUE(fs::exists(path(f))) << f;
  }
  EXPECT_EQ(read_image(path("viz_meanflow_fwd.ppm")).height(), 8u);
}

TEST_F(CliTest, GenDataAndEval) {
  ASSERT_EQ(run({"gen-data", "--out", path("data"), "--count", "3", "--size", "16", "--seed", "4"}).code, 0);
  EXPECT_EQ(read_dataset(path("data")).size(), 3u);
  const auto ck = tiny_checkpoint(true);
  const auto r = run({"eval", "--ckpt", ck, "--data", path("data"), "--baseline"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 6u);
  EXPECT_EQ(l[0], "name,psnr_db,ssim,ie");
  EXPECT_EQ(l[4].rfind("mean,", 0), 0u);
  EXPECT_EQ(l[5].rfind("frame_average_mean,", 0), 0u);
}

TEST_F(CliTest, GradcheckPasses) {
  const auto r = run({"gradcheck", "--module", "adacof", "--seed", "3"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("adacof max_rel_error"), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--module", "vgg"}).code, cli::kExitUsage);
}

TEST_F(CliTest, BenchPrintsCsv) {
  const auto r = run({"bench", "--size", "16x24", "--F", "3", "--iters", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1].rfind("16,24,3,1,", 0), 0u);
}

TEST_F(CliTest, TrainAblateSweep) {
  ASSERT_EQ(run({"gen-data", "--out", path("data"), "--count", "4", "--size", "16", "--seed", "5"}).code, 0);
  const auto cfg = tiny_train_json(path("data"));
  auto r = run({"train", "--config", cfg, "--out", path("run")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 2u);
  EXPECT_TRUE(fs::exists(path("run/final.ackp")));

  r = run({"ablate", "--config", cfg, "--modes", "adacof,woocc,flow_only"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto l = lines(r.out);
  ASSERT_EQ(l.size(), 5u);
  EXPECT_EQ(l[0], "mode,psnr_db,ssim,ie");
  EXPECT_EQ(l[2].rfind("woocc,", 0), 0u);
  EXPECT_EQ(l[4].rfind("frame_average,", 0), 0u);
  EXPECT_EQ(run({"ablate", "--config", cfg, "--modes", "bogus"}).code, cli::kExitUsage);

  r = run({"sweep", "--config", cfg, "--param", "F=1,3"});
  ASSERT_EQ(r.code, 0) << r.err;
  l = lines(r.out);
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "F,psnr_db,ssim,ie");
  EXPECT_EQ(run({"sweep", "--config", cfg, "--param", "depth=2"}).code, cli::kExitUsage);
}
