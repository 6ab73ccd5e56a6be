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

#include "hbgmm/rangeview.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"

namespace hbgmm {
namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

std::vector<std::byte> scan_bytes(const std::vector<std::array<float, 4>>& pts) {
  std::vector<std::byte> out;
  for (const auto& p : pts)
    for (float v : p) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

PointCloud cloud_of(const std::vector<std::array<float, 4>>& pts) {
  PointCloud c(static_cast<Index>(pts.size()), 4);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (Index j = 0; j < 4; ++j) c(static_cast<Index>(i), j) = pts[i][static_cast<std::size_t>(j)];
  return c;
}

PointCloud random_cloud(std::mt19937_64& rng, Index n) {
  std::normal_distribution<float> xy(0.0f, 20.0f);
  std::normal_distribution<float> z(-1.0f, 2.0f);
  std::uniform_real_distribution<float> inten(0.0f, 1.0f);
  PointCloud c(n, 4);
  for (Index i = 0; i < n; ++i) c.row(i) << xy(rng), xy(rng), z(rng), inten(rng);
  return c;
}

TEST(ParsePointCloud, OnePoint) {
  const auto c = parse_point_cloud(scan_bytes({{1.0f, 2.0f, 3.0f, 0.5f}}));
  ASSERT_EQ(c.rows(), 1);
  EXPECT_EQ(c(0, 0), 1.0f);
  EXPECT_EQ(c(0, 1), 2.0f);
  EXPECT_EQ(c(0, 2), 3.0f);
  EXPECT_EQ(c(0, 3), 0.5f);
}

TEST(ParsePointCloud, EmptyAndMalformed) {
  EXPECT_EQ(parse_point_cloud({}).rows(), 0);
  std::vector<std::byte> bytes(17);
  EXPECT_HBGMM_ERROR(parse_point_cloud(bytes), Errc::kMalformedScan);
}

TEST(ParsePointCloud, NonFiniteNamesPoint) {
  auto bytes = scan_bytes({{1, 1, 1, 0}, {1, std::numeric_limits<float>::quiet_NaN(), 1, 0}});
  try {
    parse_point_cloud(bytes);
    FAIL() << "expected corrupt-point error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kCorruptPoint);
    EXPECT_NE(std::string(e.what()).find("point 1"), std::string::npos);
  }
}

TEST(ParseLabels, LowSixteenBits) {
  std::vector<std::byte> bytes;
  put_u32(bytes, 0x00010001u);
  const auto ls = parse_labels(bytes, 1, 99);
  EXPECT_EQ(ls.labels[0], 1);
  EXPECT_EQ(ls.outlier_flag[0], 0);
}

TEST(ParseLabels, OutlierFlag) {
  std::vector<std::byte> bytes;
  put_u32(bytes, 0x00070001u);
  put_u32(bytes, 40u);
  const auto ls = parse_labels(bytes, 2);
  EXPECT_EQ(ls.outlier_flag[0], 1);
  EXPECT_EQ(ls.outlier_flag[1], 0);
}

TEST(ParseLabels, CountMismatch) {
  std::vector<std::byte> bytes(8);
  EXPECT_HBGMM_ERROR(parse_labels(bytes, 3), Errc::kLabelCount);
}

TEST(ProjectSpherical, SinglePointPixel) {
  const auto proj = project_spherical(cloud_of({{10, 0, 0, 0.3f}}), nullptr);
  const auto& img = proj.image;
  ASSERT_EQ(img.height, 64);
  ASSERT_EQ(img.width, 1024);
  // col = floor(0.5 * 1024) = 512, row = floor((1 - 25/28) * 64) = 6
  const Index p = 6 * 1024 + 512;
  const auto pc = project_point(10, 0, 0, {});
  EXPECT_EQ(pc.row, 6);
  EXPECT_EQ(pc.col, 512);
  Index valid = 0;
  for (auto v : img.valid) valid += v;
  EXPECT_EQ(valid, 1);
  ASSERT_TRUE(img.valid[static_cast<std::size_t>(p)]);
  EXPECT_EQ(img.point_index[static_cast<std::size_t>(p)], 0u);
  EXPECT_FLOAT_EQ(img.channels(p, 3), 0.3f);
  EXPECT_FLOAT_EQ(img.channels(p, 4), 10.0f);
  EXPECT_EQ(img.channels(0, 0), kEmptyPixel);
  EXPECT_FALSE(img.point_index[0].has_value());
}

TEST(ProjectSpherical, AllZeroRangeIsEmpty) {
  const auto proj = project_spherical(cloud_of({{0, 0, 0, 1}, {0, 0, 0, 0.5f}}), nullptr);
  EXPECT_EQ(proj.skipped, 2u);
  for (auto v : proj.image.valid) ASSERT_EQ(v, 0);
  EXPECT_EQ(proj.image.point_pixel, (std::vector<std::int64_t>{-1, -1}));
}

TEST(ProjectSpherical, NearestOnSameRayWins) {
  for (bool near_first : {true, false}) {
    std::vector<std::array<float, 4>> pts{{5, 1, 0, 0.1f}, {50, 10, 0, 0.9f}};
    if (!near_first) std::swap(pts[0], pts[1]);
    const auto proj = project_spherical(cloud_of(pts), nullptr);
    const auto p = proj.image.point_pixel[0];
    ASSERT_EQ(p, proj.image.point_pixel[1]);
    EXPECT_NEAR(proj.image.channels(p, 4), std::sqrt(26.0f), 1e-5);
    EXPECT_EQ(proj.image.point_index[static_cast<std::size_t>(p)], near_first ? 0u : 1u);
  }
}

TEST(ProjectSpherical, EqualRangeKeepsEarlierPoint) {
  const auto proj = project_spherical(cloud_of({{7, 0, 0, 0.2f}, {7, 0, 0, 0.8f}}), nullptr);
  const auto p = proj.image.point_pixel[0];
  EXPECT_EQ(proj.image.point_index[static_cast<std::size_t>(p)], 0u);
}

TEST(ProjectSpherical, LabelGridFollowsWinner) {
  LabelSet ls{{10, 1}, {0, 1}};
  const auto proj = project_spherical(cloud_of({{20, 2, 0, 0}, {10, 1, 0, 0}}), &ls);
  const auto p = static_cast<std::size_t>(proj.image.point_pixel[0]);
  EXPECT_EQ(proj.labels[p], 1);
  EXPECT_EQ(proj.labels[0], -1);
  LabelSet short_labels{{10}, {0}};
  EXPECT_HBGMM_ERROR(project_spherical(cloud_of({{1, 0, 0, 0}, {2, 0, 0, 0}}), &short_labels),
                     Errc::kLabelCount);
}

TEST(ProjectSpherical, InvalidConfig) {
  ProjectionConfig bad;
  bad.fov_up_deg = -30;
  EXPECT_HBGMM_ERROR(project_spherical(cloud_of({{1, 0, 0, 0}}), nullptr, bad), Errc::kInvalidArgument);
  bad = {};
  bad.width = 0;
  EXPECT_HBGMM_ERROR(project_spherical(cloud_of({{1, 0, 0, 0}}), nullptr, bad), Errc::kInvalidArgument);
}

TEST(ProjectSpherical, ClampingTotality) {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> wild(0.0f, 1e3f);
  std::uniform_int_distribution<Index> size(1, 40);
  for (int trial = 0; trial < 2000; ++trial) {
    ProjectionConfig cfg;
    cfg.height = size(rng);
    cfg.width = size(rng);
    cfg.fov_down_deg = -std::uniform_real_distribution<double>(0.1, 80)(rng);
    cfg.fov_up_deg = std::uniform_real_distribution<double>(cfg.fov_down_deg + 0.1, 85)(rng);
    const float x = wild(rng), y = wild(rng), z = wild(rng);
    if (x == 0 && y == 0 && z == 0) continue;
    const auto pc = project_point(x, y, z, cfg);
    ASSERT_GE(pc.row, 0);
    ASSERT_LT(pc.row, cfg.height);
    ASSERT_GE(pc.col, 0);
    ASSERT_LT(pc.col, cfg.width);
  }
}

TEST(ProjectSpherical, ImageInvariants) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cloud = random_cloud(rng, 5000);
    const auto proj = project_spherical(cloud, nullptr);
    const auto& img = proj.image;
    for (Index p = 0; p < img.pixels(); ++p) {
      const auto up = static_cast<std::size_t>(p);
      ASSERT_EQ(img.valid[up] != 0, img.point_index[up].has_value());
      if (!img.valid[up]) {
        ASSERT_TRUE((img.channels.row(p).array() == kEmptyPixel).all());
        continue;
      }
      const auto& row = img.channels.row(p);
      const float r = std::sqrt(row(0) * row(0) + row(1) * row(1) + row(2) * row(2));
      ASSERT_NEAR(row(4), r, 1e-5f * r);
      // Round trip: the owning point maps back here.
      const auto i = static_cast<Index>(*img.point_index[up]);
      const auto pc = project_point(cloud(i, 0), cloud(i, 1), cloud(i, 2), {});
      ASSERT_EQ(pc.row * img.width + pc.col, p);
    }
    // Nearest-wins: no point landing on a pixel is strictly closer than its owner.
    for (Index i = 0; i < cloud.rows(); ++i) {
      const auto p = img.point_pixel[static_cast<std::size_t>(i)];
      const float x = cloud(i, 0), y = cloud(i, 1), z = cloud(i, 2);
      const float r = std::sqrt(x * x + y * y + z * z);
      ASSERT_GE(r, img.channels(p, 4));
    }
  }
}

TEST(BackProject, RangeChannelIdentity) {
  std::mt19937_64 rng(2);
  auto cloud = random_cloud(rng, 3000);
  cloud.row(7).setZero();
  const auto proj = project_spherical(cloud, nullptr);
  const auto& img = proj.image;
  std::vector<float> range(static_cast<std::size_t>(img.pixels()));
  for (Index p = 0; p < img.pixels(); ++p) range[static_cast<std::size_t>(p)] = img.channels(p, 4);
  const auto per_point = back_project(img, range, img.height, img.width);
  ASSERT_EQ(per_point.size(), 3000u);
  EXPECT_TRUE(std::isnan(per_point[7]));
  for (Index p = 0; p < img.pixels(); ++p) {
    const auto up = static_cast<std::size_t>(p);
    if (img.point_index[up]) EXPECT_EQ(per_point[*img.point_index[up]], range[up]);
  }
}

TEST(BackProject, OccludedPointGetsWinnerValue) {
  const auto proj = project_spherical(cloud_of({{5, 1, 0, 0}, {50, 10, 0, 0}}), nullptr);
  std::vector<float> values(static_cast<std::size_t>(proj.image.pixels()), 0.0f);
  values[static_cast<std::size_t>(proj.image.point_pixel[0])] = 42.0f;
  const auto out = back_project(proj.image, values, proj.image.height, proj.image.width);
  EXPECT_EQ(out[0], 42.0f);
  EXPECT_EQ(out[1], 42.0f);
}

TEST(BackProject, ShapeMismatch) {
  const auto proj = project_spherical(cloud_of({{5, 1, 0, 0}}), nullptr);
  std::vector<float> values(static_cast<std::size_t>(63 * 1024));
  EXPECT_HBGMM_ERROR(back_project(proj.image, values, 63, 1024), Errc::kShape);
}

TEST(RangeImage, AsFeatureMap) {
  const auto proj = project_spherical(cloud_of({{10, 0, 0, 0.3f}}), nullptr);
  const auto fm = proj.image.as_feature_map();
  EXPECT_EQ(fm.dim(), 5);
  EXPECT_EQ(fm.valid_count(), 1);
  EXPECT_EQ(fm.height, 64);
}

}  // namespace
}  // namespace hbgmm
