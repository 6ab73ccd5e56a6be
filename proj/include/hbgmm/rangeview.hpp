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

// SemanticKITTI scan/label decoding and spherical range-view projection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hbgmm/common.hpp"
#include "hbgmm/feature_map.hpp"

namespace hbgmm {

/// N x 4 rows of (x, y, z, intensity).
using PointCloud = Eigen::Matrix<float, Eigen::Dynamic, 4, Eigen::RowMajor>;

struct LabelSet {
  std::vector<std::uint16_t> labels;      // raw semantic id (low 16 bits)
  std::vector<std::uint8_t> outlier_flag;
};

struct ProjectionConfig {
  Index height = 64;
  Index width = 1024;
  double fov_up_deg = 3.0;
  double fov_down_deg = -25.0;

  void validate() const;
};

inline constexpr float kEmptyPixel = -1.0f;
inline constexpr int kRangeChannels = 5;  // x, y, z, intensity, range

struct RangeImage {
  Index height = 0;
  Index width = 0;
  RowMatrixX<float> channels;                             // (H * W) x 5
  std::vector<std::uint8_t> valid;                         // H * W
  std::vector<std::optional<std::uint32_t>> point_index;   // H * W, owning point
  std::vector<std::int64_t> point_pixel;                   // per point; -1 if skipped

  Index pixels() const { return height * width; }
  /// The channels as a D = 5 feature map sharing the validity mask.
  FeatureMap as_feature_map() const;
};

struct Projection {
  RangeImage image;
  std::vector<int> labels;  // H * W raw semantic ids, -1 where empty (only with labels)
  std::size_t skipped = 0;  // zero-range points
};

PointCloud parse_point_cloud(std::span<const std::byte> bytes);

LabelSet parse_labels(std::span<const std::byte> bytes, std::size_t point_count,
                      std::uint16_t outlier_id = 1);

struct PixelCoord {
  Index row = 0;
  Index col = 0;
};

/// Pixel for a point with nonzero range, clamped into the image.
PixelCoord project_point(float x, float y, float z, const ProjectionConfig& config);

Projection project_spherical(const PointCloud& cloud, const LabelSet* labels,
                             const ProjectionConfig& config = {});

/// Per-point copy of `values` (H x W, row-major) read at each point's pixel.
/// Points skipped during projection receive NaN.
std::vector<float> back_project(const RangeImage& image, std::span<const float> values,
                                Index values_height, Index values_width);

}  // namespace hbgmm
