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

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace hbgmm {
namespace {

std::uint32_t load_u32_le(const std::byte* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void ProjectionConfig::validate() const {
  require(height >= 1 && width >= 1, Errc::kInvalidArgument, "projection size must be >= 1x1");
  require(fov_up_deg > fov_down_deg, Errc::kInvalidArgument, "fov_up must exceed fov_down");
}

FeatureMap RangeImage::as_feature_map() const {
  FeatureMap fm;
  fm.height = height;
  fm.width = width;
  fm.data = channels;
  fm.valid = valid;
  return fm;
}

PointCloud parse_point_cloud(std::span<const std::byte> bytes) {
  require(bytes.size() % 16 == 0, Errc::kMalformedScan,
          "scan payload of " + std::to_string(bytes.size()) + " bytes is not a multiple of 16");
  const auto n = static_cast<Index>(bytes.size() / 16);
  PointCloud cloud(n, 4);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < 4; ++c) {
      const float v = std::bit_cast<float>(load_u32_le(bytes.data() + 16 * i + 4 * c));
      require(std::isfinite(v), Errc::kCorruptPoint,
              "point " + std::to_string(i) + " has a non-finite value");
      cloud(i, c) = v;
    }
  }
  return cloud;
}

LabelSet parse_labels(std::span<const std::byte> bytes, std::size_t point_count,
                      std::uint16_t outlier_id) {
  require(bytes.size() == 4 * point_count, Errc::kLabelCount,
          "label payload of " + std::to_string(bytes.size()) + " bytes does not match " +
              std::to_string(point_count) + " points");
  LabelSet out;
  out.labels.resize(point_count);
  out.outlier_flag.resize(point_count);
  for (std::size_t i = 0; i < point_count; ++i) {
    const auto semantic = static_cast<std::uint16_t>(load_u32_le(bytes.data() + 4 * i) & 0xFFFFu);
    out.labels[i] = semantic;
    out.outlier_flag[i] = semantic == outlier_id;
  }
  return out;
}

PixelCoord project_point(float x, float y, float z, const ProjectionConfig& config) {
  const double range = std::sqrt(double(x) * x + double(y) * y + double(z) * z);
  const double yaw = std::atan2(double(y), double(x));
  const double pitch = std::asin(std::clamp(double(z) / range, -1.0, 1.0));
  const double deg = std::numbers::pi / 180.0;
  const double fov_up = config.fov_up_deg * deg;
  const double fov_down = config.fov_down_deg * deg;
  const double u = 0.5 * (1.0 - yaw / std::numbers::pi) * double(config.width);
  const double v = (1.0 - (pitch - fov_down) / (fov_up - fov_down)) * double(config.height);
  PixelCoord p;
  p.col = std::clamp<Index>(static_cast<Index>(std::floor(u)), 0, config.width - 1);
  p.row = std::clamp<Index>(static_cast<Index>(std::floor(v)), 0, config.height - 1);
  return p;
}

Projection project_spherical(const PointCloud& cloud, const LabelSet* labels,
                             const ProjectionConfig& config) {
  config.validate();
  const Index n = cloud.rows();
  if (labels) {
    require(labels->labels.size() == static_cast<std::size_t>(n), Errc::kLabelCount,
            "label count does not match the point cloud");
  }
  Projection out;
  RangeImage& img = out.image;
  img.height = config.height;
  img.width = config.width;
  img.channels = RowMatrixX<float>::Constant(img.pixels(), kRangeChannels, kEmptyPixel);
  img.valid.assign(static_cast<std::size_t>(img.pixels()), 0);
  img.point_index.assign(static_cast<std::size_t>(img.pixels()), std::nullopt);
  img.point_pixel.assign(static_cast<std::size_t>(n), -1);
  if (labels) out.labels.assign(static_cast<std::size_t>(img.pixels()), -1);

  std::vector<float> best(static_cast<std::size_t>(img.pixels()),
                          std::numeric_limits<float>::infinity());
  for (Index i = 0; i < n; ++i) {
    const float x = cloud(i, 0), y = cloud(i, 1), z = cloud(i, 2);
    const float range = std::sqrt(x * x + y * y + z * z);
    if (!(range > 0.0f)) {
      ++out.skipped;
      continue;
    }
    const PixelCoord px = project_point(x, y, z, config);
    const Index p = px.row * img.width + px.col;
    const auto up = static_cast<std::size_t>(p);
    img.point_pixel[static_cast<std::size_t>(i)] = p;
    // Strict comparison: on equal range the earlier point keeps the pixel.
    if (range < best[up]) {
      best[up] = range;
      img.channels.row(p) << x, y, z, cloud(i, 3), range;
      img.valid[up] = 1;
      img.point_index[up] = static_cast<std::uint32_t>(i);
      if (labels) out.labels[up] = labels->labels[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

std::vector<float> back_project(const RangeImage& image, std::span<const float> values,
                                Index values_height, Index values_width) {
  require_shape(values_height == image.height && values_width == image.width &&
                    values.size() == static_cast<std::size_t>(image.pixels()),
                "value grid " + std::to_string(values_height) + "x" + std::to_string(values_width) +
                    " does not match range image " + std::to_string(image.height) + "x" +
                    std::to_string(image.width));
  std::vector<float> out(image.point_pixel.size(), std::numeric_limits<float>::quiet_NaN());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int64_t p = image.point_pixel[i];
    if (p >= 0) out[i] = values[static_cast<std::size_t>(p)];
  }
  return out;
}

}  // namespace hbgmm
