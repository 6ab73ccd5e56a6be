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

#pragma once

#include <cstdint>
#include <vector>

#include "hbgmm/common.hpp"

namespace hbgmm {

/// H x W grid of D-dimensional float vectors. Row p = y * W + x of `data`
/// holds pixel p, so the row-major buffer is dimension-fastest.
struct FeatureMap {
  Index height = 0;
  Index width = 0;
  RowMatrixX<float> data;           // (H * W) x D
  std::vector<std::uint8_t> valid;  // H * W, 0 or 1

  FeatureMap() = default;
  FeatureMap(Index h, Index w, Index d, float fill = 0.0f)
      : height(h),
        width(w),
        data(RowMatrixX<float>::Constant(h * w, d, fill)),
        valid(static_cast<std::size_t>(h * w), 0) {}

  Index dim() const { return data.cols(); }
  Index pixels() const { return height * width; }
  bool is_valid(Index p) const { return valid[static_cast<std::size_t>(p)] != 0; }
  Index valid_count() const {
    Index n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }
};

}  // namespace hbgmm
