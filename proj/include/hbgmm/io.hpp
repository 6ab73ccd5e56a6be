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

// Little-endian binary containers:
//
//   FMAP  "FMAP" u16 version, u32 H, W, D, f32[H*W*D] (row-major,
//         dimension-fastest), u8[H*W] validity
//   GMMC  "GMMC" u16 version, u32 C, K, D, then per class
//         f64 weights[K], means[K*D], variances[K*D]
//   NIGB  "NIGB" u16 version, u32 C, K, D, then per cell (c, k, d)
//         f64 mu, kappa, alpha, beta, then f64 weights[C*K]
//
// Label and score grids are FMAP files with D = 1.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "hbgmm/feature_map.hpp"
#include "hbgmm/gmm.hpp"
#include "hbgmm/nig.hpp"

namespace hbgmm {

inline constexpr std::uint16_t kFormatVersion = 1;

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::vector<std::byte> encode_feature_map(const FeatureMap& map);
FeatureMap decode_feature_map(std::span<const std::byte> bytes);

std::vector<std::byte> encode_classifier(const GMMClassifier<double>& model);
GMMClassifier<double> decode_classifier(std::span<const std::byte> bytes);

std::vector<std::byte> encode_bank(const NIGPosteriorBank<double>& bank);
NIGPosteriorBank<double> decode_bank(std::span<const std::byte> bytes);

/// H x W integer grid as a D = 1 map; `valid` may be empty (all valid).
FeatureMap label_grid(std::span<const int> labels, Index height, Index width,
                      std::span<const std::uint8_t> valid = {});
std::vector<int> grid_labels(const FeatureMap& grid);

/// H x W scalar grid as a D = 1 map.
FeatureMap scalar_grid(std::span<const float> values, Index height, Index width,
                       std::span<const std::uint8_t> valid);

}  // namespace hbgmm
