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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "hbgmm/gmm.hpp"
#include "hbgmm/nig.hpp"
#include "hbgmm/rangeview.hpp"
#include "hbgmm/synth.hpp"

namespace hbgmm {

/// Raw dataset label -> training class id, plus the OOD and ignored raw ids.
struct ClassMap {
  std::map<int, int> raw_to_train;
  int outlier_raw = 1;
  std::set<int> ignore_raw;

  /// SemanticKITTI learning map onto 19 training classes.
  static ClassMap semantic_kitti();

  int num_classes() const;
  std::optional<int> train_id(int raw) const;
  bool is_outlier(int raw) const { return raw == outlier_raw; }
  void validate() const;
};

struct RunConfig {
  std::filesystem::path scan_dir;
  std::filesystem::path label_dir;
  std::filesystem::path feature_dir;
  std::filesystem::path label_grid_dir;  // defaults to feature_dir
  std::filesystem::path model_dir;       // defaults to output_dir
  std::filesystem::path score_dir;       // defaults to output_dir / "scores"
  std::filesystem::path output_dir = "out";

  ProjectionConfig projection{};
  Index components = 2;
  Index feature_dim = 0;  // 0: take D from the feature files
  NIGParams<double> prior{};
  EMConfig em{};
  Index n_samples = 20;
  std::uint64_t seed = 0;
  double top_fraction = 0.05;
  bool per_scan_threshold = false;
  ClassMap class_map = ClassMap::semantic_kitti();
  SynthConfig synth{};
  int jobs = 1;

  std::filesystem::path label_grids() const { return label_grid_dir.empty() ? feature_dir : label_grid_dir; }
  std::filesystem::path models() const { return model_dir.empty() ? output_dir : model_dir; }
  std::filesystem::path scores() const { return score_dir.empty() ? output_dir / "scores" : score_dir; }
};

/// Parses INI text, applying `overrides` ("section.key" -> value) on top.
RunConfig parse_config(const std::string& ini_text,
                       const std::map<std::string, std::string>& overrides = {});

RunConfig load_config(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& overrides = {});

}  // namespace hbgmm
