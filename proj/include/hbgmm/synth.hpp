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

// Synthetic labeled feature spaces with tunable class overlap and an OOD
// cluster, and the end-to-end fit / sample / score / evaluate benchmark.
//
// Layout: class means sit on a grid in feature dims 0-1 (a line when D < 3),
// adjacent means `class_separation` apart. For each overlap pair (a, b) the
// mean of b is moved to class_separation / 4 from a along the a->b
// direction. The OOD cluster is centred `ood_offset` away from the
// extremity class (largest coordinate sum) along the last feature axis, or
// along axis 0 when the lattice already uses every axis.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hbgmm/common.hpp"
#include "hbgmm/ensemble.hpp"
#include "hbgmm/gmm.hpp"
#include "hbgmm/metrics.hpp"
#include "hbgmm/nig.hpp"

namespace hbgmm {

struct SynthConfig {
  Index feature_dim = 8;
  int n_classes = 6;
  Index samples_per_class = 2000;
  double class_separation = 1.0;
  std::vector<std::pair<int, int>> overlap_pairs = {{0, 1}, {4, 5}};
  Index ood_count = 600;
  double ood_offset = 3.0;
  double within_class_std = 0.125;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratingParams {
  MatrixX<double> class_means;  // C x D
  VectorX<double> ood_center;   // D
  double within_class_std = 0;
  int extremity_class = 0;
};

struct SynthDataset {
  std::vector<MatrixX<double>> train_features;  // per class, rows are samples
  MatrixX<double> eval_features;                // N x D
  std::vector<int> eval_labels;                 // class id, -1 for OOD
  std::vector<std::uint8_t> eval_is_ood;
  GeneratingParams generating;
};

GeneratingParams layout(const SynthConfig& config);

SynthDataset generate(const SynthConfig& config);

struct PipelineConfig {
  Index components = 2;
  NIGParams<double> prior{};
  Index n_samples = 20;
  std::uint64_t seed = 0;
  EMConfig em{};
  int jobs = 1;
};

struct BenchmarkResult {
  EvalReport epistemic;
  EvalReport predictive;
  double point_accuracy = 0;     // point-estimate model on ID eval samples
  double ensemble_accuracy = 0;  // majority vote on ID eval samples
};

struct FittedPipeline {
  GMMClassifier<double> model;
  std::vector<EMResult<double>> fits;
  NIGPosteriorBank<double> bank;
  std::vector<GMMParameterSample<double>> ensemble;
};

/// EM per class (class c seeded from derive_seed(seed, c)), bank, ensemble.
FittedPipeline fit_pipeline(const std::vector<MatrixX<double>>& train_features,
                            const PipelineConfig& config);

BenchmarkResult run_benchmark(const SynthDataset& dataset, const PipelineConfig& config);

std::string generating_params_json(const SynthConfig& config, const GeneratingParams& params);

}  // namespace hbgmm
