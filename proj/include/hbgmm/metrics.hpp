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

// Threshold-free OOD metrics (higher score = more OOD), mIoU, and the
// percentile flagging rule.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hbgmm {

struct ScoredPixels {
  std::vector<double> scores;
  std::vector<std::uint8_t> is_ood;

  void push_back(double score, bool ood) {
    scores.push_back(score);
    is_ood.push_back(ood ? 1 : 0);
  }
  std::size_t size() const { return scores.size(); }
};

struct EvalReport {
  double auroc = 0;
  double auprc = 0;
  double fpr95 = 0;
  double miou = 0;
  std::vector<double> per_class_iou;  // NaN where the class is absent from both grids
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

/// Mann-Whitney probability that an OOD score beats an ID score, ties = 1/2.
double auroc(const ScoredPixels& data);

/// Average precision over OOD positives, descending score, stable on ties.
double auprc(const ScoredPixels& data);

/// Smallest FPR among thresholds (flag score >= t) reaching TPR >= target.
double fpr_at_tpr(const ScoredPixels& data, double target_tpr = 0.95);

struct IoUResult {
  double miou = 0;
  std::vector<double> per_class;
};

/// Per-class TP / (TP + FP + FN) over pixels with ignore[p] == 0. Labels
/// outside [0, num_classes) count as misses for the other grid's class.
IoUResult miou(std::span<const int> pred, std::span<const int> gt, int num_classes,
               std::span<const std::uint8_t> ignore = {});

struct PercentileResult {
  double threshold = 0;
  std::vector<std::uint8_t> mask;
  std::size_t flagged = 0;
};

/// Nearest-rank (1 - top_fraction) quantile; flags scores strictly above it.
PercentileResult percentile_threshold(std::span<const double> scores, double top_fraction = 0.05);

/// Ranking metrics for `data` plus the supplied segmentation result.
EvalReport evaluate(const ScoredPixels& data, const IoUResult& segmentation);

std::string to_json(const EvalReport& report, int indent = 2);
EvalReport eval_report_from_json(const std::string& text);
std::string to_csv(const EvalReport& report);

}  // namespace hbgmm
