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

#include "hbgmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "hbgmm/common.hpp"
#include "json.hpp"

namespace hbgmm {
namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts check_ranking_input(const ScoredPixels& data) {
  require_shape(data.scores.size() == data.is_ood.size(), "scores and OOD flags differ in length");
  Counts c;
  for (std::size_t i = 0; i < data.size(); ++i) {
    require(std::isfinite(data.scores[i]), Errc::kInvalidArgument, "non-finite score");
    (data.is_ood[i] ? c.pos : c.neg)++;
  }
  require(c.pos > 0 && c.neg > 0, Errc::kUndefinedMetric,
          "AUROC/AUPRC/FPR95 need at least one OOD and one ID sample (got " +
              std::to_string(c.pos) + " OOD, " + std::to_string(c.neg) + " ID)");
  return c;
}

/// Indices sorted by descending score, input order kept on ties.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auroc(const ScoredPixels& data) {
  const Counts c = check_ranking_input(data);
  const auto order = descending_order(data.scores);
  // Walk tie groups from the top; each ID sample earns credit for OOD
  // samples strictly above it plus half of those tied with it.
  double wins = 0;
  std::size_t pos_above = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    std::size_t group_neg = 0;
    while (j < order.size() && data.scores[order[j]] == data.scores[order[i]]) {
      (data.is_ood[order[j]] ? group_pos : group_neg)++;
      ++j;
    }
    wins += static_cast<double>(group_neg) *
            (static_cast<double>(pos_above) + 0.5 * static_cast<double>(group_pos));
    pos_above += group_pos;
    i = j;
  }
  return wins / (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double auprc(const ScoredPixels& data) {
  const Counts c = check_ranking_input(data);
  const auto order = descending_order(data.scores);
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (data.is_ood[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(c.pos);
}

double fpr_at_tpr(const ScoredPixels& data, double target_tpr) {
  require(target_tpr > 0.0 && target_tpr <= 1.0, Errc::kInvalidArgument,
          "target TPR must lie in (0, 1]");
  const Counts c = check_ranking_input(data);
  const auto order = descending_order(data.scores);
  const double needed = target_tpr * static_cast<double>(c.pos) - 1e-9;
  std::size_t tp = 0;
  std::size_t fp = 0;
  // Lowering the threshold one tie group at a time only adds flags, so the
  // first group reaching the target gives the smallest FPR.
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && data.scores[order[j]] == data.scores[order[i]]) {
      (data.is_ood[order[j]] ? tp : fp)++;
      ++j;
    }
    if (static_cast<double>(tp) >= needed) {
      return static_cast<double>(fp) / static_cast<double>(c.neg);
    }
    i = j;
  }
  return 1.0;
}

IoUResult miou(std::span<const int> pred, std::span<const int> gt, int num_classes,
               std::span<const std::uint8_t> ignore) {
  require_shape(pred.size() == gt.size(), "prediction and ground truth differ in size");
  require_shape(ignore.empty() || ignore.size() == gt.size(), "ignore mask has the wrong size");
  require(num_classes >= 1, Errc::kInvalidArgument, "num_classes must be >= 1");
  const auto n = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(n, 0), fp(n, 0), fn(n, 0);
  auto in_range = [&](int c) { return c >= 0 && c < num_classes; };
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!ignore.empty() && ignore[i]) continue;
    const int p = pred[i];
    const int g = gt[i];
    if (p == g) {
      if (in_range(g)) ++tp[static_cast<std::size_t>(g)];
      continue;
    }
    if (in_range(p)) ++fp[static_cast<std::size_t>(p)];
    if (in_range(g)) ++fn[static_cast<std::size_t>(g)];
  }
  IoUResult out;
  out.per_class.assign(n, std::numeric_limits<double>::quiet_NaN());
  double sum = 0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t denom = tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    out.per_class[c] = static_cast<double>(tp[c]) / static_cast<double>(denom);
    sum += out.per_class[c];
    ++present;
  }
  out.miou = present ? sum / static_cast<double>(present) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

PercentileResult percentile_threshold(std::span<const double> scores, double top_fraction) {
  require(!scores.empty(), Errc::kInvalidArgument, "percentile threshold of an empty score set");
  require(top_fraction > 0.0 && top_fraction < 1.0, Errc::kInvalidArgument,
          "top fraction must lie in (0, 1)");
  std::vector<double> sorted(scores.begin(), scores.end());
  const std::size_t n = sorted.size();
  // 1-based nearest rank of the (1 - f) quantile; the epsilon absorbs
  // representation error in (1 - f) * n for exact products such as 0.95 * 100.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - top_fraction) * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  PercentileResult out;
  out.threshold = sorted[rank - 1];
  out.mask.resize(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] > out.threshold) {
      out.mask[i] = 1;
      ++out.flagged;
    }
  }
  return out;
}

EvalReport evaluate(const ScoredPixels& data, const IoUResult& segmentation) {
  EvalReport r;
  r.auroc = auroc(data);
  r.auprc = auprc(data);
  r.fpr95 = fpr_at_tpr(data, 0.95);
  r.miou = segmentation.miou;
  r.per_class_iou = segmentation.per_class;
  for (auto f : data.is_ood) (f ? r.n_ood : r.n_id)++;
  return r;
}

namespace {

nlohmann::ordered_json fraction(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double fraction_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string fixed6(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["auroc"] = fraction(report.auroc);
  j["auprc"] = fraction(report.auprc);
  j["fpr95"] = fraction(report.fpr95);
  j["miou"] = fraction(report.miou);
  auto& per_class = j["per_class_iou"] = nlohmann::ordered_json::array();
  for (double v : report.per_class_iou) per_class.push_back(fraction(v));
  j["n_id"] = report.n_id;
  j["n_ood"] = report.n_ood;
  return j.dump(indent);
}

EvalReport eval_report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kFormat, std::string("eval report is not valid JSON: ") + e.what());
  }
  for (const char* key : {"auroc", "auprc", "fpr95", "miou", "per_class_iou", "n_id", "n_ood"}) {
    require(j.contains(key), Errc::kFormat, std::string("eval report lacks key '") + key + "'");
  }
  EvalReport r;
  r.auroc = fraction_from(j["auroc"]);
  r.auprc = fraction_from(j["auprc"]);
  r.fpr95 = fraction_from(j["fpr95"]);
  r.miou = fraction_from(j["miou"]);
  for (const auto& v : j["per_class_iou"]) r.per_class_iou.push_back(fraction_from(v));
  r.n_id = j["n_id"].get<std::size_t>();
  r.n_ood = j["n_ood"].get<std::size_t>();
  return r;
}

std::string to_csv(const EvalReport& report) {
  std::ostringstream header;
  std::ostringstream row;
  header << "auroc,auprc,fpr95,miou";
  row << fixed6(report.auroc) << ',' << fixed6(report.auprc) << ',' << fixed6(report.fpr95) << ','
      << fixed6(report.miou);
  for (std::size_t c = 0; c < report.per_class_iou.size(); ++c) {
    header << ",iou_" << c;
    row << ',' << fixed6(report.per_class_iou[c]);
  }
  header << ",n_id,n_ood\n";
  row << ',' << report.n_id << ',' << report.n_ood << '\n';
  return header.str() + row.str();
}

}  // namespace hbgmm
