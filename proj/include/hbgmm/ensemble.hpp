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

// Ensemble scoring: majority vote and vote entropy over sampled parameter
// sets, plus the predictive / aleatoric / mutual-information split.

#pragma once

#include <string>
#include <vector>

#include "hbgmm/common.hpp"
#include "hbgmm/feature_map.hpp"
#include "hbgmm/gmm.hpp"
#include "hbgmm/nig.hpp"

namespace hbgmm {

struct VoteRecord {
  Eigen::VectorXi counts;
  int total = 0;
};

template <class T>
struct Decomposition {
  T predictive_entropy = 0;
  T aleatoric = 0;
  T mutual_information = 0;
};

template <class T>
struct PixelScores {
  int predicted_class = -1;
  T epistemic = 0;
  T predictive_entropy = 0;
  T aleatoric = 0;
  T mutual_information = 0;
  T deterministic_entropy = 0;
  T max_posterior = 0;

  bool operator==(const PixelScores&) const = default;
};

template <class T>
struct UncertaintyMap {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> valid;
  std::vector<PixelScores<T>> scores;  // H * W; meaningful only where valid

  Index valid_count() const {
    Index n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }
};

namespace detail {

/// C x M matrix of log p(z | c) under each ensemble member.
template <class T, class Derived>
MatrixX<T> member_log_densities(const Eigen::MatrixBase<Derived>& z,
                                const std::vector<GMMParameterSample<T>>& ensemble) {
  require(!ensemble.empty(), Errc::kInvalidArgument, "ensemble is empty");
  const Index c_count = ensemble.front().num_classes();
  MatrixX<T> out(c_count, static_cast<Index>(ensemble.size()));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    require_shape(ensemble[i].num_classes() == c_count, "ensemble members disagree on C");
    out.col(static_cast<Index>(i)) = class_log_densities(z, ensemble[i]);
  }
  return out;
}

template <class T>
VoteRecord tally(const MatrixX<T>& log_dens) {
  VoteRecord r;
  r.counts = Eigen::VectorXi::Zero(log_dens.rows());
  for (Index i = 0; i < log_dens.cols(); ++i) ++r.counts(argmax_first(log_dens.col(i)));
  r.total = static_cast<int>(log_dens.cols());
  return r;
}

template <class T>
Decomposition<T> decompose(const MatrixX<T>& log_dens) {
  const Index m = log_dens.cols();
  VectorX<T> mean_p = VectorX<T>::Zero(log_dens.rows());
  T aleatoric = 0;
  for (Index i = 0; i < m; ++i) {
    const VectorX<T> p = softmax(log_dens.col(i));
    mean_p += p;
    aleatoric += entropy(p);
  }
  mean_p /= T(m);
  Decomposition<T> out;
  out.predictive_entropy = entropy(mean_p);
  out.aleatoric = aleatoric / T(m);
  out.mutual_information = out.predictive_entropy - out.aleatoric;
  if (out.mutual_information < T(0) && out.mutual_information >= T(-1e-9)) {
    out.mutual_information = 0;
  }
  return out;
}

}  // namespace detail

/// Classifies z under every member and tallies the winners.
template <class T, class Derived>
VoteRecord vote(const Eigen::MatrixBase<Derived>& z,
                const std::vector<GMMParameterSample<T>>& ensemble) {
  return detail::tally(detail::member_log_densities(z, ensemble));
}

/// Most-voted class; ties go to the lowest class id.
inline int majority_class(const VoteRecord& record) {
  require(record.total >= 1, Errc::kInvalidArgument, "vote record is empty");
  return static_cast<int>(argmax_first(record.counts));
}

/// Entropy (nats) of the empirical vote distribution.
inline double vote_entropy(const VoteRecord& record) {
  require(record.total >= 1, Errc::kInvalidArgument, "vote record is empty");
  return entropy((record.counts.cast<double>() / double(record.total)).eval());
}

template <class T, class Derived>
Decomposition<T> decompose_uncertainty(const Eigen::MatrixBase<Derived>& z,
                                       const std::vector<GMMParameterSample<T>>& ensemble) {
  return detail::decompose(detail::member_log_densities(z, ensemble));
}

/// All per-pixel scores for one feature vector.
template <class T, class Derived>
PixelScores<T> score_pixel(const Eigen::MatrixBase<Derived>& z, const GMMClassifier<T>& model,
                           const std::vector<GMMParameterSample<T>>& ensemble) {
  const MatrixX<T> log_dens = detail::member_log_densities(z, ensemble);
  const VoteRecord record = detail::tally(log_dens);
  const Decomposition<T> split = detail::decompose(log_dens);
  const VectorX<T> point = class_posterior(z, model);
  PixelScores<T> s;
  s.predicted_class = majority_class(record);
  s.epistemic = static_cast<T>(vote_entropy(record));
  s.predictive_entropy = split.predictive_entropy;
  s.aleatoric = split.aleatoric;
  s.mutual_information = split.mutual_information;
  s.deterministic_entropy = entropy(point);
  s.max_posterior = point.maxCoeff();
  return s;
}

/// Scores every valid pixel; pixels are independent so `jobs` only affects speed.
template <class T>
UncertaintyMap<T> score_feature_map(const FeatureMap& features, const GMMClassifier<T>& model,
                                    const std::vector<GMMParameterSample<T>>& ensemble,
                                    int jobs = 1) {
  model.validate();
  require(!ensemble.empty(), Errc::kInvalidArgument, "ensemble is empty");
  require_shape(features.dim() == model.feature_dim(),
                "feature dimension " + std::to_string(features.dim()) +
                    " != model dimension " + std::to_string(model.feature_dim()));
  for (const auto& member : ensemble) {
    require_shape(member.num_classes() == model.num_classes() &&
                      member.feature_dim() == model.feature_dim(),
                  "ensemble member does not match the model shape");
  }
  UncertaintyMap<T> out;
  out.height = features.height;
  out.width = features.width;
  out.valid = features.valid;
  out.scores.assign(static_cast<std::size_t>(features.pixels()), PixelScores<T>{});
  parallel_for(features.pixels(), jobs, [&](Index begin, Index end) {
    for (Index p = begin; p < end; ++p) {
      if (!features.is_valid(p)) continue;
      out.scores[static_cast<std::size_t>(p)] =
          score_pixel(features.data.row(p).transpose(), model, ensemble);
    }
  });
  return out;
}

}  // namespace hbgmm
