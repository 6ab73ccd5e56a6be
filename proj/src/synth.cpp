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

#include "hbgmm/synth.hpp"

#include <random>

#include "json.hpp"

namespace hbgmm {

void SynthConfig::validate() const {
  require(feature_dim >= 1 && n_classes >= 1 && ood_count >= 1, Errc::kInvalidArgument,
          "synth: feature_dim, n_classes and ood_count must be >= 1");
  require(samples_per_class >= 2, Errc::kInvalidArgument,
          "synth: samples_per_class must be >= 2 so both splits are non-empty");
  require(class_separation > 0 && ood_offset > 0 && within_class_std > 0, Errc::kInvalidArgument,
          "synth: distances and within_class_std must be > 0");
  for (const auto& [a, b] : overlap_pairs) {
    require(a >= 0 && b >= 0 && a < n_classes && b < n_classes && a != b,
            Errc::kInvalidArgument,
            "synth: overlap pair (" + std::to_string(a) + "," + std::to_string(b) + ") is invalid");
  }
}

GeneratingParams layout(const SynthConfig& config) {
  config.validate();
  const Index d = config.feature_dim;
  const int c_count = config.n_classes;
  const double sep = config.class_separation;
  const bool grid = d >= 3;
  const int cols = grid ? static_cast<int>(std::ceil(std::sqrt(double(c_count)))) : c_count;

  GeneratingParams g;
  g.within_class_std = config.within_class_std;
  g.class_means = MatrixX<double>::Zero(c_count, d);
  for (int c = 0; c < c_count; ++c) {
    g.class_means(c, 0) = double(c % cols) * sep;
    if (grid) g.class_means(c, 1) = double(c / cols) * sep;
  }
  for (const auto& [a, b] : config.overlap_pairs) {
    VectorX<double> dir = (g.class_means.row(b) - g.class_means.row(a)).transpose();
    if (dir.norm() == 0.0) dir = VectorX<double>::Unit(d, 0);
    g.class_means.row(b) = g.class_means.row(a) + (sep / 4.0) * dir.normalized().transpose();
  }
  g.extremity_class = static_cast<int>(argmax_first(g.class_means.rowwise().sum()));
  g.ood_center = g.class_means.row(g.extremity_class).transpose();
  const Index lattice_dims = grid ? 2 : 1;
  g.ood_center(d > lattice_dims ? d - 1 : 0) += config.ood_offset;
  return g;
}

SynthDataset generate(const SynthConfig& config) {
  SynthDataset ds;
  ds.generating = layout(config);
  const Index d = config.feature_dim;
  const Index n_train = config.samples_per_class / 2;
  const Index n_eval = config.samples_per_class - n_train;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.within_class_std);
  auto draw = [&](const auto& center) {
    VectorX<double> v(d);
    for (Index j = 0; j < d; ++j) v(j) = center(j) + noise(rng);
    return v;
  };

  const Index eval_total = n_eval * config.n_classes + config.ood_count;
  ds.eval_features.resize(eval_total, d);
  ds.eval_labels.reserve(static_cast<std::size_t>(eval_total));
  ds.eval_is_ood.reserve(static_cast<std::size_t>(eval_total));
  Index row = 0;
  for (int c = 0; c < config.n_classes; ++c) {
    const auto mean = ds.generating.class_means.row(c);
    MatrixX<double> train(n_train, d);
    for (Index i = 0; i < n_train; ++i) train.row(i) = draw(mean).transpose();
    ds.train_features.push_back(std::move(train));
    for (Index i = 0; i < n_eval; ++i) {
      ds.eval_features.row(row++) = draw(mean).transpose();
      ds.eval_labels.push_back(c);
      ds.eval_is_ood.push_back(0);
    }
  }
  for (Index i = 0; i < config.ood_count; ++i) {
    ds.eval_features.row(row++) = draw(ds.generating.ood_center).transpose();
    ds.eval_labels.push_back(-1);
    ds.eval_is_ood.push_back(1);
  }
  return ds;
}

FittedPipeline fit_pipeline(const std::vector<MatrixX<double>>& train_features,
                            const PipelineConfig& config) {
  FittedPipeline out;
  for (std::size_t c = 0; c < train_features.size(); ++c) {
    EMConfig em = config.em;
    em.seed = derive_seed(config.seed, c);
    out.fits.push_back(em_fit<double>(train_features[c], config.components, em, static_cast<int>(c)));
    out.model.classes.push_back(out.fits.back().gmm);
  }
  std::vector<SufficientStats<double>> stats;
  for (const auto& f : out.fits) stats.push_back(f.stats);
  out.bank = build_bank(out.model, stats, config.prior);
  out.ensemble = sample_ensemble(out.bank, config.n_samples, config.seed);
  return out;
}

BenchmarkResult run_benchmark(const SynthDataset& dataset, const PipelineConfig& config) {
  const FittedPipeline fitted = fit_pipeline(dataset.train_features, config);
  const Index n = dataset.eval_features.rows();
  std::vector<PixelScores<double>> scores(static_cast<std::size_t>(n));
  std::vector<int> point_pred(static_cast<std::size_t>(n));
  parallel_for(n, config.jobs, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const auto z = dataset.eval_features.row(i).transpose();
      scores[static_cast<std::size_t>(i)] = score_pixel(z, fitted.model, fitted.ensemble);
      point_pred[static_cast<std::size_t>(i)] = predict(z, fitted.model);
    }
  });

  ScoredPixels epistemic, predictive;
  std::vector<int> pred(static_cast<std::size_t>(n));
  std::size_t n_id = 0, point_hits = 0, vote_hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool ood = dataset.eval_is_ood[i] != 0;
    epistemic.push_back(scores[i].epistemic, ood);
    predictive.push_back(scores[i].predictive_entropy, ood);
    pred[i] = scores[i].predicted_class;
    if (!ood) {
      ++n_id;
      point_hits += point_pred[i] == dataset.eval_labels[i];
      vote_hits += pred[i] == dataset.eval_labels[i];
    }
  }
  const IoUResult seg = miou(pred, dataset.eval_labels,
                             static_cast<int>(dataset.train_features.size()), dataset.eval_is_ood);
  BenchmarkResult r;
  r.epistemic = evaluate(epistemic, seg);
  r.predictive = evaluate(predictive, seg);
  r.point_accuracy = n_id ? double(point_hits) / double(n_id) : 0.0;
  r.ensemble_accuracy = n_id ? double(vote_hits) / double(n_id) : 0.0;
  return r;
}

std::string generating_params_json(const SynthConfig& config, const GeneratingParams& params) {
  nlohmann::ordered_json j;
  j["feature_dim"] = config.feature_dim;
  j["n_classes"] = config.n_classes;
  j["samples_per_class"] = config.samples_per_class;
  j["class_separation"] = config.class_separation;
  auto& pairs = j["overlap_pairs"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : config.overlap_pairs) pairs.push_back({a, b});
  j["ood_count"] = config.ood_count;
  j["ood_offset"] = config.ood_offset;
  j["within_class_std"] = params.within_class_std;
  j["seed"] = config.seed;
  auto& means = j["class_means"] = nlohmann::ordered_json::array();
  for (Index c = 0; c < params.class_means.rows(); ++c) {
    std::vector<double> row(params.class_means.cols());
    for (Index k = 0; k < params.class_means.cols(); ++k) row[static_cast<std::size_t>(k)] = params.class_means(c, k);
    means.push_back(row);
  }
  j["ood_center"] = std::vector<double>(params.ood_center.data(),
                                        params.ood_center.data() + params.ood_center.size());
  j["extremity_class"] = params.extremity_class;
  return j.dump(2);
}

}  // namespace hbgmm
