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

#include "hbgmm/commands.hpp"

#include <algorithm>
#include <ostream>

#include "hbgmm/ensemble.hpp"
#include "hbgmm/io.hpp"
#include "hbgmm/metrics.hpp"
#include "hbgmm/synth.hpp"
#include "json.hpp"

namespace hbgmm {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kLabelSuffix = ".labels.fmap";

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Sorted stems of `dir/<stem><suffix>`, skipping names that end in any of `exclude`.
std::vector<std::string> list_stems(const fs::path& dir, std::string_view suffix,
                                    std::initializer_list<std::string_view> exclude = {}) {
  require(!dir.empty(), Errc::kInvalidArgument, "input directory is not configured");
  require(fs::is_directory(dir), Errc::kIo, "input directory " + dir.string() + " does not exist");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!ends_with(name, suffix)) continue;
    if (std::any_of(exclude.begin(), exclude.end(), [&](auto e) { return ends_with(name, e); })) continue;
    stems.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

ojson report_json(const EvalReport& r) { return ojson::parse(to_json(r)); }

void write_json(const fs::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

FeatureMap read_map(const fs::path& path) { return decode_feature_map(read_file(path)); }

float channel_value(const PixelScores<double>& s, std::size_t channel) {
  switch (channel) {
    case 0: return static_cast<float>(s.epistemic);
    case 1: return static_cast<float>(s.predictive_entropy);
    case 2: return static_cast<float>(s.aleatoric);
    case 3: return static_cast<float>(s.mutual_information);
    case 4: return static_cast<float>(s.deterministic_entropy);
    default: return static_cast<float>(-s.max_posterior);
  }
}

}  // namespace

// ================================================================
// project
// ================================================================

int cmd_project(const RunConfig& config, std::ostream& log) {
  config.projection.validate();
  const auto stems = list_stems(config.scan_dir, ".bin");
  const fs::path out_dir = config.output_dir;
  fs::create_directories(out_dir);

  std::vector<ojson> entries(stems.size());
  parallel_for(static_cast<Index>(stems.size()), config.jobs, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const std::string& stem = stems[static_cast<std::size_t>(i)];
      ojson e;
      e["scan"] = (config.scan_dir / (stem + ".bin")).string();
      try {
        const PointCloud cloud = parse_point_cloud(read_file(config.scan_dir / (stem + ".bin")));
        std::optional<LabelSet> labels;
        if (!config.label_dir.empty()) {
          labels = parse_labels(read_file(config.label_dir / (stem + ".label")),
                                static_cast<std::size_t>(cloud.rows()),
                                static_cast<std::uint16_t>(config.class_map.outlier_raw));
        }
        const Projection proj = project_spherical(cloud, labels ? &*labels : nullptr, config.projection);
        const fs::path image_path = out_dir / (stem + ".fmap");
        write_file(image_path, encode_feature_map(proj.image.as_feature_map()));
        e["output"] = image_path.string();
        if (labels) {
          const fs::path label_path = out_dir / (stem + std::string(kLabelSuffix));
          write_file(label_path, encode_feature_map(label_grid(proj.labels, proj.image.height,
                                                               proj.image.width, proj.image.valid)));
          e["labels"] = label_path.string();
        }
        e["points"] = cloud.rows();
        e["dropped_points"] = proj.skipped;
        e["status"] = "ok";
      } catch (const std::exception& ex) {
        e["status"] = "error";
        e["error"] = ex.what();
      }
      entries[static_cast<std::size_t>(i)] = std::move(e);
    }
  });

  std::size_t failed = 0;
  ojson manifest;
  manifest["scans"] = ojson::array();
  for (auto& e : entries) {
    if (e["status"] != "ok") {
      ++failed;
      log << "project: " << e["scan"].get<std::string>() << ": " << e["error"].get<std::string>() << "\n";
    }
    manifest["scans"].push_back(std::move(e));
  }
  manifest["failed"] = failed;
  write_json(out_dir / "manifest.json", manifest);
  log << "project: " << stems.size() - failed << "/" << stems.size() << " scans written\n";
  return failed ? kExitPartial : kExitOk;
}

// ================================================================
// fit
// ================================================================

int cmd_fit(const RunConfig& config, std::ostream& log) {
  const auto stems = list_stems(config.feature_dir, ".fmap", {kLabelSuffix});
  require(!stems.empty(), Errc::kInvalidArgument,
          "no feature files in " + config.feature_dir.string());
  const ClassMap& cmap = config.class_map;
  const int c_count = cmap.num_classes();

  Index d = config.feature_dim;
  std::vector<std::vector<float>> pooled(static_cast<std::size_t>(c_count));
  std::size_t excluded_outlier = 0;
  std::size_t excluded_other = 0;
  for (const auto& stem : stems) {
    const FeatureMap features = read_map(config.feature_dir / (stem + ".fmap"));
    const fs::path label_path = config.label_grids() / (stem + std::string(kLabelSuffix));
    require(fs::exists(label_path), Errc::kIo, "missing label grid " + label_path.string());
    const FeatureMap grid = read_map(label_path);
    require_shape(grid.height == features.height && grid.width == features.width,
                  stem + ": label grid and feature map differ in size");
    if (d == 0) d = features.dim();
    require_shape(features.dim() == d, stem + ": feature dimension " +
                                           std::to_string(features.dim()) + " != " + std::to_string(d));
    const auto labels = grid_labels(grid);
    for (Index p = 0; p < features.pixels(); ++p) {
      if (!features.is_valid(p) || !grid.is_valid(p)) continue;
      const int raw = labels[static_cast<std::size_t>(p)];
      if (cmap.is_outlier(raw)) {
        ++excluded_outlier;
        continue;
      }
      const auto train = cmap.train_id(raw);
      if (!train) {
        ++excluded_other;
        continue;
      }
      auto& dst = pooled[static_cast<std::size_t>(*train)];
      const auto row = features.data.row(p);
      dst.insert(dst.end(), row.data(), row.data() + d);
    }
  }

  for (int c = 0; c < c_count; ++c) {
    const auto n = static_cast<Index>(pooled[static_cast<std::size_t>(c)].size()) / d;
    require(n >= config.components, Errc::kInsufficientData,
            "class " + std::to_string(c) + " has " + std::to_string(n) +
                " training samples, fewer than K = " + std::to_string(config.components));
  }

  std::vector<EMResult<double>> fits(static_cast<std::size_t>(c_count));
  parallel_for(c_count, config.jobs, [&](Index begin, Index end) {
    for (Index c = begin; c < end; ++c) {
      const auto& buf = pooled[static_cast<std::size_t>(c)];
      const Eigen::Map<const RowMatrixX<float>> x(buf.data(), static_cast<Index>(buf.size()) / d, d);
      EMConfig em = config.em;
      em.seed = derive_seed(config.seed, static_cast<std::uint64_t>(c));
      fits[static_cast<std::size_t>(c)] = em_fit<double>(x, config.components, em, static_cast<int>(c));
    }
  });

  GMMClassifier<double> model;
  std::vector<SufficientStats<double>> stats;
  ojson classes = ojson::array();
  for (int c = 0; c < c_count; ++c) {
    const auto& f = fits[static_cast<std::size_t>(c)];
    model.classes.push_back(f.gmm);
    stats.push_back(f.stats);
    ojson e;
    e["class"] = c;
    e["samples"] = pooled[static_cast<std::size_t>(c)].size() / static_cast<std::size_t>(d);
    e["log_likelihood"] = f.log_likelihood.back();
    e["iterations"] = f.iterations;
    e["converged"] = f.converged;
    e["reseeds"] = f.reseeds;
    classes.push_back(e);
  }
  const auto bank = build_bank(model, stats, config.prior);

  const fs::path out_dir = config.output_dir;
  write_file(out_dir / "model.gmmc", encode_classifier(model));
  write_file(out_dir / "bank.nigb", encode_bank(bank));
  ojson report;
  report["C"] = c_count;
  report["K"] = config.components;
  report["D"] = d;
  report["seed"] = config.seed;
  report["excluded_outlier_pixels"] = excluded_outlier;
  report["excluded_unmapped_pixels"] = excluded_other;
  report["classes"] = classes;
  write_json(out_dir / "fit_report.json", report);
  log << "fit: " << c_count << " classes, K = " << config.components << ", D = " << d << "\n";
  return kExitOk;
}

// ================================================================
// score
// ================================================================

int cmd_score(const RunConfig& config, std::ostream& log) {
  const auto model = decode_classifier(read_file(config.models() / "model.gmmc"));
  const auto bank = decode_bank(read_file(config.models() / "bank.nigb"));
  require_shape(bank.num_classes() == model.num_classes() && bank.components() == model.components() &&
                    bank.feature_dim() == model.feature_dim(),
                "model and bank shapes differ");
  const auto ensemble = sample_ensemble(bank, config.n_samples, config.seed);
  const auto stems = list_stems(config.feature_dir, ".fmap", {kLabelSuffix});
  const fs::path out_dir = config.scores();
  fs::create_directories(out_dir);

  struct FileScores {
    Index height = 0, width = 0;
    std::vector<float> epistemic;
    std::vector<std::uint8_t> valid;
  };
  std::vector<FileScores> kept;
  ojson files = ojson::array();
  for (const auto& stem : stems) {
    const FeatureMap features = read_map(config.feature_dir / (stem + ".fmap"));
    const auto scores = score_feature_map(features, model, ensemble, config.jobs);
    const auto n = static_cast<std::size_t>(features.pixels());
    for (std::size_t ch = 0; ch < kScoreChannels.size(); ++ch) {
      std::vector<float> values(n, kEmptyPixel);
      for (std::size_t p = 0; p < n; ++p) {
        if (scores.valid[p]) values[p] = channel_value(scores.scores[p], ch);
      }
      write_file(out_dir / (stem + "." + std::string(kScoreChannels[ch]) + ".fmap"),
                 encode_feature_map(scalar_grid(values, features.height, features.width, scores.valid)));
      if (ch == 0) kept.push_back({features.height, features.width, std::move(values), scores.valid});
    }
    std::vector<int> pred(n, -1);
    for (std::size_t p = 0; p < n; ++p) {
      if (scores.valid[p]) pred[p] = scores.scores[p].predicted_class;
    }
    write_file(out_dir / (stem + ".pred.fmap"),
               encode_feature_map(label_grid(pred, features.height, features.width, scores.valid)));
    ojson e;
    e["stem"] = stem;
    e["valid_pixels"] = scores.valid_count();
    if (scores.valid_count() == 0) {
      e["warning"] = "no valid pixels";
      log << "score: " << stem << ": no valid pixels\n";
    }
    files.push_back(e);
  }

  // OOD masks: nearest-rank threshold over the epistemic channel.
  auto gather = [](const FileScores& f, std::vector<double>& dst) {
    for (std::size_t p = 0; p < f.valid.size(); ++p) {
      if (f.valid[p]) dst.push_back(f.epistemic[p]);
    }
  };
  auto mask_for = [](const FileScores& f, double threshold) {
    std::vector<int> mask(f.valid.size(), 0);
    std::size_t flagged = 0;
    for (std::size_t p = 0; p < f.valid.size(); ++p) {
      if (f.valid[p] && double(f.epistemic[p]) > threshold) {
        mask[p] = 1;
        ++flagged;
      }
    }
    return std::pair{mask, flagged};
  };
  ojson report;
  report["n_samples"] = config.n_samples;
  report["seed"] = config.seed;
  report["top_fraction"] = config.top_fraction;
  report["threshold_scope"] = config.per_scan_threshold ? "per_scan" : "global";
  std::size_t total_flagged = 0, total_valid = 0;
  std::optional<double> global_threshold;
  if (!config.per_scan_threshold) {
    std::vector<double> all;
    for (const auto& f : kept) gather(f, all);
    total_valid = all.size();
    if (!all.empty()) global_threshold = percentile_threshold(all, config.top_fraction).threshold;
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& f = kept[i];
    std::optional<double> threshold = global_threshold;
    if (config.per_scan_threshold) {
      std::vector<double> local;
      gather(f, local);
      total_valid += local.size();
      if (!local.empty()) threshold = percentile_threshold(local, config.top_fraction).threshold;
      files[i]["threshold"] = threshold ? ojson(*threshold) : ojson(nullptr);
    }
    auto [mask, flagged] = threshold ? mask_for(f, *threshold)
                                     : std::pair{std::vector<int>(f.valid.size(), 0), std::size_t{0}};
    files[i]["flagged"] = flagged;
    total_flagged += flagged;
    write_file(out_dir / (stems[i] + ".ood.fmap"),
               encode_feature_map(label_grid(mask, f.height, f.width, f.valid)));
  }
  report["threshold"] = global_threshold ? ojson(*global_threshold) : ojson(nullptr);
  report["valid_pixels"] = total_valid;
  report["flagged"] = total_flagged;
  report["files"] = files;
  write_json(config.output_dir / "score_report.json", report);
  log << "score: " << stems.size() << " files, " << total_flagged << "/" << total_valid
      << " pixels flagged OOD\n";
  return kExitOk;
}

// ================================================================
// eval
// ================================================================

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const fs::path score_dir = config.scores();
  const auto stems = list_stems(score_dir, ".pred.fmap");
  require(!stems.empty(), Errc::kInvalidArgument, "no prediction grids in " + score_dir.string());
  const ClassMap& cmap = config.class_map;

  std::vector<ScoredPixels> channels(kScoreChannels.size());
  std::vector<int> pred_all, gt_all;
  for (const auto& stem : stems) {
    const fs::path gt_path = config.label_grids() / (stem + std::string(kLabelSuffix));
    require(fs::exists(gt_path), Errc::kIo, "missing ground truth " + gt_path.string());
    const FeatureMap gt = read_map(gt_path);
    const FeatureMap pred = read_map(score_dir / (stem + ".pred.fmap"));
    require_shape(gt.height == pred.height && gt.width == pred.width,
                  stem + ": ground truth and predictions differ in size");
    std::vector<FeatureMap> maps;
    for (auto ch : kScoreChannels) {
      maps.push_back(read_map(score_dir / (stem + "." + std::string(ch) + ".fmap")));
      require_shape(maps.back().pixels() == gt.pixels(), stem + ": score grid size mismatch");
    }
    const auto gt_labels = grid_labels(gt);
    const auto pred_labels = grid_labels(pred);
    for (Index p = 0; p < gt.pixels(); ++p) {
      if (!gt.is_valid(p) || !pred.is_valid(p)) continue;
      const int raw = gt_labels[static_cast<std::size_t>(p)];
      const bool ood = cmap.is_outlier(raw);
      const auto train = cmap.train_id(raw);
      if (!ood && !train) continue;
      for (std::size_t ch = 0; ch < maps.size(); ++ch) {
        channels[ch].push_back(maps[ch].data(p, 0), ood);
      }
      if (train) {
        gt_all.push_back(*train);
        pred_all.push_back(pred_labels[static_cast<std::size_t>(p)]);
      }
    }
  }

  const IoUResult seg = miou(pred_all, gt_all, cmap.num_classes());
  ojson report;
  for (std::size_t ch = 0; ch < kScoreChannels.size(); ++ch) {
    const EvalReport r = evaluate(channels[ch], seg);
    const std::string name(kScoreChannels[ch]);
    report[name] = report_json(r);
    write_text(config.output_dir / ("eval_" + name + ".csv"), to_csv(r));
  }
  write_json(config.output_dir / "eval_report.json", report);
  out << report.dump(2) << "\n";
  log << "eval: " << stems.size() << " files\n";
  return kExitOk;
}

// ================================================================
// synth
// ================================================================

int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const SynthDataset ds = generate(config.synth);
  const fs::path dir = config.output_dir / "synth";
  for (std::size_t c = 0; c < ds.train_features.size(); ++c) {
    const auto& x = ds.train_features[c];
    FeatureMap fm(1, x.rows(), x.cols());
    fm.data = x.cast<float>();
    std::fill(fm.valid.begin(), fm.valid.end(), 1);
    write_file(dir / ("train_" + std::to_string(c) + ".fmap"), encode_feature_map(fm));
  }
  FeatureMap eval(1, ds.eval_features.rows(), ds.eval_features.cols());
  eval.data = ds.eval_features.cast<float>();
  std::fill(eval.valid.begin(), eval.valid.end(), 1);
  write_file(dir / "eval.fmap", encode_feature_map(eval));
  write_file(dir / "eval.labels.fmap",
             encode_feature_map(label_grid(ds.eval_labels, 1, ds.eval_features.rows())));
  write_text(dir / "generating_params.json", generating_params_json(config.synth, ds.generating) + "\n");

  PipelineConfig pipeline;
  pipeline.components = config.components;
  pipeline.prior = config.prior;
  pipeline.n_samples = config.n_samples;
  pipeline.seed = config.seed;
  pipeline.em = config.em;
  pipeline.jobs = config.jobs;
  const BenchmarkResult r = run_benchmark(ds, pipeline);

  ojson report;
  report["epistemic"] = report_json(r.epistemic);
  report["predictive_entropy"] = report_json(r.predictive);
  report["delta"] = {{"auroc", r.epistemic.auroc - r.predictive.auroc},
                     {"auprc", r.epistemic.auprc - r.predictive.auprc},
                     {"fpr95", r.epistemic.fpr95 - r.predictive.fpr95}};
  report["point_accuracy"] = r.point_accuracy;
  report["ensemble_accuracy"] = r.ensemble_accuracy;
  write_json(config.output_dir / "synth_report.json", report);
  out << report.dump(2) << "\n";
  log << "synth: epistemic AUROC " << r.epistemic.auroc << " vs predictive " << r.predictive.auroc << "\n";
  return kExitOk;
}

}  // namespace hbgmm
