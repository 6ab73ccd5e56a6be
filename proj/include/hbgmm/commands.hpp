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

// The CLI subcommands as library calls. Each returns a process exit code:
// 0 success, 1 partial per-file failure, 2 configuration/precondition error.
// Output layout under output_dir:
//
//   project  <stem>.fmap (D=5), <stem>.labels.fmap, manifest.json
//   fit      model.gmmc, bank.nigb, fit_report.json
//   score    scores/<stem>.<channel>.fmap, scores/<stem>.pred.fmap,
//            scores/<stem>.ood.fmap, score_report.json
//   eval     eval_report.json, eval_<channel>.csv
//   synth    synth/{train_<c>,eval,eval.labels}.fmap,
//            synth/generating_params.json, synth_report.json

#pragma once

#include <array>
#include <iosfwd>
#include <string_view>

#include "hbgmm/config.hpp"

namespace hbgmm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitConfig = 2;

/// Score channels written by `score` and evaluated by `eval`; higher = more OOD.
inline constexpr std::array<std::string_view, 6> kScoreChannels = {
    "epistemic",          "predictive_entropy",    "aleatoric",
    "mutual_information", "deterministic_entropy", "neg_max_posterior"};

int cmd_project(const RunConfig& config, std::ostream& log);
int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_score(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace hbgmm
