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

// hbgmm <project|fit|score|eval|synth> [--config f.ini] [--seed n] [--out dir]
//       [--jobs n] [--section.key value ...]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "hbgmm/commands.hpp"

namespace {

/// Collects `--section.key value` / `--section.key=value` pairs left over by CLI11.
bool collect_overrides(const std::vector<std::string>& extras,
                       std::map<std::string, std::string>& overrides) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos) {
      std::cerr << "unrecognized argument: " << arg << "\n";
      return false;
    }
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      overrides[body.substr(0, eq)] = body.substr(eq + 1);
    } else if (i + 1 < extras.size()) {
      overrides[body] = extras[++i];
    } else {
      std::cerr << "missing value for " << arg << "\n";
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical-Bayesian GMM uncertainty and OOD detection for range-view LiDAR"};
  app.require_subcommand(1);
  app.allow_extras();
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
  app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Ensemble (and synth) seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string chosen;
  for (const char* name : {"project", "fit", "score", "eval", "synth"}) {
    app.add_subcommand(name)->allow_extras()->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : hbgmm::kExitConfig;
  }

  std::map<std::string, std::string> overrides;
  std::vector<std::string> extras = app.remaining(true);
  if (!collect_overrides(extras, overrides)) return hbgmm::kExitConfig;
  if (seed) {
    overrides["ensemble.seed"] = std::to_string(*seed);
    if (chosen == "synth") overrides["synth.seed"] = std::to_string(*seed);
  }
  if (out_dir) overrides["paths.output_dir"] = *out_dir;
  if (jobs) overrides["run.jobs"] = std::to_string(*jobs);

  try {
    const hbgmm::RunConfig config = hbgmm::load_config(config_path, overrides);
    if (chosen == "project") return hbgmm::cmd_project(config, std::cerr);
    if (chosen == "fit") return hbgmm::cmd_fit(config, std::cerr);
    if (chosen == "score") return hbgmm::cmd_score(config, std::cerr);
    if (chosen == "eval") return hbgmm::cmd_eval(config, std::cout, std::cerr);
    return hbgmm::cmd_synth(config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hbgmm::kExitConfig;
  }
}
