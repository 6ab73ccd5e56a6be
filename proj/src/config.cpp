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

#include "hbgmm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <sstream>

#include "hbgmm/io.hpp"

namespace hbgmm {
namespace pt = boost::property_tree;

ClassMap ClassMap::semantic_kitti() {
  ClassMap m;
  m.outlier_raw = 1;
  m.ignore_raw = {0, 52, 99};
  m.raw_to_train = {
      {10, 0},  {11, 1},  {13, 4},  {15, 2},  {16, 4},  {18, 3},  {20, 4},  {30, 5},
      {31, 6},  {32, 7},  {40, 8},  {44, 9},  {48, 10}, {49, 11}, {50, 12}, {51, 13},
      {60, 8},  {70, 14}, {71, 15}, {72, 16}, {80, 17}, {81, 18}, {252, 0}, {253, 6},
      {254, 5}, {255, 7}, {256, 4}, {257, 4}, {258, 3}, {259, 4},
  };
  return m;
}

int ClassMap::num_classes() const {
  int n = 0;
  for (const auto& [raw, train] : raw_to_train) n = std::max(n, train + 1);
  return n;
}

std::optional<int> ClassMap::train_id(int raw) const {
  const auto it = raw_to_train.find(raw);
  if (it == raw_to_train.end()) return std::nullopt;
  return it->second;
}

void ClassMap::validate() const {
  require(!raw_to_train.empty(), Errc::kInvalidArgument, "class map is empty");
  std::set<int> seen;
  for (const auto& [raw, train] : raw_to_train) {
    require(train >= 0, Errc::kInvalidArgument, "class map has a negative train id");
    require(raw != outlier_raw && !ignore_raw.contains(raw), Errc::kInvalidArgument,
            "raw label " + std::to_string(raw) + " is both a train class and outlier/ignore");
    seen.insert(train);
  }
  // Every train id below num_classes must be reachable or the model has an unfittable class.
  require(static_cast<int>(seen.size()) == num_classes(), Errc::kInvalidArgument,
          "class map train ids are not contiguous from 0");
}

namespace {

template <class V>
V get(const pt::ptree& tree, const std::string& key, V fallback) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  std::istringstream in(*node);
  V v{};
  in >> v;
  require(!in.fail() && (in >> std::ws).eof(), Errc::kInvalidArgument,
          "config key '" + key + "' has invalid value '" + *node + "'");
  return v;
}

bool get_bool(const pt::ptree& tree, const std::string& key, bool fallback) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  if (*node == "true" || *node == "1" || *node == "yes") return true;
  if (*node == "false" || *node == "0" || *node == "no") return false;
  throw Error(Errc::kInvalidArgument, "config key '" + key + "' is not a boolean");
}

std::vector<int> int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  int v = 0;
  while (in >> v) out.push_back(v);
  require(in.eof(), Errc::kInvalidArgument, "config key '" + key + "' is not an integer list");
  return out;
}

std::vector<std::pair<int, int>> pair_list(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    const auto dash = tok.find('-');
    require(dash != std::string::npos && dash > 0, Errc::kInvalidArgument,
            "overlap pair '" + tok + "' is not of the form a-b");
    try {
      out.emplace_back(std::stoi(tok.substr(0, dash)), std::stoi(tok.substr(dash + 1)));
    } catch (const std::exception&) {
      throw Error(Errc::kInvalidArgument, "overlap pair '" + tok + "' is not of the form a-b");
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& ini_text,
                       const std::map<std::string, std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::kInvalidArgument, std::string("config: ") + e.what());
  }
  for (const auto& [key, value] : overrides) {
    require(key.find('.') != std::string::npos, Errc::kInvalidArgument,
            "override '" + key + "' must be section.key");
    tree.put(pt::ptree::path_type(key, '.'), value);
  }

  RunConfig c;
  c.scan_dir = get<std::string>(tree, "paths.scan_dir", "");
  c.label_dir = get<std::string>(tree, "paths.label_dir", "");
  c.feature_dir = get<std::string>(tree, "paths.feature_dir", "");
  c.label_grid_dir = get<std::string>(tree, "paths.label_grid_dir", "");
  c.model_dir = get<std::string>(tree, "paths.model_dir", "");
  c.score_dir = get<std::string>(tree, "paths.score_dir", "");
  c.output_dir = get<std::string>(tree, "paths.output_dir", "out");

  c.projection.height = get<Index>(tree, "projection.height", c.projection.height);
  c.projection.width = get<Index>(tree, "projection.width", c.projection.width);
  c.projection.fov_up_deg = get<double>(tree, "projection.fov_up", c.projection.fov_up_deg);
  c.projection.fov_down_deg = get<double>(tree, "projection.fov_down", c.projection.fov_down_deg);
  c.projection.validate();

  c.components = get<Index>(tree, "model.K", c.components);
  c.feature_dim = get<Index>(tree, "model.D", c.feature_dim);
  require(c.components >= 1 && c.feature_dim >= 0, Errc::kInvalidArgument,
          "model.K must be >= 1 and model.D >= 0");

  c.prior.mu = get<double>(tree, "prior.mu0", c.prior.mu);
  c.prior.kappa = get<double>(tree, "prior.kappa0", c.prior.kappa);
  c.prior.alpha = get<double>(tree, "prior.alpha0", c.prior.alpha);
  c.prior.beta = get<double>(tree, "prior.beta0", c.prior.beta);
  require(c.prior.valid(), Errc::kInvalidArgument, "prior needs kappa0, alpha0, beta0 > 0");

  c.em.max_iters = get<int>(tree, "em.max_iters", c.em.max_iters);
  c.em.tol = get<double>(tree, "em.tol", c.em.tol);
  c.em.variance_floor = get<double>(tree, "em.variance_floor", c.em.variance_floor);
  require(c.em.max_iters >= 0 && c.em.tol >= 0 && c.em.variance_floor > 0,
          Errc::kInvalidArgument, "invalid EM settings");

  c.n_samples = get<Index>(tree, "ensemble.n_samples", c.n_samples);
  c.seed = get<std::uint64_t>(tree, "ensemble.seed", c.seed);
  require(c.n_samples >= 1, Errc::kInvalidArgument, "ensemble.n_samples must be >= 1");

  c.top_fraction = get<double>(tree, "threshold.top_fraction", c.top_fraction);
  c.per_scan_threshold = get_bool(tree, "threshold.per_scan", c.per_scan_threshold);
  require(c.top_fraction > 0 && c.top_fraction < 1, Errc::kInvalidArgument,
          "threshold.top_fraction must lie in (0, 1)");

  c.jobs = get<int>(tree, "run.jobs", c.jobs);
  require(c.jobs >= 1, Errc::kInvalidArgument, "jobs must be >= 1");

  if (const auto section = tree.get_child_optional("class_map")) {
    ClassMap m;
    bool any_mapping = false;
    for (const auto& [key, node] : *section) {
      const std::string value = node.get_value<std::string>();
      if (key == "outlier") {
        m.outlier_raw = get<int>(*section, key, 1);
      } else if (key == "ignore") {
        const auto ids = int_list(value, "class_map.ignore");
        m.ignore_raw = {ids.begin(), ids.end()};
      } else {
        int raw = 0;
        try {
          std::size_t used = 0;
          raw = std::stoi(key, &used);
          require(used == key.size(), Errc::kInvalidArgument, "");
        } catch (const std::exception&) {
          throw Error(Errc::kInvalidArgument, "class_map key '" + key + "' is not a raw label id");
        }
        m.raw_to_train[raw] = get<int>(*section, key, 0);
        any_mapping = true;
      }
    }
    if (!any_mapping) {
      const auto defaults = ClassMap::semantic_kitti();
      m.raw_to_train = defaults.raw_to_train;
      if (!section->get_optional<std::string>("ignore")) m.ignore_raw = defaults.ignore_raw;
    }
    c.class_map = m;
  }
  c.class_map.validate();

  auto& s = c.synth;
  s.feature_dim = get<Index>(tree, "synth.feature_dim", s.feature_dim);
  s.n_classes = get<int>(tree, "synth.n_classes", s.n_classes);
  s.samples_per_class = get<Index>(tree, "synth.samples_per_class", s.samples_per_class);
  s.class_separation = get<double>(tree, "synth.class_separation", s.class_separation);
  if (const auto pairs = tree.get_optional<std::string>("synth.overlap_pairs")) {
    s.overlap_pairs = pair_list(*pairs);
  }
  s.ood_count = get<Index>(tree, "synth.ood_count", s.ood_count);
  s.ood_offset = get<double>(tree, "synth.ood_offset", s.ood_offset);
  s.within_class_std = get<double>(tree, "synth.within_class_std", s.within_class_std);
  s.seed = get<std::uint64_t>(tree, "synth.seed", s.seed);
  return c;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& overrides) {
  std::string text;
  if (!path.empty()) text = read_text(path);
  return parse_config(text, overrides);
}

}  // namespace hbgmm
