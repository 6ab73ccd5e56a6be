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

// Class-conditional diagonal-covariance Gaussian mixtures: density,
// class posterior under a uniform class prior, and soft EM fitting.

#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hbgmm/common.hpp"

namespace hbgmm {

inline constexpr double kVarianceFloor = 1e-6;

/// One class's mixture. Rows of `means`/`variances` are components.
template <class T>
struct ClassGMM {
  int class_id = 0;
  VectorX<T> weights;    // K
  MatrixX<T> means;      // K x D
  MatrixX<T> variances;  // K x D

  Index components() const { return weights.size(); }
  Index dim() const { return means.cols(); }
};

template <class T>
struct GMMClassifier {
  std::vector<ClassGMM<T>> classes;

  Index num_classes() const { return static_cast<Index>(classes.size()); }
  Index components() const { return classes.empty() ? 0 : classes.front().components(); }
  Index feature_dim() const { return classes.empty() ? 0 : classes.front().dim(); }

  /// Throws on mismatched K/D across classes or malformed member shapes.
  void validate() const {
    require_shape(!classes.empty(), "classifier has no classes");
    const Index k = components();
    const Index d = feature_dim();
    for (const auto& g : classes) {
      require_shape(g.components() == k && g.dim() == d && g.means.rows() == k &&
                        g.variances.rows() == k && g.variances.cols() == d,
                    "class " + std::to_string(g.class_id) + " has inconsistent K/D");
    }
  }
};

/// Responsibility-weighted moments per (component, dimension).
template <class T>
struct SufficientStats {
  VectorX<T> count;    // K effective counts
  MatrixX<T> mean;     // K x D weighted means
  MatrixX<T> scatter;  // K x D weighted squared deviations about `mean`
};

namespace detail {

/// log pi_k + log N(z | mu_k, diag var_k) for every component.
template <class T, class Derived>
VectorX<T> component_log_terms(const Eigen::MatrixBase<Derived>& z, const ClassGMM<T>& gmm) {
  const Index k_count = gmm.components();
  const T log_2pi = std::log(T(2) * std::numbers::pi_v<T>);
  const auto x = z.transpose().template cast<T>();
  VectorX<T> terms(k_count);
  for (Index k = 0; k < k_count; ++k) {
    const auto var = gmm.variances.row(k).array();
    const T quad = ((x.array() - gmm.means.row(k).array()).square() / var).sum();
    terms(k) = std::log(gmm.weights(k)) -
               T(0.5) * (var.log().sum() + T(gmm.dim()) * log_2pi + quad);
  }
  return terms;
}

}  // namespace detail

/// log p(z | class) for a diagonal mixture, via log-sum-exp.
template <class T, class Derived>
T log_density(const Eigen::MatrixBase<Derived>& z, const ClassGMM<T>& gmm) {
  require_shape(z.size() == gmm.dim(), "feature length " + std::to_string(z.size()) +
                                           " != model dimension " + std::to_string(gmm.dim()));
  return log_sum_exp(detail::component_log_terms(z, gmm));
}

/// C-vector of log p(z | c).
template <class T, class Derived>
VectorX<T> class_log_densities(const Eigen::MatrixBase<Derived>& z, const GMMClassifier<T>& model) {
  VectorX<T> out(model.num_classes());
  for (Index c = 0; c < model.num_classes(); ++c) {
    out(c) = log_density(z, model.classes[static_cast<std::size_t>(c)]);
  }
  return out;
}

/// p(c | z) with a uniform class prior.
template <class T, class Derived>
VectorX<T> class_posterior(const Eigen::MatrixBase<Derived>& z, const GMMClassifier<T>& model) {
  require_shape(model.num_classes() >= 1, "classifier has no classes");
  return softmax(class_log_densities(z, model));
}

/// Highest-density class; ties go to the lowest class index.
template <class T, class Derived>
int predict(const Eigen::MatrixBase<Derived>& z, const GMMClassifier<T>& model) {
  require_shape(model.num_classes() >= 1, "classifier has no classes");
  return static_cast<int>(argmax_first(class_log_densities(z, model)));
}

// ================================================================
// EM
// ================================================================

struct EMConfig {
  int max_iters = 100;
  double tol = 1e-5;  // relative log-likelihood change
  std::uint64_t seed = 0;
  double variance_floor = kVarianceFloor;
};

template <class T>
struct EMResult {
  ClassGMM<T> gmm;
  SufficientStats<T> stats;            // from the E-step under `gmm`
  std::vector<T> log_likelihood;       // one entry per E-step
  std::vector<int> reseed_iterations;  // M-steps that re-seeded a component
  int iterations = 0;                  // M-steps performed
  int reseeds = 0;
  bool converged = false;
};

namespace detail {

/// N x K matrix of log pi_k + log N(x_n | k).
template <class T>
MatrixX<T> log_joint(const MatrixX<T>& x, const ClassGMM<T>& gmm) {
  const Index n = x.rows();
  const Index d = x.cols();
  const T log_2pi = std::log(T(2) * std::numbers::pi_v<T>);
  MatrixX<T> out(n, gmm.components());
  for (Index k = 0; k < gmm.components(); ++k) {
    const auto inv_var = gmm.variances.row(k).array().inverse();
    const T constant = std::log(gmm.weights(k)) -
                       T(0.5) * (gmm.variances.row(k).array().log().sum() + T(d) * log_2pi);
    out.col(k) = (constant - T(0.5) * ((x.rowwise() - gmm.means.row(k)).array().square().rowwise() *
                                       inv_var)
                                          .rowwise()
                                          .sum())
                     .matrix();
  }
  return out;
}

template <class T>
SufficientStats<T> weighted_moments(const MatrixX<T>& x, const MatrixX<T>& resp) {
  const Index k_count = resp.cols();
  SufficientStats<T> s;
  s.count = resp.colwise().sum().transpose();
  s.mean.resize(k_count, x.cols());
  s.scatter.resize(k_count, x.cols());
  for (Index k = 0; k < k_count; ++k) {
    if (s.count(k) > T(0)) {
      s.mean.row(k) = (resp.col(k).transpose() * x) / s.count(k);
    } else {
      s.mean.row(k).setZero();
    }
    s.scatter.row(k) =
        resp.col(k).transpose() * (x.rowwise() - s.mean.row(k)).array().square().matrix();
  }
  return s;
}

/// k-means++ style seeding of component means.
template <class T>
MatrixX<T> seed_means(const MatrixX<T>& x, Index k_count, std::mt19937_64& rng) {
  const Index n = x.rows();
  MatrixX<T> centers(k_count, x.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  VectorX<T> nearest = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index k = 1; k < k_count; ++k) {
    Index chosen = 0;
    const T total = nearest.sum();
    if (total > T(0)) {
      std::discrete_distribution<Index> weighted(nearest.data(), nearest.data() + n);
      chosen = weighted(rng);
    } else {
      chosen = pick(rng);
    }
    centers.row(k) = x.row(chosen);
    nearest = nearest.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace detail

/// Fits a K-component diagonal GMM to the rows of `features` with soft EM.
template <class T, class Derived>
EMResult<T> em_fit(const Eigen::MatrixBase<Derived>& features, Index k_count,
                   const EMConfig& config = {}, int class_id = 0) {
  const MatrixX<T> x = features.template cast<T>();
  const Index n = x.rows();
  const Index d = x.cols();
  require(k_count >= 1, Errc::kInvalidArgument, "component count must be >= 1");
  require(n >= k_count, Errc::kInsufficientData,
          "class " + std::to_string(class_id) + " has " + std::to_string(n) +
              " samples, fewer than K = " + std::to_string(k_count));
  require(d >= 1, Errc::kShape, "features have zero dimensions");
  require(x.allFinite(), Errc::kInvalidArgument, "features contain non-finite values");

  const T floor = static_cast<T>(config.variance_floor);
  std::mt19937_64 rng(config.seed);

  const VectorX<T> global_mean = x.colwise().mean().transpose();
  const VectorX<T> global_var =
      ((x.rowwise() - global_mean.transpose()).array().square().colwise().mean())
          .matrix()
          .transpose()
          .cwiseMax(floor);

  EMResult<T> result;
  ClassGMM<T>& gmm = result.gmm;
  gmm.class_id = class_id;
  gmm.weights = VectorX<T>::Constant(k_count, T(1) / T(k_count));
  gmm.means = detail::seed_means(x, k_count, rng);
  gmm.variances = global_var.transpose().replicate(k_count, 1);

  const T min_count = T(1e-6);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (int iter = 0;; ++iter) {
    // E-step
    const MatrixX<T> joint = detail::log_joint(x, gmm);
    VectorX<T> row_lse(n);
    for (Index i = 0; i < n; ++i) row_lse(i) = log_sum_exp(joint.row(i));
    const MatrixX<T> resp = (joint.colwise() - row_lse).array().exp().matrix();
    const T ll = row_lse.sum();
    result.log_likelihood.push_back(ll);
    result.stats = detail::weighted_moments(x, resp);

    if (iter > 0) {
      const T prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if (std::abs(ll - prev) <= T(config.tol) * std::abs(prev)) {
        result.converged = true;
        break;
      }
    }
    if (iter >= config.max_iters) break;

    // M-step
    const auto& s = result.stats;
    bool reseeded = false;
    for (Index k = 0; k < k_count; ++k) {
      if (s.count(k) < min_count) {
        gmm.means.row(k) = x.row(pick(rng));
        gmm.variances.row(k) = global_var.transpose();
        gmm.weights(k) = T(1) / T(k_count);
        ++result.reseeds;
        reseeded = true;
        continue;
      }
      gmm.weights(k) = s.count(k) / T(n);
      gmm.means.row(k) = s.mean.row(k);
      gmm.variances.row(k) = (s.scatter.row(k) / s.count(k)).cwiseMax(floor);
    }
    gmm.weights /= gmm.weights.sum();
    if (reseeded) result.reseed_iterations.push_back(iter);
    ++result.iterations;
  }
  return result;
}

}  // namespace hbgmm
