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

// Normal-Inverse-Gamma layer over every (class, component, dimension) of a
// diagonal GMM classifier. Mixture weights carry no prior and are copied
// through from EM unchanged.

#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hbgmm/common.hpp"
#include "hbgmm/gmm.hpp"

namespace hbgmm {

/// NIG(mu, kappa, alpha, beta):
///   sigma^2 ~ Inv-Gamma(alpha, beta), density ∝ x^(-alpha-1) exp(-beta / x)
///   mu | sigma^2 ~ N(mu, sigma^2 / kappa)
template <class T>
struct NIGParams {
  T mu = 0;
  T kappa = 1;
  T alpha = 2;
  T beta = 1;

  bool valid() const {
    return std::isfinite(mu) && kappa > T(0) && alpha > T(0) && beta > T(0) &&
           std::isfinite(kappa) && std::isfinite(alpha) && std::isfinite(beta);
  }
  bool operator==(const NIGParams&) const = default;
};

/// Responsibility-weighted statistics of one cell.
template <class T>
struct CellStats {
  T n = 0;
  T xbar = 0;
  T scatter = 0;
};

template <class T>
NIGParams<T> update_posterior(const NIGParams<T>& prior, const CellStats<T>& stats) {
  require(prior.valid(), Errc::kInvalidArgument, "invalid NIG prior");
  require(stats.n >= T(0) && stats.scatter >= T(0) && std::isfinite(stats.n) &&
              std::isfinite(stats.scatter),
          Errc::kInvalidStatistics, "negative or non-finite sufficient statistics");
  if (stats.n == T(0)) return prior;
  NIGParams<T> post;
  post.kappa = prior.kappa + stats.n;
  post.mu = (prior.kappa * prior.mu + stats.n * stats.xbar) / post.kappa;
  post.alpha = prior.alpha + stats.n / T(2);
  const T shift = stats.xbar - prior.mu;
  post.beta = prior.beta + stats.scatter / T(2) +
              prior.kappa * stats.n * shift * shift / (T(2) * post.kappa);
  return post;
}

/// Per-cell NIG posteriors, stored per class as K x D matrices.
template <class T>
struct NIGPosteriorBank {
  std::vector<MatrixX<T>> mu;
  std::vector<MatrixX<T>> kappa;
  std::vector<MatrixX<T>> alpha;
  std::vector<MatrixX<T>> beta;
  std::vector<VectorX<T>> weights;  // frozen EM weights, K per class

  Index num_classes() const { return static_cast<Index>(mu.size()); }
  Index components() const { return mu.empty() ? 0 : mu.front().rows(); }
  Index feature_dim() const { return mu.empty() ? 0 : mu.front().cols(); }

  NIGParams<T> cell(Index c, Index k, Index d) const {
    const auto i = static_cast<std::size_t>(c);
    return {mu[i](k, d), kappa[i](k, d), alpha[i](k, d), beta[i](k, d)};
  }

  void set_cell(Index c, Index k, Index d, const NIGParams<T>& p) {
    const auto i = static_cast<std::size_t>(c);
    mu[i](k, d) = p.mu;
    kappa[i](k, d) = p.kappa;
    alpha[i](k, d) = p.alpha;
    beta[i](k, d) = p.beta;
  }

  void resize(Index c_count, Index k_count, Index d_count) {
    const auto c = static_cast<std::size_t>(c_count);
    for (auto* m : {&mu, &kappa, &alpha, &beta}) {
      m->assign(c, MatrixX<T>::Zero(k_count, d_count));
    }
    weights.assign(c, VectorX<T>::Zero(k_count));
  }

  /// Throws on ragged shapes or any non-positive kappa/alpha/beta.
  void validate() const {
    const Index c_count = num_classes();
    require_shape(c_count >= 1, "bank has no classes");
    require_shape(kappa.size() == mu.size() && alpha.size() == mu.size() &&
                      beta.size() == mu.size() && weights.size() == mu.size(),
                  "bank arrays disagree on class count");
    for (Index c = 0; c < c_count; ++c) {
      const auto i = static_cast<std::size_t>(c);
      for (const auto* m : {&mu[i], &kappa[i], &alpha[i], &beta[i]}) {
        require_shape(m->rows() == components() && m->cols() == feature_dim(),
                      "bank class " + std::to_string(c) + " has inconsistent K/D");
      }
      require_shape(weights[i].size() == components(), "bank weights have wrong length");
      for (Index k = 0; k < components(); ++k) {
        for (Index d = 0; d < feature_dim(); ++d) {
          require(cell(c, k, d).valid(), Errc::kInvalidArgument,
                  "bank cell (" + std::to_string(c) + "," + std::to_string(k) + "," +
                      std::to_string(d) + ") violates positivity");
        }
      }
    }
  }
};

/// A sampled parameter set: a full classifier whose means/variances are one
/// posterior draw and whose weights are the frozen EM weights.
template <class T>
using GMMParameterSample = GMMClassifier<T>;

template <class T>
NIGPosteriorBank<T> build_bank(const GMMClassifier<T>& model,
                               const std::vector<SufficientStats<T>>& stats,
                               const NIGParams<T>& prior = {}) {
  model.validate();
  const Index c_count = model.num_classes();
  const Index k_count = model.components();
  const Index d_count = model.feature_dim();
  require_shape(static_cast<Index>(stats.size()) == c_count,
                "statistics cover " + std::to_string(stats.size()) + " classes, model has " +
                    std::to_string(c_count));
  NIGPosteriorBank<T> bank;
  bank.resize(c_count, k_count, d_count);
  for (Index c = 0; c < c_count; ++c) {
    const auto& s = stats[static_cast<std::size_t>(c)];
    require_shape(s.count.size() == k_count && s.mean.rows() == k_count &&
                      s.mean.cols() == d_count && s.scatter.rows() == k_count &&
                      s.scatter.cols() == d_count,
                  "statistics for class " + std::to_string(c) + " do not match K x D");
    for (Index k = 0; k < k_count; ++k) {
      for (Index d = 0; d < d_count; ++d) {
        bank.set_cell(c, k, d, update_posterior(prior, {s.count(k), s.mean(k, d), s.scatter(k, d)}));
      }
    }
    bank.weights[static_cast<std::size_t>(c)] = model.classes[static_cast<std::size_t>(c)].weights;
  }
  return bank;
}

/// Deterministic child seed for ensemble member `index`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

/// One (mean, variance) draw from a cell: sigma^2 = 1 / Gamma(shape alpha,
/// scale 1/beta), then mu ~ N(mu_n, sigma^2 / kappa_n). Gamma draws that
/// underflow to zero are redrawn so sigma^2 is always finite and positive.
template <class T, class URNG>
std::pair<T, T> sample_cell(const NIGParams<T>& p, URNG& rng) {
  std::gamma_distribution<double> precision(static_cast<double>(p.alpha),
                                            1.0 / static_cast<double>(p.beta));
  std::normal_distribution<double> standard_normal(0.0, 1.0);
  double g = 0.0;
  do {
    g = precision(rng);
  } while (!(g > 0.0) || !std::isfinite(1.0 / g));
  const double var = 1.0 / g;
  const double mean =
      static_cast<double>(p.mu) + std::sqrt(var / static_cast<double>(p.kappa)) * standard_normal(rng);
  return {static_cast<T>(mean), static_cast<T>(var)};
}

/// Samples every cell in (class, component, dimension) order.
template <class T>
GMMParameterSample<T> sample_parameters(const NIGPosteriorBank<T>& bank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GMMParameterSample<T> sample;
  sample.classes.resize(static_cast<std::size_t>(bank.num_classes()));
  for (Index c = 0; c < bank.num_classes(); ++c) {
    auto& g = sample.classes[static_cast<std::size_t>(c)];
    g.class_id = static_cast<int>(c);
    g.weights = bank.weights[static_cast<std::size_t>(c)];
    g.means.resize(bank.components(), bank.feature_dim());
    g.variances.resize(bank.components(), bank.feature_dim());
    for (Index k = 0; k < bank.components(); ++k) {
      for (Index d = 0; d < bank.feature_dim(); ++d) {
        const auto [mean, var] = sample_cell(bank.cell(c, k, d), rng);
        g.means(k, d) = mean;
        g.variances(k, d) = var;
      }
    }
  }
  return sample;
}

template <class T>
std::vector<GMMParameterSample<T>> sample_ensemble(const NIGPosteriorBank<T>& bank,
                                                   Index n_samples = 20, std::uint64_t seed = 0) {
  require(n_samples >= 1, Errc::kInvalidArgument, "ensemble size must be >= 1");
  std::vector<GMMParameterSample<T>> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (Index i = 0; i < n_samples; ++i) {
    out.push_back(sample_parameters(bank, derive_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

/// Student-t posterior predictive: 2 alpha dof, location mu,
/// scale sqrt(beta (kappa + 1) / (alpha kappa)).
template <class T>
T posterior_predictive_logpdf(const NIGParams<T>& cell, T x) {
  const T nu = T(2) * cell.alpha;
  const T scale = std::sqrt(cell.beta * (cell.kappa + T(1)) / (cell.alpha * cell.kappa));
  const T t = (x - cell.mu) / scale;
  return std::lgamma((nu + T(1)) / T(2)) - std::lgamma(nu / T(2)) -
         T(0.5) * std::log(nu * std::numbers::pi_v<T>) - std::log(scale) -
         (nu + T(1)) / T(2) * std::log1p(t * t / nu);
}

}  // namespace hbgmm
