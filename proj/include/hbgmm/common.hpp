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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hbgmm {

using Eigen::Index;

// ================================================================
// type aliases
// ================================================================

template <class T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
using RowMatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// ================================================================
// errors
// ================================================================

enum class Errc {
  kShape,
  kInvalidArgument,
  kMalformedScan,
  kCorruptPoint,
  kLabelCount,
  kInsufficientData,
  kInvalidStatistics,
  kUndefinedMetric,
  kFormat,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

inline void require_shape(bool ok, const std::string& what) {
  require(ok, Errc::kShape, what);
}

// ================================================================
// numerics
// ================================================================

/// log(sum(exp(v))) without overflow; -inf for an all -inf input.
template <class Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  const T m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Shannon entropy in nats with 0 ln 0 = 0.
template <class Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using T = typename Derived::Scalar;
  T h = 0;
  for (Index i = 0; i < p.size(); ++i) {
    const T pi = p(i);
    if (pi > T(0)) h -= pi * std::log(pi);
  }
  return h;
}

/// Normalized exp of a log-score vector.
template <class Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using T = typename Derived::Scalar;
  const T lse = log_sum_exp(logits);
  VectorX<T> p = (logits.array() - lse).exp().matrix();
  return p / p.sum();
}

/// Index of the first maximum.
template <class Derived>
Index argmax_first(const Eigen::DenseBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

// ================================================================
// parallelism
// ================================================================

/// Splits [0, n) into contiguous chunks run on up to `jobs` threads.
/// fn(begin, end) must only write state owned by its own range.
template <class Fn>
void parallel_for(Index n, int jobs, Fn&& fn) {
  const Index workers = std::clamp<Index>(jobs, 1, std::max<Index>(n, 1));
  if (workers == 1) {
    fn(Index(0), n);
    return;
  }
  const Index chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
      const Index begin = w * chunk;
      const Index end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&fn, &errors, w, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hbgmm
