#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "stvad/tensor.hpp"

namespace stvad {

/// Central-difference gradient of a scalar-valued function at `x`.
/// `f` is called with perturbed copies of `x`; it must not keep state between
/// calls.
template <typename T, typename F>
Tensor<T> fd_gradient(F&& f, const Tensor<T>& x, T eps) {
  Tensor<T> g = Tensor<T>::zeros_like(x);
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T orig = probe[i];
    probe[i] = orig + eps;
    const T up = f(probe);
    probe[i] = orig - eps;
    const T dn = f(probe);
    probe[i] = orig;
    g[i] = (up - dn) / (2 * eps);
  }
  return g;
}

/// Largest absolute element.
template <typename T>
T max_abs(const Tensor<T>& a) {
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

/// inf-norm difference scaled by the larger of the two magnitudes (with a
/// floor so comparing two zero gradients reports zero error).
template <typename T>
T max_rel_diff(const Tensor<T>& a, const Tensor<T>& b) {
  T diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  const T scale = std::max({max_abs(a), max_abs(b), T(1e-12)});
  return diff / scale;
}

/// Per-element relative error with an absolute floor:
/// max_i |a_i − n_i| / max(|a_i|, |n_i|, floor).
template <typename T>
T grad_check_error(const Tensor<T>& analytic, const Tensor<T>& numeric, T floor = T(1e-8)) {
  T worst = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const T a = analytic[i], n = numeric[i];
    const T denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace stvad
