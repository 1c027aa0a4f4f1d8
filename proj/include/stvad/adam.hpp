#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stvad/models.hpp"

namespace stvad {

/// Adaptive-moment optimizer with bias correction. Moment buffers align with
/// the parameter order supplied to attach(); step() consumes gradients in the
/// same order.
template <typename T>
struct Adam {
  T lr = T(2e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);

  std::int64_t t = 0;
  std::vector<Tensor<T>> m, v;

  void attach(const std::vector<NamedParam<T>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.push_back(Tensor<T>::zeros_like(*p.tensor));
      v.push_back(Tensor<T>::zeros_like(*p.tensor));
    }
    t = 0;
  }

  void step(const std::vector<NamedParam<T>>& params,
            const std::vector<NamedParam<T>>& grads) {
    if (params.size() != m.size() || grads.size() != m.size())
      throw std::invalid_argument("optimizer not attached to this parameter set");
    ++t;
    const T c1 = T(1) - std::pow(beta1, T(t));
    const T c2 = T(1) - std::pow(beta2, T(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      T* p = params[i].tensor->data();
      const T* g = grads[i].tensor->data();
      T* mp = m[i].data();
      T* vp = v[i].data();
      const std::size_t n = params[i].tensor->size();
      for (std::size_t j = 0; j < n; ++j) {
        mp[j] = beta1 * mp[j] + (T(1) - beta1) * g[j];
        vp[j] = beta2 * vp[j] + (T(1) - beta2) * g[j] * g[j];
        p[j] -= lr * (mp[j] / c1) / (std::sqrt(vp[j] / c2) + eps);
      }
    }
  }
};

}  // namespace stvad
