#include "stvad/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace stvad {
namespace {

template <typename T>
T clamp_prob(T p) {
  const T lo = T(kProbClamp), hi = T(1) - T(kProbClamp);
  return p < lo ? lo : (p > hi ? hi : p);
}

template <typename T>
bool inside_clamp(T p) {
  return p >= T(kProbClamp) && p <= T(1) - T(kProbClamp);
}

}  // namespace

template <typename T>
T realism_loss(const Tensor<T>& patch_map) {
  T sum = 0;
  for (std::size_t i = 0; i < patch_map.size(); ++i) sum -= std::log(clamp_prob(patch_map[i]));
  return sum / T(patch_map.size());
}

template <typename T>
Tensor<T> realism_loss_backward(const Tensor<T>& patch_map) {
  Tensor<T> g = Tensor<T>::zeros_like(patch_map);
  const T n = T(patch_map.size());
  for (std::size_t i = 0; i < patch_map.size(); ++i)
    if (inside_clamp(patch_map[i])) g[i] = -T(1) / (n * patch_map[i]);
  return g;
}

template <typename T>
T pixel_loss(const Tensor<T>& generated, const Tensor<T>& real) {
  if (!generated.same_shape(real))
    throw std::invalid_argument("pixel_loss: frame shapes differ");
  T sq = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const T d = generated[i] - real[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

template <typename T>
Tensor<T> pixel_loss_backward(const Tensor<T>& generated, const Tensor<T>& real) {
  const T norm = pixel_loss(generated, real);
  Tensor<T> g = Tensor<T>::zeros_like(generated);
  if (norm == T(0)) return g;
  for (std::size_t i = 0; i < generated.size(); ++i) g[i] = (generated[i] - real[i]) / norm;
  return g;
}

template <typename T>
T discriminator_loss_term(const Tensor<T>& fake_map, const Tensor<T>& real_map) {
  T fake = 0, real = 0;
  for (std::size_t i = 0; i < fake_map.size(); ++i)
    fake -= std::log(T(1) - clamp_prob(fake_map[i]));
  for (std::size_t i = 0; i < real_map.size(); ++i) real -= std::log(clamp_prob(real_map[i]));
  return fake / T(fake_map.size()) + real / T(real_map.size());
}

template <typename T>
T generator_loss(const std::vector<Tensor<T>>& fake_maps,
                 const std::vector<T>& pixel_terms, T lambda) {
  if (fake_maps.empty()) throw std::invalid_argument("generator_loss: empty batch");
  if (fake_maps.size() != pixel_terms.size())
    throw std::invalid_argument("generator_loss: batch lengths differ");
  T total = 0;
  for (std::size_t i = 0; i < fake_maps.size(); ++i)
    total += realism_loss(fake_maps[i]) + lambda * pixel_terms[i];
  return total;
}

template <typename T>
T discriminator_loss(const std::vector<Tensor<T>>& real_maps,
                     const std::vector<Tensor<T>>& fake_maps) {
  if (real_maps.size() != fake_maps.size())
    throw std::invalid_argument("discriminator_loss: real/fake batch lengths differ");
  T total = 0;
  for (std::size_t i = 0; i < real_maps.size(); ++i)
    total += discriminator_loss_term(fake_maps[i], real_maps[i]);
  return total;
}

template <typename T>
Tensor<T> fake_rejection_backward(const Tensor<T>& fake_map) {
  Tensor<T> g = Tensor<T>::zeros_like(fake_map);
  const T n = T(fake_map.size());
  for (std::size_t i = 0; i < fake_map.size(); ++i)
    if (inside_clamp(fake_map[i])) g[i] = T(1) / (n * (T(1) - fake_map[i]));
  return g;
}

template <typename T>
Tensor<T> real_acceptance_backward(const Tensor<T>& real_map) {
  Tensor<T> g = Tensor<T>::zeros_like(real_map);
  const T n = T(real_map.size());
  for (std::size_t i = 0; i < real_map.size(); ++i)
    if (inside_clamp(real_map[i])) g[i] = -T(1) / (n * real_map[i]);
  return g;
}

#define STVAD_INSTANTIATE_LOSSES(T)                                          \
  template T realism_loss(const Tensor<T>&);                                 \
  template Tensor<T> realism_loss_backward(const Tensor<T>&);                \
  template T pixel_loss(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> pixel_loss_backward(const Tensor<T>&, const Tensor<T>&); \
  template T discriminator_loss_term(const Tensor<T>&, const Tensor<T>&);    \
  template T generator_loss(const std::vector<Tensor<T>>&,                   \
                            const std::vector<T>&, T);                       \
  template T discriminator_loss(const std::vector<Tensor<T>>&,               \
                                const std::vector<Tensor<T>>&);              \
  template Tensor<T> fake_rejection_backward(const Tensor<T>&);              \
  template Tensor<T> real_acceptance_backward(const Tensor<T>&);

STVAD_INSTANTIATE_LOSSES(float)
STVAD_INSTANTIATE_LOSSES(double)

#undef STVAD_INSTANTIATE_LOSSES

}  // namespace stvad
