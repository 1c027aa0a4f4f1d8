#pragma once

#include <vector>

#include "stvad/tensor.hpp"

namespace stvad {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log,
/// keeping every loss finite. Backwards are clamp-aware: entries outside the
/// clamp window get zero gradient, so analytic and numeric gradients agree.
inline constexpr double kProbClamp = 1e-6;

/// Mean over patches of -log p: how far the map is from looking real.
template <typename T>
T realism_loss(const Tensor<T>& patch_map);
template <typename T>
Tensor<T> realism_loss_backward(const Tensor<T>& patch_map);

/// Mean over patches of -log p, for scoring real sequences (same quantity,
/// named for its role: large when the discriminator doubts the input).
template <typename T>
T neg_log_realness(const Tensor<T>& patch_map) {
  return realism_loss(patch_map);
}

/// Euclidean norm of the elementwise difference (not squared).
template <typename T>
T pixel_loss(const Tensor<T>& generated, const Tensor<T>& real);
/// d pixel_loss / d generated = diff / norm (zero when the frames coincide).
template <typename T>
Tensor<T> pixel_loss_backward(const Tensor<T>& generated, const Tensor<T>& real);

/// One sequence's discriminator objective:
/// mean(-log(1 - p_fake)) + mean(-log p_real).
template <typename T>
T discriminator_loss_term(const Tensor<T>& fake_map, const Tensor<T>& real_map);

/// Batch objective for the generator: sum over windows of
/// realism_loss(fake_map) + lambda * pixel_term. Throws on an empty batch or
/// mismatched batch lengths.
template <typename T>
T generator_loss(const std::vector<Tensor<T>>& fake_maps,
                 const std::vector<T>& pixel_terms, T lambda);

/// Batch objective for the discriminator: sum of per-sequence terms.
/// Throws when the real and fake batches differ in length.
template <typename T>
T discriminator_loss(const std::vector<Tensor<T>>& real_maps,
                     const std::vector<Tensor<T>>& fake_maps);
/// d/d fake_map of mean(-log(1 - p)).
template <typename T>
Tensor<T> fake_rejection_backward(const Tensor<T>& fake_map);
/// d/d real_map of mean(-log p).
template <typename T>
Tensor<T> real_acceptance_backward(const Tensor<T>& real_map);

}  // namespace stvad
