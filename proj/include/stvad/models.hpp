#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stvad/nn.hpp"

namespace stvad {

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  int input_size = 224;    // H = W, must be divisible by 8 (three stride-2 stages)
  int base_channels = 16;  // encoder width; all other widths scale with it
  int half_window = 5;     // context frames on each side of the target
  int convlstm_hidden = 0; // 0 derives the canonical 4 * base_channels

  int hidden() const { return convlstm_hidden > 0 ? convlstm_hidden : 4 * base_channels; }
  int latent_size() const { return input_size / 8; }
  void validate() const;
};

struct DiscriminatorConfig {
  int input_size = 224;
  int sequence_length = 11;  // 2 * half_window + 1
  int base_channels = 16;    // layer widths are (2, 4, 8, 16, 32) x this

  int patch_grid() const;  // spatial output size after five stride-2 stages
  void validate() const;
};

/// Handle for iterating a model's parameter tensors in a fixed order.
template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T>* tensor;
};

// ---------------------------------------------------------------------------
// Generator: per-frame spatial encoder -> bidirectional ConvLSTM ->
// combined ConvLSTM (one step) -> spatial decoder with tanh output.
// ---------------------------------------------------------------------------

template <typename T>
struct EncoderCache {
  Tensor<T> x;
  Tensor<T> z1, a1, z2, a2, z3, a3, z4, a4;
};

template <typename T>
struct DecoderCache {
  Tensor<T> in;
  Tensor<T> z1, a1, z2, a2, z3, a3, z4, y;
};

template <typename T>
struct GeneratorCache {
  std::vector<EncoderCache<T>> enc;               // one per window frame
  std::vector<ConvLstmStepCache<T>> fsteps;       // past -> target order
  std::vector<ConvLstmStepCache<T>> bsteps;       // future -> target order
  ConvLstmStepCache<T> comb_step;
  DecoderCache<T> dec;
};

template <typename T>
struct Generator {
  GeneratorConfig cfg;
  Conv2dParams<T> enc1, enc2, enc3, enc4;
  ConvLstmParams<T> lstm_fwd, lstm_bwd, lstm_comb;
  Conv2dParams<T> dec1, dec2, dec3, dec4;

  explicit Generator(const GeneratorConfig& c);
  void init(Rng& rng);

  /// window: 2k frames ordered (t-k..t-1, t+1..t+k), each (H, W, 1) in [-1,1].
  Tensor<T> forward(const std::vector<Tensor<T>>& window,
                    GeneratorCache<T>* cache = nullptr) const;

  /// gy is the gradient on the generated frame. Parameter gradients accumulate
  /// into `grad` (a zeroed model of the same config); per-frame input
  /// gradients land in `gframes` when non-null.
  void backward(const GeneratorCache<T>& cache, const Tensor<T>& gy, Generator<T>* grad,
                std::vector<Tensor<T>>* gframes = nullptr) const;

  std::vector<NamedParam<T>> params();
  std::size_t param_count() const;
  void zero_params();

  /// Layer table: (row name, output shape "HxWxC"), input row included.
  std::vector<std::pair<std::string, std::string>> describe() const;
};

// ---------------------------------------------------------------------------
// Discriminator: six 3D conv layers, ELU between, sigmoid patch output.
// ---------------------------------------------------------------------------

template <typename T>
struct DiscriminatorCache {
  Tensor<T> x;
  std::array<Tensor<T>, 6> z;  // pre-activations
  std::array<Tensor<T>, 5> a;  // elu outputs after layers 1..5
  Tensor<T> y;                 // sigmoid patch map
};

template <typename T>
struct Discriminator {
  DiscriminatorConfig cfg;
  Conv3dParams<T> c1, c2, c3, c4, c5, c6;

  explicit Discriminator(const DiscriminatorConfig& c);
  void init(Rng& rng);

  /// seq: (sequence_length, H, W, 1) in [-1,1] -> patch map (1, g, g, 1) with
  /// entries in (0,1).
  Tensor<T> forward(const Tensor<T>& seq, DiscriminatorCache<T>* cache = nullptr) const;

  /// Returns the gradient on the input volume. With `guided` set, every ELU
  /// backward additionally zeroes negative upstream gradients (the final
  /// sigmoid stays ungated).
  Tensor<T> backward(const DiscriminatorCache<T>& cache, const Tensor<T>& gy,
                     Discriminator<T>* grad, bool guided = false) const;

  std::vector<NamedParam<T>> params();
  std::size_t param_count() const;
  void zero_params();

  std::vector<std::pair<std::string, std::string>> describe() const;
};

// ---------------------------------------------------------------------------
// Sequence assembly
// ---------------------------------------------------------------------------

/// Stack equally-shaped (H, W, 1) frames into an (L, H, W, 1) volume.
template <typename T>
Tensor<T> stack_frames(const std::vector<Tensor<T>>& frames);

/// Fake sequence: context window with the generated frame in the center slot.
template <typename T>
Tensor<T> assemble_fake_sequence(const std::vector<Tensor<T>>& window,
                                 const Tensor<T>& generated);

}  // namespace stvad
