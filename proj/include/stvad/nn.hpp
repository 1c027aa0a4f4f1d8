#pragma once

#include <optional>
#include <utility>

#include "stvad/rng.hpp"
#include "stvad/tensor.hpp"

namespace stvad {

// ---------------------------------------------------------------------------
// Layer parameters
// ---------------------------------------------------------------------------

/// 2D convolution / transposed-convolution parameters.
/// Weight layout (kh, kw, c_in, c_out); for the transposed direction c_in is
/// the layer's input channel count (the adjoint convolution swaps the roles
/// internally).
template <typename T>
struct Conv2dParams {
  Tensor<T> w;  // (kh, kw, c_in, c_out)
  Tensor<T> b;  // (c_out)
  int stride_h = 1;
  int stride_w = 1;

  Conv2dParams() = default;
  Conv2dParams(int kh, int kw, int c_in, int c_out, int sh, int sw)
      : w({kh, kw, c_in, c_out}), b({c_out}), stride_h(sh), stride_w(sw) {}

  int kh() const { return w.dim(0); }
  int kw() const { return w.dim(1); }
  int in_channels() const { return w.dim(2); }
  int out_channels() const { return w.dim(3); }
};

/// 3D convolution parameters: temporally "valid", spatially "same".
template <typename T>
struct Conv3dParams {
  Tensor<T> w;  // (kd, kh, kw, c_in, c_out)
  Tensor<T> b;  // (c_out)
  int stride_l = 1;
  int stride_h = 1;
  int stride_w = 1;

  Conv3dParams() = default;
  Conv3dParams(int kd, int kh, int kw, int c_in, int c_out, int sl, int sh, int sw)
      : w({kd, kh, kw, c_in, c_out}), b({c_out}), stride_l(sl), stride_h(sh), stride_w(sw) {}

  int kd() const { return w.dim(0); }
  int kh() const { return w.dim(1); }
  int kw() const { return w.dim(2); }
  int in_channels() const { return w.dim(3); }
  int out_channels() const { return w.dim(4); }
};

/// ConvLSTM cell without peephole connections. All four gates come from one
/// 3x3 same-padding convolution over [input, hidden]; channel blocks are
/// ordered (input gate, forget gate, candidate, output gate).
template <typename T>
struct ConvLstmParams {
  Tensor<T> w;  // (kh, kw, c_in + c_hidden, 4 * c_hidden)
  Tensor<T> b;  // (4 * c_hidden)

  ConvLstmParams() = default;
  ConvLstmParams(int kh, int kw, int c_in, int c_hidden)
      : w({kh, kw, c_in + c_hidden, 4 * c_hidden}), b({4 * c_hidden}) {}

  int hidden_channels() const { return b.dim(0) / 4; }
  int input_channels() const { return w.dim(2) - hidden_channels(); }
};

template <typename T>
struct ConvLstmState {
  Tensor<T> h;  // (h, w, c_hidden)
  Tensor<T> c;  // (h, w, c_hidden)

  static ConvLstmState zeros(int height, int width, int channels) {
    return {Tensor<T>({height, width, channels}), Tensor<T>({height, width, channels})};
  }
};

// ---------------------------------------------------------------------------
// Shape arithmetic ("same" spatial padding, "valid" temporal padding)
// ---------------------------------------------------------------------------

inline int same_out(int in, int stride) { return (in + stride - 1) / stride; }
inline int valid_out(int in, int kernel, int stride) { return (in - kernel) / stride + 1; }

/// Leading padding for "same" output size; trailing padding is whatever the
/// kernel footprint still needs.
inline int same_pad_before(int in, int kernel, int stride) {
  const int out = same_out(in, stride);
  const int total = std::max((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

/// 2D convolution, spatial "same" padding. Input (h, w, c_in) -> output
/// (ceil(h/sh), ceil(w/sw), c_out).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Conv2dParams<T>& p);

/// Gradients of conv2d. Returns d/dx; when `grad` is non-null the weight and
/// bias gradients are accumulated into it (it must be shaped like `p`).
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, const Conv2dParams<T>& p, const Tensor<T>& gy,
                          Conv2dParams<T>* grad);

/// Transposed 2D convolution: the adjoint of conv2d plus a bias, with output
/// spatial size exactly input * stride.
template <typename T>
Tensor<T> deconv2d(const Tensor<T>& x, const Conv2dParams<T>& p);

template <typename T>
Tensor<T> deconv2d_backward(const Tensor<T>& x, const Conv2dParams<T>& p, const Tensor<T>& gy,
                            Conv2dParams<T>* grad);

/// 3D convolution over (l, h, w, c): temporal axis "valid", spatial axes
/// "same".
template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Conv3dParams<T>& p);

template <typename T>
Tensor<T> conv3d_backward(const Tensor<T>& x, const Conv3dParams<T>& p, const Tensor<T>& gy,
                          Conv3dParams<T>* grad);

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> elu(const Tensor<T>& x);

/// d/dx of ELU given the pre-activation input. With `guided` set, negative
/// upstream gradients are zeroed before applying the derivative (saliency
/// backward rule).
template <typename T>
Tensor<T> elu_backward(const Tensor<T>& x, const Tensor<T>& gy, bool guided = false);

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& x);

/// d/dx of tanh given the activation *output*.
template <typename T>
Tensor<T> tanh_backward_from_output(const Tensor<T>& y, const Tensor<T>& gy);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid_backward_from_output(const Tensor<T>& y, const Tensor<T>& gy);

// ---------------------------------------------------------------------------
// ConvLSTM step
// ---------------------------------------------------------------------------

template <typename T>
struct ConvLstmStepCache {
  Tensor<T> xh;      // concatenated input (h, w, c_in + c_hidden)
  Tensor<T> i, f, g, o;  // post-activation gates
  Tensor<T> c_prev;  // incoming cell state
  Tensor<T> c_new;   // outgoing cell state
};

/// One recurrence step: c' = f*c + i*g, h' = o*tanh(c').
template <typename T>
ConvLstmState<T> convlstm_step(const Tensor<T>& x, const ConvLstmState<T>& state,
                               const ConvLstmParams<T>& p,
                               ConvLstmStepCache<T>* cache = nullptr);

/// Backward through one step. `gh` / `gc` are gradients on the outgoing
/// hidden/cell state (`gc` may be null). Outputs, when non-null: gradient on
/// the step input, on the incoming state, and accumulated parameter grads.
template <typename T>
void convlstm_step_backward(const ConvLstmStepCache<T>& cache, const ConvLstmParams<T>& p,
                            const Tensor<T>& gh, const Tensor<T>* gc, Tensor<T>* gx,
                            Tensor<T>* gh_prev, Tensor<T>* gc_prev, ConvLstmParams<T>* grad);

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero bias.
template <typename T>
void glorot_init(Conv2dParams<T>& p, Rng& rng);
template <typename T>
void glorot_init(Conv3dParams<T>& p, Rng& rng);
/// Same for the gate convolution; the forget-gate bias block starts at 1.
template <typename T>
void glorot_init(ConvLstmParams<T>& p, Rng& rng);

}  // namespace stvad
