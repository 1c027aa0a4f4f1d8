#include "stvad/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stvad {
namespace {

void check_eq(int got, int want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": got " + std::to_string(got) +
                                ", expected " + std::to_string(want));
  }
}

// Shared core for conv2d and the ConvLSTM gate convolution. `b` may be null.
template <typename T>
Tensor<T> conv2d_core(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, int sh,
                      int sw) {
  const int in_h = x.dim(0), in_w = x.dim(1), ci = x.dim(2);
  const int kh = w.dim(0), kw = w.dim(1), co = w.dim(3);
  check_eq(ci, w.dim(2), "conv2d input channels");
  const int out_h = same_out(in_h, sh), out_w = same_out(in_w, sw);
  const int ph = same_pad_before(in_h, kh, sh), pw = same_pad_before(in_w, kw, sw);

  Tensor<T> y({out_h, out_w, co});
  for (int oy = 0; oy < out_h; ++oy) {
    const int y0 = oy * sh - ph;
    const int ky0 = std::max(0, -y0), ky1 = std::min(kh, in_h - y0);
    for (int ox = 0; ox < out_w; ++ox) {
      const int x0 = ox * sw - pw;
      const int kx0 = std::max(0, -x0), kx1 = std::min(kw, in_w - x0);
      T* out = &y.at(oy, ox, 0);
      if (b) {
        const T* bp = b->data();
        for (int k = 0; k < co; ++k) out[k] = bp[k];
      }
      for (int ky = ky0; ky < ky1; ++ky) {
        for (int kx = kx0; kx < kx1; ++kx) {
          const T* xp = &x.at(y0 + ky, x0 + kx, 0);
          const T* wp = &w.at(ky, kx, 0, 0);
          for (int c = 0; c < ci; ++c) {
            const T xv = xp[c];
            const T* wrow = wp + c * co;
            for (int k = 0; k < co; ++k) out[k] += xv * wrow[k];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> conv2d_backward_core(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                               int sh, int sw, Tensor<T>* gw, Tensor<T>* gb) {
  const int in_h = x.dim(0), in_w = x.dim(1), ci = x.dim(2);
  const int kh = w.dim(0), kw = w.dim(1), co = w.dim(3);
  check_eq(gy.dim(0), same_out(in_h, sh), "conv2d grad height");
  check_eq(gy.dim(1), same_out(in_w, sw), "conv2d grad width");
  check_eq(gy.dim(2), co, "conv2d grad channels");
  const int ph = same_pad_before(in_h, kh, sh), pw = same_pad_before(in_w, kw, sw);

  Tensor<T> gx = Tensor<T>::zeros_like(x);
  for (int oy = 0; oy < gy.dim(0); ++oy) {
    const int y0 = oy * sh - ph;
    const int ky0 = std::max(0, -y0), ky1 = std::min(kh, in_h - y0);
    for (int ox = 0; ox < gy.dim(1); ++ox) {
      const int x0 = ox * sw - pw;
      const int kx0 = std::max(0, -x0), kx1 = std::min(kw, in_w - x0);
      const T* gyp = &gy.at(oy, ox, 0);
      if (gb) {
        T* gbp = gb->data();
        for (int k = 0; k < co; ++k) gbp[k] += gyp[k];
      }
      for (int ky = ky0; ky < ky1; ++ky) {
        for (int kx = kx0; kx < kx1; ++kx) {
          const T* xp = &x.at(y0 + ky, x0 + kx, 0);
          T* gxp = &gx.at(y0 + ky, x0 + kx, 0);
          const T* wp = &w.at(ky, kx, 0, 0);
          T* gwp = gw ? &gw->at(ky, kx, 0, 0) : nullptr;
          for (int c = 0; c < ci; ++c) {
            const T* wrow = wp + c * co;
            T acc = 0;
            for (int k = 0; k < co; ++k) acc += gyp[k] * wrow[k];
            gxp[c] += acc;
            if (gwp) {
              const T xv = xp[c];
              T* gwrow = gwp + c * co;
              for (int k = 0; k < co; ++k) gwrow[k] += xv * gyp[k];
            }
          }
        }
      }
    }
  }
  return gx;
}

template <typename T>
T sigmoid_scalar(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Conv2dParams<T>& p) {
  return conv2d_core(x, p.w, &p.b, p.stride_h, p.stride_w);
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, const Conv2dParams<T>& p, const Tensor<T>& gy,
                          Conv2dParams<T>* grad) {
  return conv2d_backward_core(x, p.w, gy, p.stride_h, p.stride_w, grad ? &grad->w : nullptr,
                              grad ? &grad->b : nullptr);
}

template <typename T>
Tensor<T> deconv2d(const Tensor<T>& x, const Conv2dParams<T>& p) {
  const int in_h = x.dim(0), in_w = x.dim(1), ci = x.dim(2);
  const int kh = p.kh(), kw = p.kw(), co = p.out_channels();
  const int sh = p.stride_h, sw = p.stride_w;
  check_eq(ci, p.in_channels(), "deconv2d input channels");
  const int out_h = in_h * sh, out_w = in_w * sw;
  // Padding is defined against the *output* size so that this operation is the
  // exact adjoint of conv2d(output-sized image) -> input-sized image.
  const int ph = same_pad_before(out_h, kh, sh), pw = same_pad_before(out_w, kw, sw);

  Tensor<T> y({out_h, out_w, co});
  {
    const T* bp = p.b.data();
    T* yp = y.data();
    for (int pos = 0; pos < out_h * out_w; ++pos)
      for (int k = 0; k < co; ++k) yp[pos * co + k] = bp[k];
  }
  for (int oy = 0; oy < in_h; ++oy) {
    const int y0 = oy * sh - ph;
    const int ky0 = std::max(0, -y0), ky1 = std::min(kh, out_h - y0);
    for (int ox = 0; ox < in_w; ++ox) {
      const int x0 = ox * sw - pw;
      const int kx0 = std::max(0, -x0), kx1 = std::min(kw, out_w - x0);
      const T* xp = &x.at(oy, ox, 0);
      for (int ky = ky0; ky < ky1; ++ky) {
        for (int kx = kx0; kx < kx1; ++kx) {
          T* out = &y.at(y0 + ky, x0 + kx, 0);
          const T* wp = &p.w.at(ky, kx, 0, 0);
          for (int c = 0; c < ci; ++c) {
            const T xv = xp[c];
            const T* wrow = wp + c * co;
            for (int k = 0; k < co; ++k) out[k] += xv * wrow[k];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> deconv2d_backward(const Tensor<T>& x, const Conv2dParams<T>& p, const Tensor<T>& gy,
                            Conv2dParams<T>* grad) {
  const int in_h = x.dim(0), in_w = x.dim(1), ci = x.dim(2);
  const int kh = p.kh(), kw = p.kw(), co = p.out_channels();
  const int sh = p.stride_h, sw = p.stride_w;
  const int out_h = in_h * sh, out_w = in_w * sw;
  check_eq(gy.dim(0), out_h, "deconv2d grad height");
  check_eq(gy.dim(1), out_w, "deconv2d grad width");
  check_eq(gy.dim(2), co, "deconv2d grad channels");
  const int ph = same_pad_before(out_h, kh, sh), pw = same_pad_before(out_w, kw, sw);

  if (grad) {
    T* gbp = grad->b.data();
    const T* gyp = gy.data();
    for (int pos = 0; pos < out_h * out_w; ++pos)
      for (int k = 0; k < co; ++k) gbp[k] += gyp[pos * co + k];
  }
  Tensor<T> gx = Tensor<T>::zeros_like(x);
  for (int oy = 0; oy < in_h; ++oy) {
    const int y0 = oy * sh - ph;
    const int ky0 = std::max(0, -y0), ky1 = std::min(kh, out_h - y0);
    for (int ox = 0; ox < in_w; ++ox) {
      const int x0 = ox * sw - pw;
      const int kx0 = std::max(0, -x0), kx1 = std::min(kw, out_w - x0);
      const T* xp = &x.at(oy, ox, 0);
      T* gxp = &gx.at(oy, ox, 0);
      for (int ky = ky0; ky < ky1; ++ky) {
        for (int kx = kx0; kx < kx1; ++kx) {
          const T* gyp = &gy.at(y0 + ky, x0 + kx, 0);
          const T* wp = &p.w.at(ky, kx, 0, 0);
          T* gwp = grad ? &grad->w.at(ky, kx, 0, 0) : nullptr;
          for (int c = 0; c < ci; ++c) {
            const T* wrow = wp + c * co;
            T acc = 0;
            for (int k = 0; k < co; ++k) acc += gyp[k] * wrow[k];
            gxp[c] += acc;
            if (gwp) {
              const T xv = xp[c];
              T* gwrow = gwp + c * co;
              for (int k = 0; k < co; ++k) gwrow[k] += xv * gyp[k];
            }
          }
        }
      }
    }
  }
  return gx;
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Conv3dParams<T>& p) {
  const int in_l = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), ci = x.dim(3);
  const int kd = p.kd(), kh = p.kh(), kw = p.kw(), co = p.out_channels();
  check_eq(ci, p.in_channels(), "conv3d input channels");
  if (in_l < kd) throw std::invalid_argument("conv3d: input shorter than temporal kernel");
  const int out_l = valid_out(in_l, kd, p.stride_l);
  const int out_h = same_out(in_h, p.stride_h), out_w = same_out(in_w, p.stride_w);
  const int ph = same_pad_before(in_h, kh, p.stride_h);
  const int pw = same_pad_before(in_w, kw, p.stride_w);

  Tensor<T> y({out_l, out_h, out_w, co});
  for (int ol = 0; ol < out_l; ++ol) {
    const int l0 = ol * p.stride_l;
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = oy * p.stride_h - ph;
      const int ky0 = std::max(0, -y0), ky1 = std::min(kh, in_h - y0);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = ox * p.stride_w - pw;
        const int kx0 = std::max(0, -x0), kx1 = std::min(kw, in_w - x0);
        T* out = &y.at(ol, oy, ox, 0);
        const T* bp = p.b.data();
        for (int k = 0; k < co; ++k) out[k] = bp[k];
        for (int kl = 0; kl < kd; ++kl) {
          for (int ky = ky0; ky < ky1; ++ky) {
            for (int kx = kx0; kx < kx1; ++kx) {
              const T* xp = &x.at(l0 + kl, y0 + ky, x0 + kx, 0);
              const T* wp = p.w.data() + (((kl * kh + ky) * kw + kx) * ci) * co;
              for (int c = 0; c < ci; ++c) {
                const T xv = xp[c];
                const T* wrow = wp + c * co;
                for (int k = 0; k < co; ++k) out[k] += xv * wrow[k];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> conv3d_backward(const Tensor<T>& x, const Conv3dParams<T>& p, const Tensor<T>& gy,
                          Conv3dParams<T>* grad) {
  const int in_l = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), ci = x.dim(3);
  const int kd = p.kd(), kh = p.kh(), kw = p.kw(), co = p.out_channels();
  check_eq(gy.dim(0), valid_out(in_l, kd, p.stride_l), "conv3d grad length");
  check_eq(gy.dim(1), same_out(in_h, p.stride_h), "conv3d grad height");
  check_eq(gy.dim(2), same_out(in_w, p.stride_w), "conv3d grad width");
  check_eq(gy.dim(3), co, "conv3d grad channels");
  const int ph = same_pad_before(in_h, kh, p.stride_h);
  const int pw = same_pad_before(in_w, kw, p.stride_w);

  Tensor<T> gx = Tensor<T>::zeros_like(x);
  for (int ol = 0; ol < gy.dim(0); ++ol) {
    const int l0 = ol * p.stride_l;
    for (int oy = 0; oy < gy.dim(1); ++oy) {
      const int y0 = oy * p.stride_h - ph;
      const int ky0 = std::max(0, -y0), ky1 = std::min(kh, in_h - y0);
      for (int ox = 0; ox < gy.dim(2); ++ox) {
        const int x0 = ox * p.stride_w - pw;
        const int kx0 = std::max(0, -x0), kx1 = std::min(kw, in_w - x0);
        const T* gyp = &gy.at(ol, oy, ox, 0);
        if (grad) {
          T* gbp = grad->b.data();
          for (int k = 0; k < co; ++k) gbp[k] += gyp[k];
        }
        for (int kl = 0; kl < kd; ++kl) {
          for (int ky = ky0; ky < ky1; ++ky) {
            for (int kx = kx0; kx < kx1; ++kx) {
              const T* xp = &x.at(l0 + kl, y0 + ky, x0 + kx, 0);
              T* gxp = &gx.at(l0 + kl, y0 + ky, x0 + kx, 0);
              const std::size_t woff = std::size_t(((kl * kh + ky) * kw + kx) * ci) * co;
              const T* wp = p.w.data() + woff;
              T* gwp = grad ? grad->w.data() + woff : nullptr;
              for (int c = 0; c < ci; ++c) {
                const T* wrow = wp + c * co;
                T acc = 0;
                for (int k = 0; k < co; ++k) acc += gyp[k] * wrow[k];
                gxp[c] += acc;
                if (gwp) {
                  const T xv = xp[c];
                  T* gwrow = gwp + c * co;
                  for (int k = 0; k < co; ++k) gwrow[k] += xv * gyp[k];
                }
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

template <typename T>
Tensor<T> elu(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros_like(x);
  const T* xp = x.data();
  T* yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) yp[i] = xp[i] > 0 ? xp[i] : std::expm1(xp[i]);
  return y;
}

template <typename T>
Tensor<T> elu_backward(const Tensor<T>& x, const Tensor<T>& gy, bool guided) {
  Tensor<T> gx = Tensor<T>::zeros_like(x);
  const T* xp = x.data();
  const T* gp = gy.data();
  T* op = gx.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    T up = gp[i];
    if (guided && up < 0) up = 0;
    op[i] = up * (xp[i] > 0 ? T(1) : std::exp(xp[i]));
  }
  return gx;
}

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros_like(x);
  const T* xp = x.data();
  T* yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) yp[i] = std::tanh(xp[i]);
  return y;
}

template <typename T>
Tensor<T> tanh_backward_from_output(const Tensor<T>& y, const Tensor<T>& gy) {
  Tensor<T> gx = Tensor<T>::zeros_like(y);
  const T* yp = y.data();
  const T* gp = gy.data();
  T* op = gx.data();
  for (std::size_t i = 0; i < y.size(); ++i) op[i] = gp[i] * (T(1) - yp[i] * yp[i]);
  return gx;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros_like(x);
  const T* xp = x.data();
  T* yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) yp[i] = sigmoid_scalar(xp[i]);
  return y;
}

template <typename T>
Tensor<T> sigmoid_backward_from_output(const Tensor<T>& y, const Tensor<T>& gy) {
  Tensor<T> gx = Tensor<T>::zeros_like(y);
  const T* yp = y.data();
  const T* gp = gy.data();
  T* op = gx.data();
  for (std::size_t i = 0; i < y.size(); ++i) op[i] = gp[i] * yp[i] * (T(1) - yp[i]);
  return gx;
}

template <typename T>
ConvLstmState<T> convlstm_step(const Tensor<T>& x, const ConvLstmState<T>& state,
                               const ConvLstmParams<T>& p, ConvLstmStepCache<T>* cache) {
  const int H = x.dim(0), W = x.dim(1);
  const int ch = p.hidden_channels();
  check_eq(x.dim(2), p.input_channels(), "convlstm input channels");
  check_eq(state.h.dim(2), ch, "convlstm hidden channels");

  Tensor<T> xh = concat_channels(x, state.h);
  Tensor<T> z = conv2d_core(xh, p.w, &p.b, 1, 1);

  Tensor<T> i({H, W, ch}), f({H, W, ch}), g({H, W, ch}), o({H, W, ch});
  const int n = H * W;
  {
    const T* zp = z.data();
    T* ip = i.data();
    T* fp = f.data();
    T* gp = g.data();
    T* op = o.data();
    for (int pos = 0; pos < n; ++pos) {
      const T* zr = zp + std::size_t(pos) * 4 * ch;
      for (int c = 0; c < ch; ++c) {
        ip[pos * ch + c] = sigmoid_scalar(zr[c]);
        fp[pos * ch + c] = sigmoid_scalar(zr[ch + c]);
        gp[pos * ch + c] = std::tanh(zr[2 * ch + c]);
        op[pos * ch + c] = sigmoid_scalar(zr[3 * ch + c]);
      }
    }
  }

  ConvLstmState<T> out = ConvLstmState<T>::zeros(H, W, ch);
  {
    const T* ip = i.data();
    const T* fp = f.data();
    const T* gp = g.data();
    const T* op = o.data();
    const T* cp = state.c.data();
    T* cn = out.c.data();
    T* hn = out.h.data();
    for (std::size_t k = 0; k < out.c.size(); ++k) {
      cn[k] = fp[k] * cp[k] + ip[k] * gp[k];
      hn[k] = op[k] * std::tanh(cn[k]);
    }
  }
  if (cache) {
    cache->xh = std::move(xh);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c_prev = state.c;
    cache->c_new = out.c;
  }
  return out;
}

template <typename T>
void convlstm_step_backward(const ConvLstmStepCache<T>& cache, const ConvLstmParams<T>& p,
                            const Tensor<T>& gh, const Tensor<T>* gc, Tensor<T>* gx,
                            Tensor<T>* gh_prev, Tensor<T>* gc_prev, ConvLstmParams<T>* grad) {
  const int H = cache.i.dim(0), W = cache.i.dim(1), ch = cache.i.dim(2);
  const int cin = p.input_channels();
  Tensor<T> gz({H, W, 4 * ch});
  Tensor<T> gcp = Tensor<T>::zeros_like(cache.c_prev);
  {
    const T* ip = cache.i.data();
    const T* fp = cache.f.data();
    const T* gp = cache.g.data();
    const T* op = cache.o.data();
    const T* cpv = cache.c_prev.data();
    const T* cnv = cache.c_new.data();
    const T* ghp = gh.data();
    const T* gcv = gc ? gc->data() : nullptr;
    T* gzp = gz.data();
    T* gcpp = gcp.data();
    const int n = H * W;
    for (int pos = 0; pos < n; ++pos) {
      T* zr = gzp + std::size_t(pos) * 4 * ch;
      for (int c = 0; c < ch; ++c) {
        const std::size_t k = std::size_t(pos) * ch + c;
        const T iv = ip[k], fv = fp[k], gv = gp[k], ov = op[k];
        const T tc = std::tanh(cnv[k]);
        const T ghv = ghp[k];
        T gct = ghv * ov * (T(1) - tc * tc);
        if (gcv) gct += gcv[k];
        zr[c] = (gct * gv) * iv * (T(1) - iv);
        zr[ch + c] = (gct * cpv[k]) * fv * (T(1) - fv);
        zr[2 * ch + c] = (gct * iv) * (T(1) - gv * gv);
        zr[3 * ch + c] = (ghv * tc) * ov * (T(1) - ov);
        gcpp[k] = gct * fv;
      }
    }
  }
  Tensor<T> gxh = conv2d_backward_core(cache.xh, p.w, gz, 1, 1, grad ? &grad->w : nullptr,
                                       grad ? &grad->b : nullptr);
  if (gx) *gx = slice_channels(gxh, 0, cin);
  if (gh_prev) *gh_prev = slice_channels(gxh, cin, cin + ch);
  if (gc_prev) *gc_prev = std::move(gcp);
}

namespace {

template <typename T>
void fill_glorot(Tensor<T>& w, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  T* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = T(rng.uniform(-limit, limit));
}

}  // namespace

template <typename T>
void glorot_init(Conv2dParams<T>& p, Rng& rng) {
  const int k = p.kh() * p.kw();
  fill_glorot(p.w, k * p.in_channels(), k * p.out_channels(), rng);
  p.b.set_zero();
}

template <typename T>
void glorot_init(Conv3dParams<T>& p, Rng& rng) {
  const int k = p.kd() * p.kh() * p.kw();
  fill_glorot(p.w, k * p.in_channels(), k * p.out_channels(), rng);
  p.b.set_zero();
}

template <typename T>
void glorot_init(ConvLstmParams<T>& p, Rng& rng) {
  const int ch = p.hidden_channels();
  const int k = p.w.dim(0) * p.w.dim(1);
  fill_glorot(p.w, k * p.w.dim(2), k * 4 * ch, rng);
  p.b.set_zero();
  T* bp = p.b.data();
  for (int c = ch; c < 2 * ch; ++c) bp[c] = T(1);  // start remembering by default
}

#define STVAD_INSTANTIATE_NN(T)                                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Conv2dParams<T>&);                       \
  template Tensor<T> conv2d_backward(const Tensor<T>&, const Conv2dParams<T>&,               \
                                     const Tensor<T>&, Conv2dParams<T>*);                    \
  template Tensor<T> deconv2d(const Tensor<T>&, const Conv2dParams<T>&);                     \
  template Tensor<T> deconv2d_backward(const Tensor<T>&, const Conv2dParams<T>&,             \
                                       const Tensor<T>&, Conv2dParams<T>*);                  \
  template Tensor<T> conv3d(const Tensor<T>&, const Conv3dParams<T>&);                       \
  template Tensor<T> conv3d_backward(const Tensor<T>&, const Conv3dParams<T>&,               \
                                     const Tensor<T>&, Conv3dParams<T>*);                    \
  template Tensor<T> elu(const Tensor<T>&);                                                  \
  template Tensor<T> elu_backward(const Tensor<T>&, const Tensor<T>&, bool);                 \
  template Tensor<T> tanh_act(const Tensor<T>&);                                             \
  template Tensor<T> tanh_backward_from_output(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> sigmoid(const Tensor<T>&);                                              \
  template Tensor<T> sigmoid_backward_from_output(const Tensor<T>&, const Tensor<T>&);       \
  template ConvLstmState<T> convlstm_step(const Tensor<T>&, const ConvLstmState<T>&,         \
                                          const ConvLstmParams<T>&, ConvLstmStepCache<T>*);  \
  template void convlstm_step_backward(const ConvLstmStepCache<T>&, const ConvLstmParams<T>&, \
                                       const Tensor<T>&, const Tensor<T>*, Tensor<T>*,       \
                                       Tensor<T>*, Tensor<T>*, ConvLstmParams<T>*);          \
  template void glorot_init(Conv2dParams<T>&, Rng&);                                         \
  template void glorot_init(Conv3dParams<T>&, Rng&);                                         \
  template void glorot_init(ConvLstmParams<T>&, Rng&);

STVAD_INSTANTIATE_NN(float)
STVAD_INSTANTIATE_NN(double)

#undef STVAD_INSTANTIATE_NN

}  // namespace stvad
