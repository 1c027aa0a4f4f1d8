#include "stvad/models.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace stvad {
namespace {

std::string shape3(int h, int w, int c) {
  return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

std::string shape4(int l, int h, int w, int c) {
  return std::to_string(l) + "x" + shape3(h, w, c);
}

template <typename T>
void check_frame(const Tensor<T>& f, int size, const char* who) {
  if (f.rank() != 3 || f.dim(0) != size || f.dim(1) != size || f.dim(2) != 1) {
    throw std::invalid_argument(std::string(who) + ": expected frame " +
                                shape3(size, size, 1) + ", got " + f.shape_str());
  }
}

}  // namespace

void GeneratorConfig::validate() const {
  if (input_size < 8 || input_size % 8 != 0)
    throw std::invalid_argument("generator input_size must be a positive multiple of 8");
  if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
  if (half_window < 1) throw std::invalid_argument("half_window must be >= 1");
}

int DiscriminatorConfig::patch_grid() const {
  int s = input_size;
  for (int i = 0; i < 5; ++i) s = same_out(s, 2);
  return s;
}

void DiscriminatorConfig::validate() const {
  if (input_size < 1) throw std::invalid_argument("discriminator input_size must be >= 1");
  if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
  // temporal kernels (5,3,3,3,1,1) at stride 1 need at least 11 frames
  if (sequence_length < 11)
    throw std::invalid_argument("discriminator sequence_length must be >= 11");
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

template <typename T>
Generator<T>::Generator(const GeneratorConfig& c)
    : cfg(c),
      enc1(5, 5, 1, c.base_channels, 2, 2),
      enc2(5, 5, c.base_channels, 2 * c.base_channels, 2, 2),
      enc3(3, 3, 2 * c.base_channels, 4 * c.base_channels, 2, 2),
      enc4(3, 3, 4 * c.base_channels, 8 * c.base_channels, 1, 1),
      lstm_fwd(3, 3, 8 * c.base_channels, c.hidden()),
      lstm_bwd(3, 3, 8 * c.base_channels, c.hidden()),
      lstm_comb(3, 3, 2 * c.hidden(), 2 * c.hidden()),
      dec1(3, 3, 2 * c.hidden(), 4 * c.base_channels, 1, 1),
      dec2(3, 3, 4 * c.base_channels, 2 * c.base_channels, 2, 2),
      dec3(5, 5, 2 * c.base_channels, c.base_channels, 2, 2),
      dec4(5, 5, c.base_channels, 1, 2, 2) {
  c.validate();
}

template <typename T>
void Generator<T>::init(Rng& rng) {
  glorot_init(enc1, rng);
  glorot_init(enc2, rng);
  glorot_init(enc3, rng);
  glorot_init(enc4, rng);
  glorot_init(lstm_fwd, rng);
  glorot_init(lstm_bwd, rng);
  glorot_init(lstm_comb, rng);
  glorot_init(dec1, rng);
  glorot_init(dec2, rng);
  glorot_init(dec3, rng);
  glorot_init(dec4, rng);
}

template <typename T>
Tensor<T> Generator<T>::forward(const std::vector<Tensor<T>>& window,
                                GeneratorCache<T>* cache) const {
  const int k = cfg.half_window;
  if (static_cast<int>(window.size()) != 2 * k)
    throw std::invalid_argument("generator window must hold " + std::to_string(2 * k) +
                                " frames, got " + std::to_string(window.size()));
  for (const auto& f : window) check_frame(f, cfg.input_size, "generator");

  if (cache) {
    cache->enc.resize(2 * k);
    cache->fsteps.resize(k);
    cache->bsteps.resize(k);
  }

  // per-frame spatial encoder
  std::vector<Tensor<T>> feats(2 * k);
  for (int i = 0; i < 2 * k; ++i) {
    EncoderCache<T> ec;
    ec.x = window[i];
    ec.z1 = conv2d(ec.x, enc1);
    ec.a1 = elu(ec.z1);
    ec.z2 = conv2d(ec.a1, enc2);
    ec.a2 = elu(ec.z2);
    ec.z3 = conv2d(ec.a2, enc3);
    ec.a3 = elu(ec.z3);
    ec.z4 = conv2d(ec.a3, enc4);
    ec.a4 = elu(ec.z4);
    feats[i] = ec.a4;
    if (cache) (*cache).enc[i] = std::move(ec);
  }

  const int L = cfg.latent_size();
  const int h = cfg.hidden();

  // past context in natural order: t-k ... t-1
  ConvLstmState<T> sf = ConvLstmState<T>::zeros(L, L, h);
  for (int i = 0; i < k; ++i)
    sf = convlstm_step(feats[i], sf, lstm_fwd, cache ? &cache->fsteps[i] : nullptr);

  // future context in reverse order: t+k ... t+1
  ConvLstmState<T> sb = ConvLstmState<T>::zeros(L, L, h);
  for (int j = 0; j < k; ++j)
    sb = convlstm_step(feats[2 * k - 1 - j], sb, lstm_bwd, cache ? &cache->bsteps[j] : nullptr);

  // one combined step seeded with the concatenated terminal states
  Tensor<T> cx = concat_channels(sf.h, sb.h);
  ConvLstmState<T> s0{concat_channels(sf.h, sb.h), concat_channels(sf.c, sb.c)};
  ConvLstmState<T> sc = convlstm_step(cx, s0, lstm_comb, cache ? &cache->comb_step : nullptr);

  // spatial decoder
  DecoderCache<T> dc;
  dc.in = sc.h;
  dc.z1 = deconv2d(dc.in, dec1);
  dc.a1 = elu(dc.z1);
  dc.z2 = deconv2d(dc.a1, dec2);
  dc.a2 = elu(dc.z2);
  dc.z3 = deconv2d(dc.a2, dec3);
  dc.a3 = elu(dc.z3);
  dc.z4 = deconv2d(dc.a3, dec4);
  dc.y = tanh_act(dc.z4);
  Tensor<T> out = dc.y;
  if (cache) cache->dec = std::move(dc);
  return out;
}

template <typename T>
void Generator<T>::backward(const GeneratorCache<T>& cache, const Tensor<T>& gy,
                            Generator<T>* grad, std::vector<Tensor<T>>* gframes) const {
  const int k = cfg.half_window;
  const int h = cfg.hidden();

  // decoder
  Tensor<T> gz = tanh_backward_from_output(cache.dec.y, gy);
  Tensor<T> ga = deconv2d_backward(cache.dec.a3, dec4, gz, grad ? &grad->dec4 : nullptr);
  gz = elu_backward(cache.dec.z3, ga);
  ga = deconv2d_backward(cache.dec.a2, dec3, gz, grad ? &grad->dec3 : nullptr);
  gz = elu_backward(cache.dec.z2, ga);
  ga = deconv2d_backward(cache.dec.a1, dec2, gz, grad ? &grad->dec2 : nullptr);
  gz = elu_backward(cache.dec.z1, ga);
  Tensor<T> gh_comb = deconv2d_backward(cache.dec.in, dec1, gz, grad ? &grad->dec1 : nullptr);

  // combined step: gradient reaches the terminal states through both the
  // input path and the initial-state path
  Tensor<T> gx_comb, gh0, gc0;
  convlstm_step_backward<T>(cache.comb_step, lstm_comb, gh_comb, nullptr, &gx_comb, &gh0, &gc0,
                            grad ? &grad->lstm_comb : nullptr);
  Tensor<T> ghf = slice_channels(gx_comb, 0, h);
  accumulate(ghf, slice_channels(gh0, 0, h));
  Tensor<T> ghb = slice_channels(gx_comb, h, 2 * h);
  accumulate(ghb, slice_channels(gh0, h, 2 * h));
  Tensor<T> gcf = slice_channels(gc0, 0, h);
  Tensor<T> gcb = slice_channels(gc0, h, 2 * h);

  std::vector<Tensor<T>> gfeat(2 * k);

  // unroll the past-direction recurrence backwards
  Tensor<T> gh = std::move(ghf), gc = std::move(gcf);
  for (int i = k - 1; i >= 0; --i) {
    Tensor<T> gx_i, ghp, gcp;
    convlstm_step_backward(cache.fsteps[i], lstm_fwd, gh, &gc, &gx_i, &ghp, &gcp,
                           grad ? &grad->lstm_fwd : nullptr);
    gfeat[i] = std::move(gx_i);
    gh = std::move(ghp);
    gc = std::move(gcp);
  }

  // future-direction steps consumed frames 2k-1, 2k-2, ..., k
  gh = std::move(ghb);
  gc = std::move(gcb);
  for (int j = k - 1; j >= 0; --j) {
    Tensor<T> gx_j, ghp, gcp;
    convlstm_step_backward(cache.bsteps[j], lstm_bwd, gh, &gc, &gx_j, &ghp, &gcp,
                           grad ? &grad->lstm_bwd : nullptr);
    gfeat[2 * k - 1 - j] = std::move(gx_j);
    gh = std::move(ghp);
    gc = std::move(gcp);
  }

  // encoder, per frame
  if (gframes) gframes->resize(2 * k);
  for (int i = 0; i < 2 * k; ++i) {
    const EncoderCache<T>& ec = cache.enc[i];
    Tensor<T> g = elu_backward(ec.z4, gfeat[i]);
    g = conv2d_backward(ec.a3, enc4, g, grad ? &grad->enc4 : nullptr);
    g = elu_backward(ec.z3, g);
    g = conv2d_backward(ec.a2, enc3, g, grad ? &grad->enc3 : nullptr);
    g = elu_backward(ec.z2, g);
    g = conv2d_backward(ec.a1, enc2, g, grad ? &grad->enc2 : nullptr);
    g = elu_backward(ec.z1, g);
    g = conv2d_backward(ec.x, enc1, g, grad ? &grad->enc1 : nullptr);
    if (gframes) (*gframes)[i] = std::move(g);
  }
}

template <typename T>
std::vector<NamedParam<T>> Generator<T>::params() {
  return {
      {"enc1.w", &enc1.w},           {"enc1.b", &enc1.b},
      {"enc2.w", &enc2.w},           {"enc2.b", &enc2.b},
      {"enc3.w", &enc3.w},           {"enc3.b", &enc3.b},
      {"enc4.w", &enc4.w},           {"enc4.b", &enc4.b},
      {"lstm_fwd.w", &lstm_fwd.w},   {"lstm_fwd.b", &lstm_fwd.b},
      {"lstm_bwd.w", &lstm_bwd.w},   {"lstm_bwd.b", &lstm_bwd.b},
      {"lstm_comb.w", &lstm_comb.w}, {"lstm_comb.b", &lstm_comb.b},
      {"dec1.w", &dec1.w},           {"dec1.b", &dec1.b},
      {"dec2.w", &dec2.w},           {"dec2.b", &dec2.b},
      {"dec3.w", &dec3.w},           {"dec3.b", &dec3.b},
      {"dec4.w", &dec4.w},           {"dec4.b", &dec4.b},
  };
}

template <typename T>
std::size_t Generator<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<Generator<T>*>(this)->params()) n += p.tensor->size();
  return n;
}

template <typename T>
void Generator<T>::zero_params() {
  for (auto& p : params()) p.tensor->set_zero();
}

template <typename T>
std::vector<std::pair<std::string, std::string>> Generator<T>::describe() const {
  const int H = cfg.input_size, b = cfg.base_channels, h = cfg.hidden();
  const int s1 = same_out(H, 2), s2 = same_out(s1, 2), s3 = same_out(s2, 2);
  return {
      {"Input", shape3(H, H, 1)},
      {"Conv1", shape3(s1, s1, b)},
      {"Conv2", shape3(s2, s2, 2 * b)},
      {"Conv3", shape3(s3, s3, 4 * b)},
      {"Conv4", shape3(s3, s3, 8 * b)},
      {"Forward ConvLSTM", shape3(s3, s3, h)},
      {"Backward ConvLSTM", shape3(s3, s3, h)},
      {"Combined ConvLSTM", shape3(s3, s3, 2 * h)},
      {"DeConv1", shape3(s3, s3, 4 * b)},
      {"DeConv2", shape3(s3 * 2, s3 * 2, 2 * b)},
      {"DeConv3", shape3(s3 * 4, s3 * 4, b)},
      {"DeConv4", shape3(s3 * 8, s3 * 8, 1)},
  };
}

// ---------------------------------------------------------------------------
// Discriminator
// ---------------------------------------------------------------------------

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& c)
    : cfg(c),
      c1(5, 5, 5, 1, 2 * c.base_channels, 1, 2, 2),
      c2(3, 5, 5, 2 * c.base_channels, 4 * c.base_channels, 1, 2, 2),
      c3(3, 3, 3, 4 * c.base_channels, 8 * c.base_channels, 1, 2, 2),
      c4(3, 3, 3, 8 * c.base_channels, 16 * c.base_channels, 1, 2, 2),
      c5(1, 3, 3, 16 * c.base_channels, 32 * c.base_channels, 1, 2, 2),
      c6(1, 3, 3, 32 * c.base_channels, 1, 1, 1, 1) {
  c.validate();
}

template <typename T>
void Discriminator<T>::init(Rng& rng) {
  glorot_init(c1, rng);
  glorot_init(c2, rng);
  glorot_init(c3, rng);
  glorot_init(c4, rng);
  glorot_init(c5, rng);
  glorot_init(c6, rng);
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& seq, DiscriminatorCache<T>* cache) const {
  if (seq.rank() != 4 || seq.dim(0) != cfg.sequence_length || seq.dim(1) != cfg.input_size ||
      seq.dim(2) != cfg.input_size || seq.dim(3) != 1) {
    throw std::invalid_argument(
        "discriminator: expected sequence " +
        shape4(cfg.sequence_length, cfg.input_size, cfg.input_size, 1) + ", got " +
        seq.shape_str());
  }
  DiscriminatorCache<T> local;
  DiscriminatorCache<T>& dc = cache ? *cache : local;
  dc.x = seq;
  const Conv3dParams<T>* layers[6] = {&c1, &c2, &c3, &c4, &c5, &c6};
  const Tensor<T>* in = &dc.x;
  for (int i = 0; i < 5; ++i) {
    dc.z[i] = conv3d(*in, *layers[i]);
    dc.a[i] = elu(dc.z[i]);
    in = &dc.a[i];
  }
  dc.z[5] = conv3d(*in, c6);
  dc.y = sigmoid(dc.z[5]);
  return dc.y;
}

template <typename T>
Tensor<T> Discriminator<T>::backward(const DiscriminatorCache<T>& cache, const Tensor<T>& gy,
                                     Discriminator<T>* grad, bool guided) const {
  Tensor<T> g = sigmoid_backward_from_output(cache.y, gy);
  g = conv3d_backward(cache.a[4], c6, g, grad ? &grad->c6 : nullptr);
  g = elu_backward(cache.z[4], g, guided);
  g = conv3d_backward(cache.a[3], c5, g, grad ? &grad->c5 : nullptr);
  g = elu_backward(cache.z[3], g, guided);
  g = conv3d_backward(cache.a[2], c4, g, grad ? &grad->c4 : nullptr);
  g = elu_backward(cache.z[2], g, guided);
  g = conv3d_backward(cache.a[1], c3, g, grad ? &grad->c3 : nullptr);
  g = elu_backward(cache.z[1], g, guided);
  g = conv3d_backward(cache.a[0], c2, g, grad ? &grad->c2 : nullptr);
  g = elu_backward(cache.z[0], g, guided);
  return conv3d_backward(cache.x, c1, g, grad ? &grad->c1 : nullptr);
}

template <typename T>
std::vector<NamedParam<T>> Discriminator<T>::params() {
  return {
      {"c1.w", &c1.w}, {"c1.b", &c1.b}, {"c2.w", &c2.w}, {"c2.b", &c2.b},
      {"c3.w", &c3.w}, {"c3.b", &c3.b}, {"c4.w", &c4.w}, {"c4.b", &c4.b},
      {"c5.w", &c5.w}, {"c5.b", &c5.b}, {"c6.w", &c6.w}, {"c6.b", &c6.b},
  };
}

template <typename T>
std::size_t Discriminator<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<Discriminator<T>*>(this)->params()) n += p.tensor->size();
  return n;
}

template <typename T>
void Discriminator<T>::zero_params() {
  for (auto& p : params()) p.tensor->set_zero();
}

template <typename T>
std::vector<std::pair<std::string, std::string>> Discriminator<T>::describe() const {
  const int b = cfg.base_channels;
  int L = cfg.sequence_length, s = cfg.input_size;
  const int kds[6] = {5, 3, 3, 3, 1, 1};
  const int chans[6] = {2 * b, 4 * b, 8 * b, 16 * b, 32 * b, 1};
  std::vector<std::pair<std::string, std::string>> rows;
  for (int i = 0; i < 6; ++i) {
    L = L - kds[i] + 1;
    if (i < 5) s = same_out(s, 2);
    rows.emplace_back("3D Conv" + std::to_string(i + 1), shape4(L, s, s, chans[i]));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sequence assembly
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> stack_frames(const std::vector<Tensor<T>>& frames) {
  if (frames.empty()) throw std::invalid_argument("stack_frames: empty frame list");
  const int H = frames[0].dim(0), W = frames[0].dim(1), C = frames[0].dim(2);
  Tensor<T> out({static_cast<int>(frames.size()), H, W, C});
  T* dst = out.data();
  for (const auto& f : frames) {
    if (!f.same_shape(frames[0]))
      throw std::invalid_argument("stack_frames: inconsistent frame shapes");
    std::copy(f.data(), f.data() + f.size(), dst);
    dst += f.size();
  }
  return out;
}

template <typename T>
Tensor<T> assemble_fake_sequence(const std::vector<Tensor<T>>& window,
                                 const Tensor<T>& generated) {
  if (window.empty() || window.size() % 2 != 0)
    throw std::invalid_argument("assemble_fake_sequence: window must hold 2k frames");
  if (!generated.same_shape(window[0]))
    throw std::invalid_argument("assemble_fake_sequence: generated frame shape mismatch");
  const std::size_t k = window.size() / 2;
  std::vector<Tensor<T>> frames;
  frames.reserve(window.size() + 1);
  for (std::size_t i = 0; i < k; ++i) frames.push_back(window[i]);
  frames.push_back(generated);
  for (std::size_t i = k; i < window.size(); ++i) frames.push_back(window[i]);
  return stack_frames(frames);
}

#define STVAD_INSTANTIATE_MODELS(T)                                                   \
  template struct Generator<T>;                                                       \
  template struct Discriminator<T>;                                                   \
  template Tensor<T> stack_frames(const std::vector<Tensor<T>>&);                     \
  template Tensor<T> assemble_fake_sequence(const std::vector<Tensor<T>>&,            \
                                            const Tensor<T>&);

STVAD_INSTANTIATE_MODELS(float)
STVAD_INSTANTIATE_MODELS(double)

#undef STVAD_INSTANTIATE_MODELS

}  // namespace stvad
