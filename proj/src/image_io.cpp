#include "stvad/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace stvad {

unsigned char to_byte(float v) {
  const float scaled = (v + 1.0f) * 127.5f;
  const int q = static_cast<int>(std::lround(scaled));
  return static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q));
}

float from_byte(unsigned char b) { return static_cast<float>(b) * (2.0f / 255.0f) - 1.0f; }

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

TensorF from_bytes(const std::vector<unsigned char>& gray, int h, int w) {
  TensorF out({h, w, 1});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_byte(gray[i]);
  return out;
}

// --- PGM (P5 binary / P2 ascii), 8-bit ----------------------------------

int next_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comments, then parses one unsigned integer.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) return -1;
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

TensorF load_pgm(const std::string& path, bool binary) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot open image: " + path);
  char magic[2];
  in.read(magic, 2);
  const int w = next_pgm_token(in);
  const int h = next_pgm_token(in);
  const int maxval = next_pgm_token(in);
  if (w <= 0 || h <= 0) throw std::runtime_error("malformed PGM header: " + path);
  if (maxval <= 0 || maxval > 255)
    throw std::runtime_error("unsupported PGM maxval (want 1..255): " + path);
  std::vector<unsigned char> gray(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  if (binary) {
    in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (in.gcount() != static_cast<std::streamsize>(gray.size()))
      throw std::runtime_error("truncated PGM pixel data: " + path);
  } else {
    for (auto& px : gray) {
      const int v = next_pgm_token(in);
      if (v < 0) throw std::runtime_error("truncated PGM pixel data: " + path);
      px = static_cast<unsigned char>(v);
    }
  }
  if (maxval != 255)
    for (auto& px : gray)
      px = static_cast<unsigned char>((px * 255 + maxval / 2) / maxval);
  return from_bytes(gray, h, w);
}

void save_pgm(const std::string& path, const TensorF& frame) {
  const int h = frame.dim(0), w = frame.dim(1);
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw std::runtime_error("cannot write image: " + path);
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) row[static_cast<std::size_t>(x)] = to_byte(frame.at(y, x, 0));
    out.write(reinterpret_cast<const char*>(row.data()), w);
  }
  if (!out.good()) throw std::runtime_error("failed writing image: " + path);
}

// --- PNG via libpng ------------------------------------------------------

TensorF load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  int w = 0, h = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("corrupt PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  // Normalize everything to 8-bit gray or RGB.
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported PNG channel layout: " + path);
  }
  const std::size_t stride = static_cast<std::size_t>(w) * static_cast<std::size_t>(channels);
  pixels.resize(stride * static_cast<std::size_t>(h));
  rows.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + stride * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<unsigned char> gray(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  if (channels == 1) {
    gray = std::move(pixels);
  } else {
    for (std::size_t i = 0; i < gray.size(); ++i) {
      const unsigned char* px = &pixels[i * 3];
      // ITU-R 601 luminance.
      const double y601 = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
      const long q = std::lround(y601);
      gray[i] = static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q));
    }
  }
  return from_bytes(gray, h, w);
}

void save_png(const std::string& path, const TensorF& frame) {
  const int h = frame.dim(0), w = frame.dim(1);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write image: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  std::vector<unsigned char> row(static_cast<std::size_t>(w));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed writing image: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) row[static_cast<std::size_t>(x)] = to_byte(frame.at(y, x, 0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void check_frame(const TensorF& frame) {
  if (frame.rank() != 3 || frame.dim(2) != 1 || frame.dim(0) < 1 || frame.dim(1) < 1)
    throw std::invalid_argument("expected a single-channel (h, w, 1) frame");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TensorF load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe.good()) throw std::runtime_error("cannot open image: " + path);
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  probe.close();
  if (magic[0] == 'P' && magic[1] == '5') return load_pgm(path, true);
  if (magic[0] == 'P' && magic[1] == '2') return load_pgm(path, false);
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return load_png(path);
  throw std::runtime_error("unrecognized image format (want PNG or PGM): " + path);
}

void save_image(const std::string& path, const TensorF& frame) {
  check_frame(frame);
  if (ends_with(path, ".png")) {
    save_png(path, frame);
  } else if (ends_with(path, ".pgm")) {
    save_pgm(path, frame);
  } else {
    throw std::invalid_argument("unsupported image extension (want .png or .pgm): " + path);
  }
}

TensorF resize_bilinear(const TensorF& src, int out_h, int out_w) {
  check_frame(src);
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize target must be positive");
  const int in_h = src.dim(0), in_w = src.dim(1);
  if (in_h == out_h && in_w == out_w) return src;

  TensorF out({out_h, out_w, 1});
  const float sy = static_cast<float>(in_h) / static_cast<float>(out_h);
  const float sx = static_cast<float>(in_w) / static_cast<float>(out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    // Half-pixel centers: sample where the output pixel's middle lands.
    float fy = (static_cast<float>(oy) + 0.5f) * sy - 0.5f;
    if (fy < 0.0f) fy = 0.0f;
    if (fy > static_cast<float>(in_h - 1)) fy = static_cast<float>(in_h - 1);
    const int y0 = static_cast<int>(fy);
    const int y1 = y0 + 1 < in_h ? y0 + 1 : y0;
    const float wy = fy - static_cast<float>(y0);
    for (int ox = 0; ox < out_w; ++ox) {
      float fx = (static_cast<float>(ox) + 0.5f) * sx - 0.5f;
      if (fx < 0.0f) fx = 0.0f;
      if (fx > static_cast<float>(in_w - 1)) fx = static_cast<float>(in_w - 1);
      const int x0 = static_cast<int>(fx);
      const int x1 = x0 + 1 < in_w ? x0 + 1 : x0;
      const float wx = fx - static_cast<float>(x0);
      const float top = src.at(y0, x0, 0) * (1.0f - wx) + src.at(y0, x1, 0) * wx;
      const float bot = src.at(y1, x0, 0) * (1.0f - wx) + src.at(y1, x1, 0) * wx;
      out.at(oy, ox, 0) = top * (1.0f - wy) + bot * wy;
    }
  }
  return out;
}

}  // namespace stvad
