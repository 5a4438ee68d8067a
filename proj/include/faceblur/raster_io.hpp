#pragma once

// PNG read/write and JPEG read. Samples are mapped to [0,1] by v / maxval on
// read and quantized with round(clamp(v, 0, 1) * 255) on write, so an 8-bit
// PNG survives a read/write cycle bit-exactly.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "faceblur/image.hpp"

namespace faceblur {

class io_error : public error {
 public:
  using error::error;
};

namespace detail {

struct file_closer {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using file_ptr = std::unique_ptr<std::FILE, file_closer>;

inline file_ptr open_file(const std::filesystem::path& path, const char* mode) {
  file_ptr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw io_error("cannot open " + path.string());
  return f;
}

/// Interleaved 8/16-bit rows to planar floats, dropping alpha.
inline image deinterleave(std::size_t w, std::size_t h, std::size_t stored_channels, std::size_t color_channels,
                          const std::vector<double>& interleaved) {
  image img(w, h, color_channels);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < color_channels; ++c)
        img.at(x, y, c) = static_cast<float>(interleaved[(y * w + x) * stored_channels + c]);
  return img;
}

inline std::uint8_t quantize(float v) {
  const float c = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}
inline void png_warning_fn(png_structp, png_const_charp) {}

struct jpeg_error_state {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* state = reinterpret_cast<jpeg_error_state*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, state->message);
  std::longjmp(state->jump, 1);
}

}  // namespace detail

inline image read_png(const std::filesystem::path& path) {
  auto file = detail::open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw io_error(path.string() + ": not a PNG file");

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, detail::png_error_fn,
                                           detail::png_warning_fn);
  if (!png) throw io_error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  // Everything that owns memory lives outside the setjmp scope.
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  std::size_t channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  std::vector<double> values(n);
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      values[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) values[i] = buffer[i] / 255.0;
  }
  const std::size_t color_channels = channels >= 3 ? 3 : 1;
  return detail::deinterleave(w, h, channels, color_channels, values);
}

/// 8-bit PNG, gray or RGB, default zlib settings (deterministic output).
inline void write_png(const std::filesystem::path& path, const image& img) {
  if (img.empty()) throw io_error("write_png: empty image");
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const std::size_t ch = img.channels();
  std::vector<unsigned char> buffer(w * h * ch);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < ch; ++c) buffer[(y * w + x) * ch + c] = detail::quantize(img.at(x, y, c));
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = buffer.data() + y * w * ch;

  auto file = detail::open_file(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, detail::png_error_fn,
                                            detail::png_warning_fn);
  if (!png) throw io_error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error(path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline image read_jpeg(const std::filesystem::path& path) {
  auto file = detail::open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  detail::jpeg_error_state err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = detail::jpeg_error_exit;
  std::vector<unsigned char> buffer;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw io_error(path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t w = cinfo.output_width;
  const std::size_t h = cinfo.output_height;
  const std::size_t ch = static_cast<std::size_t>(cinfo.output_components);
  buffer.resize(w * h * ch);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * ch;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  std::vector<double> values(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) values[i] = buffer[i] / 255.0;
  return detail::deinterleave(w, h, ch, ch == 1 ? 1 : 3, values);
}

inline bool is_raster_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Reads PNG or JPEG, chosen by file signature.
inline image read_image(const std::filesystem::path& path) {
  unsigned char sig[8] = {};
  {
    auto f = detail::open_file(path, "rb");
    if (std::fread(sig, 1, 8, f.get()) < 3) throw io_error(path.string() + ": file too short");
  }
  if (!png_sig_cmp(sig, 0, 8)) return read_png(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return read_jpeg(path);
  throw io_error(path.string() + ": unsupported raster format (PNG or JPEG expected)");
}

}  // namespace faceblur
