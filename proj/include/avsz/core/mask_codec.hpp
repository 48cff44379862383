#pragma once

// Mask file codecs: 8-bit grayscale PNG (preferred) and the raw AVSM format
// ("AVSM", u32le width, u32le height, width*height bytes of {0,1}).

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "avsz/core/bytes.hpp"
#include "avsz/core/types.hpp"
#include "avsz/error.hpp"

namespace avsz {

// Grayscale values strictly above this become foreground.
inline constexpr std::uint8_t kMaskBinarizeThreshold = 127;

inline constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
inline constexpr char kAvsmMagic[4] = {'A', 'V', 'S', 'M'};

namespace detail {

struct PngReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->data.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cursor->data.data() + cursor->offset, length);
  cursor->offset += length;
}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<bytes::Buffer*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

inline void png_error_to_longjmp(png_structp png, png_const_charp message) {
  auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
  if (slot) *slot = message;
  png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

// Decodes a single-channel PNG into 8-bit gray levels. Gray of any bit
// depth, gray+alpha (alpha dropped) and palettes whose entries are all gray
// are accepted; colour images are rejected.
inline Mask decode_png_mask(std::span<const std::uint8_t> data) {
  std::string error_message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_message,
                                           png_error_to_longjmp, png_warning_ignore);
  if (!png) throw Error(Errc::kDecodeError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::kDecodeError, "libpng init failed");
  }

  PngReadCursor cursor{data, 0};
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::kDecodeError, "PNG: " + error_message);
  }

  png_set_read_fn(png, &cursor, png_read_from_memory);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  bool unsupported = false;
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_colorp palette = nullptr;
    int num_palette = 0;
    png_get_PLTE(png, info, &palette, &num_palette);
    for (int i = 0; i < num_palette; ++i) {
      if (palette[i].red != palette[i].green || palette[i].green != palette[i].blue) {
        unsupported = true;
      }
    }
    png_set_palette_to_rgb(png);
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  } else if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA) {
    unsupported = true;
  }
  if (unsupported) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::kUnsupportedFormat, "PNG mask must be single-channel");
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const png_size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != width) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::kUnsupportedFormat, "unexpected PNG row layout after gray conversion");
  }
  pixels.resize(static_cast<std::size_t>(width) * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<std::uint8_t> bits(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) bits[i] = pixels[i] > kMaskBinarizeThreshold ? 1 : 0;
  return Mask(width, height, std::move(bits));
}

inline bytes::Buffer encode_png_mask(const Mask& mask) {
  std::string error_message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_message,
                                            png_error_to_longjmp, png_warning_ignore);
  if (!png) throw Error(Errc::kIoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::kIoError, "libpng init failed");
  }

  bytes::Buffer out;
  std::vector<std::uint8_t> pixels(mask.size());
  std::vector<png_bytep> rows(mask.height());
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) pixels[i] = bits[i] ? 255 : 0;
  for (std::uint32_t y = 0; y < mask.height(); ++y)
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * mask.width();

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::kIoError, "PNG encode: " + error_message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace detail

inline bytes::Buffer encode_avsm(const Mask& mask) {
  bytes::Buffer out(kAvsmMagic, kAvsmMagic + 4);
  bytes::put_u32le(out, mask.width());
  bytes::put_u32le(out, mask.height());
  out.insert(out.end(), mask.bits().begin(), mask.bits().end());
  return out;
}

inline Mask decode_avsm(std::span<const std::uint8_t> data) {
  if (data.size() < 12 || std::memcmp(data.data(), kAvsmMagic, 4) != 0) {
    throw Error(Errc::kDecodeError, "missing AVSM header");
  }
  const std::uint32_t width = bytes::get_u32le(data, 4);
  const std::uint32_t height = bytes::get_u32le(data, 8);
  if (width < 1 || height < 1) throw Error(Errc::kDecodeError, "AVSM dimensions must be >= 1");
  const std::size_t area = static_cast<std::size_t>(width) * height;
  if (data.size() - 12 != area) {
    throw Error(Errc::kDecodeError, "AVSM payload is " + std::to_string(data.size() - 12) +
                                        " bytes, expected " + std::to_string(area));
  }
  std::vector<std::uint8_t> bits(data.begin() + 12, data.end());
  for (auto b : bits) {
    if (b > 1) throw Error(Errc::kDecodeError, "AVSM byte outside {0,1}");
  }
  return Mask(width, height, std::move(bits));
}

// Sniffs the format from the leading bytes.
inline Mask decode_mask_bytes(std::span<const std::uint8_t> data) {
  if (data.size() >= 8 && std::memcmp(data.data(), kPngMagic, 8) == 0) {
    return detail::decode_png_mask(data);
  }
  if (data.size() >= 4 && std::memcmp(data.data(), kAvsmMagic, 4) == 0) return decode_avsm(data);
  throw Error(Errc::kUnsupportedFormat, "mask is neither PNG nor AVSM");
}

inline Mask decode_mask(const std::filesystem::path& path) {
  bytes::Buffer data;
  try {
    data = bytes::read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::kDecodeError, e.detail());
  }
  try {
    return decode_mask_bytes(data);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

// ".avsm" paths get the raw format; everything else is written as PNG.
inline void encode_mask(const Mask& mask, const std::filesystem::path& path) {
  if (mask.empty()) throw Error(Errc::kInvalidArgument, "cannot encode a 0x0 mask");
  const bytes::Buffer data =
      path.extension() == ".avsm" ? encode_avsm(mask) : detail::encode_png_mask(mask);
  try {
    bytes::write_file_atomic(path, data);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(Errc::kIoError, e.what());
  }
}

}  // namespace avsz
