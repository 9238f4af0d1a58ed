#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "platewaste/dataio.hpp"
#include "platewaste/error.hpp"

namespace platewaste {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw Error(std::strchr(mode, 'r') ? ErrorCode::kMissingFile : ErrorCode::kIoError,
                "cannot open " + path.string());
  }
  return f;
}

struct RawMask {
  int width = 0;
  int height = 0;
  int color_type = 0;
  int bit_depth = 0;
  std::vector<Label> pixels;
  char error[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* raw = static_cast<RawMask*>(png_get_error_ptr(png));
  std::snprintf(raw->error, sizeof(raw->error), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

// Plain-C style body: nothing with a destructor lives across setjmp.
bool decode_indexed(std::FILE* fp, RawMask* raw) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, raw, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  png_bytep* rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    std::free(rows);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  raw->width = static_cast<int>(png_get_image_width(png, info));
  raw->height = static_cast<int>(png_get_image_height(png, info));
  raw->color_type = png_get_color_type(png, info);
  raw->bit_depth = png_get_bit_depth(png, info);
  const bool single = raw->color_type == PNG_COLOR_TYPE_GRAY ||
                      raw->color_type == PNG_COLOR_TYPE_PALETTE;
  if (!single || raw->bit_depth > 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    return true;  // caller reports the format problem
  }
  if (raw->bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  raw->pixels.resize(static_cast<std::size_t>(raw->width) * static_cast<std::size_t>(raw->height));
  rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * static_cast<std::size_t>(raw->height)));
  for (int y = 0; y < raw->height; ++y) {
    rows[y] = raw->pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(raw->width);
  }
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  std::free(rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace

LabelMask read_mask(const std::filesystem::path& path, int num_classes) {
  FilePtr fp = open_file(path, "rb");
  RawMask raw;
  if (!decode_indexed(fp.get(), &raw)) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " +
                                             (raw.error[0] ? raw.error : "not a PNG file"));
  }
  if (raw.color_type != PNG_COLOR_TYPE_GRAY && raw.color_type != PNG_COLOR_TYPE_PALETTE) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": mask must be single-channel (grayscale or palette)");
  }
  if (raw.bit_depth > 8) {
    throw Error(ErrorCode::kFormatError, path.string() + ": mask must be at most 8-bit, got " +
                                             std::to_string(raw.bit_depth) + "-bit");
  }
  int classes = num_classes;
  if (classes <= 0) {
    classes = 1;
    for (Label v : raw.pixels) classes = std::max(classes, static_cast<int>(v) + 1);
  }
  try {
    return LabelMask(raw.width, raw.height, classes, std::move(raw.pixels));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_mask(const LabelMask& mask, const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(mask.width());
  img.height = static_cast<png_uint_32>(mask.height());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, mask.labels().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + img.message);
  }
}

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::kFormatError, path.string() + ": " + img.message);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  const std::size_t plane = out.plane();
  auto data = out.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      data[c * plane + i] = static_cast<float>(buf[i * 3 + c]) / 255.0f;
    }
  }
  return out;
}

void write_image(const Image& image, const std::filesystem::path& path) {
  const std::size_t plane = image.plane();
  std::vector<png_byte> buf(plane * 3);
  const auto data = image.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(data[c * plane + i], 0.0f, 1.0f);
      buf[i * 3 + c] = static_cast<png_byte>(v * 255.0f + 0.5f);
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + img.message);
  }
}

}  // namespace platewaste
