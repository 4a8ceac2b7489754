#include "dcgn/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace dcgn {

namespace {

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;  // row-major, channel-interleaved
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

RawImage read_raw(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw InvalidInput("cannot open " + path.string());
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw InvalidInput(path.string() + " is not a PNG file");
  }

  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (!png) throw std::runtime_error("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  RawImage raw;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InvalidInput("failed reading " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int colour = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (colour == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colour == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (colour & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<std::size_t>(raw.height));
  rows.resize(static_cast<std::size_t>(raw.height));
  for (int y = 0; y < raw.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    raw.samples[i] = raw.bit_depth == 16
                         ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                         : buffer[i];
  }
  return raw;
}

void write_raw(const std::filesystem::path& path, const RawImage& raw) {
  if (raw.width < 1 || raw.height < 1) throw InvalidInput("cannot write an empty image");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");

  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (!png) throw std::runtime_error("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  const std::size_t bytes = raw.bit_depth == 16 ? 2 : 1;
  const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels * bytes;
  std::vector<png_byte> buffer(stride * static_cast<std::size_t>(raw.height));
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<png_byte>(raw.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(raw.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(raw.samples[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(raw.height));
  for (int y = 0; y < raw.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + stride * y;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed writing " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(raw.width), static_cast<png_uint_32>(raw.height),
               raw.bit_depth, raw.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint16_t to_byte(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageTensor read_rgb_png(const std::filesystem::path& path) {
  const RawImage raw = read_raw(path);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ImageTensor img = ImageTensor::zeros(raw.width, raw.height, 3);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
      for (int c = 0; c < 3; ++c) {
        const std::size_t src = raw.channels >= 3 ? base + c : base;
        img(x, y, c) = raw.samples[src] / scale;
      }
    }
  }
  return img;
}

void write_rgb_png(const std::filesystem::path& path, const ImageTensor& img) {
  if (img.channels() != 3 && img.channels() != 1) {
    throw InvalidInput("PNG output needs 1 or 3 channels");
  }
  RawImage raw{img.width(), img.height(), img.channels(), 8, {}};
  raw.samples.reserve(img.data().size());
  for (double v : img.data()) raw.samples.push_back(to_byte(v));
  write_raw(path, raw);
}

SegmentationMask read_mask_png(const std::filesystem::path& path) {
  const RawImage raw = read_raw(path);
  if (raw.channels != 1) throw InvalidInput(path.string() + " is not a greyscale mask");
  SegmentationMask mask{raw.width, raw.height, {}};
  mask.labels.assign(raw.samples.begin(), raw.samples.end());
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const SegmentationMask& mask) {
  RawImage raw{mask.width, mask.height, 1, 8, {}};
  for (int label : mask.labels) {
    if (label < 0 || label > 255) throw InvalidInput("class index does not fit in 8 bits");
    raw.samples.push_back(static_cast<std::uint16_t>(label));
  }
  write_raw(path, raw);
}

InstanceMask read_instance_png(const std::filesystem::path& path) {
  const RawImage raw = read_raw(path);
  if (raw.channels != 1) throw InvalidInput(path.string() + " is not a greyscale instance map");
  InstanceMask mask{raw.width, raw.height, {}};
  mask.ids.assign(raw.samples.begin(), raw.samples.end());
  return mask;
}

void write_instance_png(const std::filesystem::path& path, const InstanceMask& mask) {
  RawImage raw{mask.width, mask.height, 1, 16, {}};
  for (int id : mask.ids) {
    if (id < 0 || id > 65535) throw InvalidInput("instance id does not fit in 16 bits");
    raw.samples.push_back(static_cast<std::uint16_t>(id));
  }
  write_raw(path, raw);
}

std::array<std::uint8_t, 3> palette_colour(int class_id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{
      {230, 25, 75},
      {60, 180, 75},
      {0, 130, 200},
      {255, 225, 25},
      {145, 30, 180},
      {70, 240, 240},
      {245, 130, 48},
      {128, 128, 128},
  }};
  return kPalette[static_cast<std::size_t>(class_id) % kPalette.size()];
}

void write_overlay_png(const std::filesystem::path& path, const ImageTensor& img,
                       const SegmentationMask& mask, double opacity) {
  if (mask.width != img.width() || mask.height != img.height()) {
    throw InvalidInput("overlay mask does not match the image size");
  }
  ImageTensor out = ImageTensor::zeros(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto colour = palette_colour(std::max(mask.at(x, y), 0));
      for (int c = 0; c < 3; ++c) {
        const double base = img(x, y, img.channels() == 3 ? c : 0);
        out(x, y, c) = (1.0 - opacity) * base + opacity * colour[static_cast<std::size_t>(c)] / 255.0;
      }
    }
  }
  write_rgb_png(path, out);
}

}  // namespace dcgn
