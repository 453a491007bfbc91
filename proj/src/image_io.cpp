#include "ledsim/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace ledsim {
namespace fs = std::filesystem;

namespace {

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + quoted(path) + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + quoted(path));
}

std::uint32_t to_le(float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return bits;
}

float from_bits(std::uint32_t bits, bool little) {
  if ((std::endian::native == std::endian::little) != little) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

struct PfmData {
  int width{0}, height{0}, channels{1};
  std::vector<float> values;  // top row first, interleaved
};

void write_pfm_raw(const fs::path& path, const PfmData& d) {
  auto out = open_out(path);
  out << (d.channels == 3 ? "PF" : "Pf") << '\n' << d.width << ' ' << d.height << "\n-1.0\n";
  const std::size_t row_len = std::size_t(d.width) * d.channels;
  std::vector<std::uint32_t> row(row_len);
  for (int v = d.height - 1; v >= 0; --v) {
    for (std::size_t k = 0; k < row_len; ++k) row[k] = to_le(d.values[v * row_len + k]);
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row_len * 4));
  }
  finish(out, path);
}

PfmData read_pfm_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + quoted(path));
  std::string magic;
  long long w = 0, h = 0;
  double scale = 0;
  if (!(in >> magic >> w >> h >> scale)) throw FormatError("malformed PFM header in " + quoted(path));
  in.get();  // single whitespace before the raster
  PfmData d;
  if (magic == "Pf") d.channels = 1;
  else if (magic == "PF") d.channels = 3;
  else throw FormatError("not a PFM file: " + quoted(path));
  if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16 || scale == 0 || !std::isfinite(scale))
    throw FormatError("invalid PFM dimensions or scale in " + quoted(path));
  d.width = int(w);
  d.height = int(h);
  const bool little = scale < 0;
  const std::size_t row_len = std::size_t(w) * d.channels;
  d.values.resize(row_len * std::size_t(h));
  std::vector<std::uint32_t> row(row_len);
  for (long long v = h - 1; v >= 0; --v) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row_len * 4));
    if (in.gcount() != std::streamsize(row_len * 4))
      throw FormatError("truncated PFM raster in " + quoted(path));
    for (std::size_t k = 0; k < row_len; ++k) d.values[v * row_len + k] = from_bits(row[k], little);
  }
  const float mag = float(std::abs(scale));
  if (mag != 1.0f)
    for (float& x : d.values) x *= mag;
  return d;
}

// libpng error handling through exceptions; libpng is compiled as C, so the
// handler longjmps back and the caller rethrows.
struct PngError {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  err->message = msg;
  png_longjmp(png, 1);
}
void png_warning_fn(png_structp, png_const_charp) {}

void write_png_rows(const fs::path& path, int width, int height, int color_type, int bit_depth,
                    const std::vector<std::uint8_t>& bytes) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + quoted(path) + " for writing");
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = std::size_t(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int v = 0; v < height; ++v)
    rows[v] = const_cast<png_bytep>(bytes.data() + std::size_t(v) * stride);
  volatile bool failed = !png || !info;
  if (!failed) {
    if (setjmp(png_jmpbuf(png))) {
      failed = true;
    } else {
      png_init_io(png, fp);
      png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
                   PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
      png_write_info(png, info);
      if (bit_depth == 16) png_set_swap(png);  // rows are host little-endian words
      png_write_image(png, rows.data());
      png_write_end(png, nullptr);
    }
  }
  png_destroy_write_struct(png ? &png : nullptr, info ? &info : nullptr);
  const bool close_failed = std::fclose(fp) != 0;
  if (failed || close_failed) throw IoError("PNG write failed for " + quoted(path) + ": " + err.message);
}

struct PngRaw {
  int width{0}, height{0}, channels{1}, bit_depth{8};
  std::vector<std::uint8_t> bytes;
};

PngRaw read_png_raw(const fs::path& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + quoted(path));
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    std::fclose(fp);
    throw FormatError("not a PNG file: " + quoted(path));
  }
  PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  PngRaw out;
  std::vector<png_bytep> rows;
  volatile bool failed = !png || !info;
  if (!failed) {
    if (setjmp(png_jmpbuf(png))) {
      failed = true;
    } else {
      png_init_io(png, fp);
      png_set_sig_bytes(png, 8);
      png_read_info(png, info);
      const int color = png_get_color_type(png, info);
      int depth = png_get_bit_depth(png, info);
      if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
      if (depth == 16) png_set_swap(png);
      png_read_update_info(png, info);
      out.width = int(png_get_image_width(png, info));
      out.height = int(png_get_image_height(png, info));
      out.channels = png_get_channels(png, info);
      out.bit_depth = png_get_bit_depth(png, info);
      const std::size_t stride = png_get_rowbytes(png, info);
      out.bytes.resize(stride * std::size_t(out.height));
      rows.resize(static_cast<std::size_t>(out.height));
      for (int v = 0; v < out.height; ++v) rows[v] = out.bytes.data() + std::size_t(v) * stride;
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
    }
  }
  png_destroy_read_struct(png ? &png : nullptr, info ? &info : nullptr, nullptr);
  std::fclose(fp);
  if (failed) throw FormatError("malformed PNG " + quoted(path) + ": " + err.message);
  return out;
}

std::uint8_t to_byte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

}  // namespace

DepthFormat depth_format_for(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return DepthFormat::pfm;
  if (ext == ".png") return DepthFormat::png16;
  throw ContractError("unknown depth file extension: " + quoted(path));
}

void write_pfm(const fs::path& path, const ImageF& image) {
  PfmData d{int(image.cols()), int(image.rows()), 1,
            std::vector<float>(image.data(), image.data() + image.size())};
  write_pfm_raw(path, d);
}

ImageF read_pfm(const fs::path& path) {
  const PfmData d = read_pfm_raw(path);
  if (d.channels != 1) throw FormatError("expected single-channel PFM: " + quoted(path));
  return Eigen::Map<const ImageF>(d.values.data(), d.height, d.width);
}

std::vector<std::uint16_t> encode_depth_cm(const DepthMap& depth) {
  std::vector<std::uint16_t> out(std::size_t(depth.values.size()), 0);
  for (Eigen::Index i = 0; i < depth.values.size(); ++i) {
    if (!depth.valid.data()[i]) continue;
    const double cm = std::round(depth.values.data()[i] * 100.0);
    if (!(cm <= 65535.0))
      throw DomainError("depth " + std::to_string(depth.values.data()[i]) +
                        " m exceeds the 16-bit centimeter range");
    // Depths below 5 mm would round to the invalid code.
    out[std::size_t(i)] = static_cast<std::uint16_t>(std::max(cm, 1.0));
  }
  return out;
}

void write_depth(const fs::path& path, const DepthMap& depth, DepthFormat format) {
  if (format == DepthFormat::pfm) {
    write_pfm(path, depth.valid.select(depth.values, 0.0).cast<float>());
    return;
  }
  const auto cm = encode_depth_cm(depth);
  std::vector<std::uint8_t> bytes(cm.size() * 2);
  std::memcpy(bytes.data(), cm.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < bytes.size(); i += 2) std::swap(bytes[i], bytes[i + 1]);
  write_png_rows(path, depth.width(), depth.height(), PNG_COLOR_TYPE_GRAY, 16, bytes);
}

DepthMap read_depth(const fs::path& path, DepthFormat format) {
  if (format == DepthFormat::pfm) return DepthMap::from_values(read_pfm(path).cast<double>());
  const PngRaw raw = read_png_raw(path);
  if (raw.bit_depth != 16 || raw.channels != 1)
    throw FormatError("expected 16-bit grayscale depth PNG: " + quoted(path));
  ImageD values(raw.height, raw.width);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint16_t cm;
    std::memcpy(&cm, raw.bytes.data() + 2 * i, 2);
    if constexpr (std::endian::native == std::endian::big) cm = __builtin_bswap16(cm);
    values.data()[i] = cm / 100.0;
  }
  return DepthMap::from_values(values);
}

DepthMap read_depth(const fs::path& path) { return read_depth(path, depth_format_for(path)); }

void write_normals(const fs::path& path, const NormalMap& normals) {
  PfmData d{normals.width, normals.height, 3, {}};
  d.values.reserve(normals.data.size() * 3);
  for (const auto& n : normals.data)
    for (int k = 0; k < 3; ++k) d.values.push_back(float(n[k]));
  write_pfm_raw(path, d);
}

NormalMap read_normals(const fs::path& path) {
  const PfmData d = read_pfm_raw(path);
  if (d.channels != 3) throw FormatError("expected three-channel PFM: " + quoted(path));
  NormalMap n(d.width, d.height);
  for (std::size_t i = 0; i < n.data.size(); ++i)
    n.data[i] = Vec3d(d.values[3 * i], d.values[3 * i + 1], d.values[3 * i + 2]);
  return n;
}

void write_png(const fs::path& path, const Png8& image) {
  if (image.channels != 1 && image.channels != 3)
    throw ContractError("write_png: 1 or 3 channels expected");
  if (image.pixels.size() != std::size_t(image.width) * image.height * image.channels)
    throw ContractError("write_png: pixel buffer size mismatch");
  write_png_rows(path, image.width, image.height,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, 8, image.pixels);
}

Png8 read_png8(const fs::path& path) {
  PngRaw raw = read_png_raw(path);
  if (raw.bit_depth != 8) throw FormatError("expected 8-bit PNG: " + quoted(path));
  return {raw.width, raw.height, raw.channels, std::move(raw.bytes)};
}

void write_gray_png(const fs::path& path, const ImageD& image) {
  Png8 png{int(image.cols()), int(image.rows()), 1, {}};
  png.pixels.resize(std::size_t(image.size()));
  for (Eigen::Index i = 0; i < image.size(); ++i) png.pixels[std::size_t(i)] = to_byte(image.data()[i]);
  write_png(path, png);
}

void write_rgb_png(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  write_png(path, Png8{width, height, 3, rgb});
}

void write_control_png(const fs::path& path, const Pattern& pattern, int scale) {
  if (scale < 1) throw ContractError("write_control_png: scale must be >= 1");
  const auto rows = int(pattern.control.rows()), cols = int(pattern.control.cols());
  ImageD img(rows * scale, cols * scale);
  // control row 0 is the lowest elevation
  for (int v = 0; v < img.rows(); ++v)
    for (int u = 0; u < img.cols(); ++u) img(v, u) = pattern.control(rows - 1 - v / scale, u / scale);
  write_gray_png(path, img);
}

ImageD photometry_image(const Photometry& photometry, int width, int height) {
  if (width < 1 || height < 1) throw ContractError("photometry_image: size must be positive");
  const double hfov = photometry.base.hfov_deg, vfov = photometry.base.vfov_deg;
  ImageD img(height, width);
  for (int v = 0; v < height; ++v) {
    const double el = (0.5 - (v + 0.5) / height) * vfov;
    for (int u = 0; u < width; ++u) {
      const double az = ((u + 0.5) / width - 0.5) * hfov;
      img(v, u) = sample_intensity(photometry, az, el);
    }
  }
  return img;
}

}  // namespace ledsim
