#pragma once

// File formats: PFM float maps, 16-bit centimeter depth PNGs and 8-bit
// gray/RGB PNGs.

#include "ledsim/common.hpp"
#include "ledsim/depth_map.hpp"
#include "ledsim/pattern.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ledsim {

enum class DepthFormat { pfm, png16 };

DepthFormat depth_format_for(const std::filesystem::path& path);

/// Single-channel PFM ("Pf", little-endian, scale -1, bottom row first).
void write_pfm(const std::filesystem::path& path, const ImageF& image);
ImageF read_pfm(const std::filesystem::path& path);

/// Depth as meters; invalid pixels are stored as 0.
void write_depth(const std::filesystem::path& path, const DepthMap& depth,
                 DepthFormat format = DepthFormat::pfm);
DepthMap read_depth(const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path, DepthFormat format);

/// Three-channel PFM ("PF").
void write_normals(const std::filesystem::path& path, const NormalMap& normals);
NormalMap read_normals(const std::filesystem::path& path);

/// Depth in centimeters, 0 = invalid. Throws DomainError beyond 655.35 m.
std::vector<std::uint16_t> encode_depth_cm(const DepthMap& depth);

struct Png8 {
  int width{0};
  int height{0};
  int channels{1};  ///< 1 or 3
  std::vector<std::uint8_t> pixels;
};

void write_png(const std::filesystem::path& path, const Png8& image);
Png8 read_png8(const std::filesystem::path& path);

/// Gray PNG of an intensity image in [0, 1].
void write_gray_png(const std::filesystem::path& path, const ImageD& image);
void write_rgb_png(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb);

/// Control matrix as an 8-bit image, top row = highest elevation.
void write_control_png(const std::filesystem::path& path, const Pattern& pattern, int scale = 4);

/// Realized intensity over the frustum sampled at `width` x `height`.
ImageD photometry_image(const Photometry& photometry, int width, int height);

}  // namespace ledsim
