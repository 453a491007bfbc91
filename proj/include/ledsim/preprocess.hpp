#pragma once

// Center-crop + resize from the full sensor resolution to training size.

#include "ledsim/common.hpp"
#include "ledsim/depth_map.hpp"
#include "ledsim/geometry.hpp"

namespace ledsim {

struct PreprocessSpec {
  int crop{640};      ///< square side in source pixels
  int out_size{320};  ///< output side

  void validate() const;
};

struct CropWindow {
  int x0, y0, size;
};

/// Window [x0, x0 + size) x [y0, y0 + size), centered (floor of the margin).
CropWindow crop_window(int width, int height, const PreprocessSpec& spec);

/// Bilinear resampling of the centered crop.
ImageD center_crop_resize(const ImageD& image, const PreprocessSpec& spec);

/// Nearest-neighbor resampling; values and validity are never interpolated.
DepthMap center_crop_resize(const DepthMap& depth, const PreprocessSpec& spec);

NormalMap center_crop_resize(const NormalMap& normals, const PreprocessSpec& spec);

/// Intrinsics of the preprocessed image.
Camera center_crop_resize(const Camera& cam, const PreprocessSpec& spec);

}  // namespace ledsim
