#include "ledsim/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ledsim {
namespace {

// Source pixel nearest to the center of output index i along one axis.
int nearest_index(int i, int lo, int size, int out) {
  const double x = lo + (i + 0.5) * size / out - 0.5;
  return std::clamp(static_cast<int>(std::floor(x + 0.5)), lo, lo + size - 1);
}

}  // namespace

void PreprocessSpec::validate() const {
  if (crop < 1 || out_size < 1) throw ContractError("preprocess: crop and out_size must be positive");
}

CropWindow crop_window(int width, int height, const PreprocessSpec& spec) {
  spec.validate();
  if (width < spec.crop || height < spec.crop)
    throw ContractError("preprocess: source " + std::to_string(width) + "x" + std::to_string(height) +
                        " is smaller than crop " + std::to_string(spec.crop));
  return {(width - spec.crop) / 2, (height - spec.crop) / 2, spec.crop};
}

ImageD center_crop_resize(const ImageD& image, const PreprocessSpec& spec) {
  const CropWindow w = crop_window(int(image.cols()), int(image.rows()), spec);
  const int n = spec.out_size;
  struct Tap {
    int i0, i1;
    double f;
  };
  auto tap = [&](int i, int lo) {
    const double s = std::clamp(lo + (i + 0.5) * w.size / n - 0.5, double(lo), double(lo + w.size - 1));
    const int i0 = int(std::floor(s));
    return Tap{i0, std::min(i0 + 1, lo + w.size - 1), s - i0};
  };
  ImageD out(n, n);
  for (int v = 0; v < n; ++v) {
    const Tap y = tap(v, w.y0);
    for (int u = 0; u < n; ++u) {
      const Tap x = tap(u, w.x0);
      out(v, u) = (1 - y.f) * ((1 - x.f) * image(y.i0, x.i0) + x.f * image(y.i0, x.i1)) +
                  y.f * ((1 - x.f) * image(y.i1, x.i0) + x.f * image(y.i1, x.i1));
    }
  }
  return out;
}

DepthMap center_crop_resize(const DepthMap& depth, const PreprocessSpec& spec) {
  const CropWindow w = crop_window(depth.width(), depth.height(), spec);
  const int n = spec.out_size;
  DepthMap out(n, n);
  out.max_depth = depth.max_depth;
  for (int v = 0; v < n; ++v) {
    const int ys = nearest_index(v, w.y0, w.size, n);
    for (int u = 0; u < n; ++u) {
      const int xs = nearest_index(u, w.x0, w.size, n);
      out.values(v, u) = depth.values(ys, xs);
      out.valid(v, u) = depth.valid(ys, xs);
    }
  }
  return out;
}

NormalMap center_crop_resize(const NormalMap& normals, const PreprocessSpec& spec) {
  const CropWindow w = crop_window(normals.width, normals.height, spec);
  const int n = spec.out_size;
  NormalMap out(n, n);
  for (int v = 0; v < n; ++v) {
    const int ys = nearest_index(v, w.y0, w.size, n);
    for (int u = 0; u < n; ++u) out(v, u) = normals(ys, nearest_index(u, w.x0, w.size, n));
  }
  return out;
}

Camera center_crop_resize(const Camera& cam, const PreprocessSpec& spec) {
  const CropWindow w = crop_window(cam.width, cam.height, spec);
  const double s = double(spec.out_size) / w.size;
  Camera out = cam;
  out.width = out.height = spec.out_size;
  out.fx = cam.fx * s;
  out.fy = cam.fy * s;
  out.cx = (cam.cx - w.x0 + 0.5) * s - 0.5;
  out.cy = (cam.cy - w.y0 + 0.5) * s - 0.5;
  return out;
}

}  // namespace ledsim
