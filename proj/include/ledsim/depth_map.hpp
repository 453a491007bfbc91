#pragma once

#include "ledsim/common.hpp"

#include <cmath>
#include <vector>

namespace ledsim {

inline constexpr double kDefaultMaxDepth = 100.0;

/// Dense per-pixel depth (camera z, meters). Invalid pixels hold +infinity and
/// are false in `valid`.
template <typename Scalar>
struct DepthMapT {
  Image<Scalar> values;
  Mask valid;
  Scalar max_depth{Scalar(kDefaultMaxDepth)};

  DepthMapT() = default;
  DepthMapT(int width, int height)
      : values(Image<Scalar>::Constant(height, width, std::numeric_limits<Scalar>::infinity())),
        valid(Mask::Constant(height, width, false)) {}

  /// Wraps raw values; a pixel is valid iff its value is finite and positive.
  static DepthMapT from_values(const Image<Scalar>& raw) {
    DepthMapT d;
    d.valid = raw.unaryExpr([](Scalar x) { return std::isfinite(x) && x > Scalar(0); });
    d.values = d.valid.select(raw, std::numeric_limits<Scalar>::infinity());
    return d;
  }

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
  Eigen::Index valid_count() const { return valid.count(); }

  void set(int v, int u, Scalar z) {
    values(v, u) = z;
    valid(v, u) = true;
  }

  template <typename Other>
  DepthMapT<Other> cast() const {
    DepthMapT<Other> d;
    d.values = values.template cast<Other>();
    d.valid = valid;
    d.max_depth = Other(max_depth);
    return d;
  }

  bool operator==(const DepthMapT& o) const {
    return values.rows() == o.values.rows() && values.cols() == o.values.cols() &&
           (values == o.values).all() && (valid == o.valid).all() && max_depth == o.max_depth;
  }
};

using DepthMap = DepthMapT<double>;

/// Values min(value, max_depth) on valid pixels; the valid mask is unchanged.
template <typename Scalar>
DepthMapT<Scalar> clip_depth(const DepthMapT<Scalar>& d, Scalar max_depth = Scalar(kDefaultMaxDepth)) {
  if (!(max_depth > Scalar(0))) throw ContractError("clip_depth: max_depth must be positive");
  DepthMapT<Scalar> out = d;
  out.values = d.valid.select(d.values.min(max_depth), d.values);
  out.max_depth = max_depth;
  return out;
}

/// Per-pixel unit normals (camera frame); zero vectors where no surface.
struct NormalMap {
  int width{0};
  int height{0};
  std::vector<Vec3d> data;

  NormalMap() = default;
  NormalMap(int w, int h) : width(w), height(h), data(std::size_t(w) * h, Vec3d::Zero()) {}

  Vec3d& operator()(int v, int u) { return data[std::size_t(v) * width + u]; }
  const Vec3d& operator()(int v, int u) const { return data[std::size_t(v) * width + u]; }
};

}  // namespace ledsim
