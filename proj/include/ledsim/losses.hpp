#pragma once

// Depth training objective: log-L1 depth term, L1 gradient-matching term and
// surface-normal cosine term, each with an analytic gradient with respect to
// the predicted depth, plus a finite-difference verifier.

#include "ledsim/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ledsim {

/// Forward differences with replicate boundary: gx(i, j) = a(i, j+1) - a(i, j),
/// zero in the last column; gy likewise along rows.
template <typename Derived>
std::pair<Image<typename Derived::Scalar>, Image<typename Derived::Scalar>> spatial_gradients(
    const Eigen::ArrayBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index h = a.rows(), w = a.cols();
  Image<Scalar> gx = Image<Scalar>::Zero(h, w), gy = Image<Scalar>::Zero(h, w);
  if (w > 1) gx.leftCols(w - 1) = a.rightCols(w - 1) - a.leftCols(w - 1);
  if (h > 1) gy.topRows(h - 1) = a.bottomRows(h - 1) - a.topRows(h - 1);
  return {gx, gy};
}

enum class DepthLoss { log_l1, l1 };
enum class GradLoss { l1, log_l1 };

struct LossConfig {
  double lambda1{1.0};  ///< gradient-term weight
  double lambda2{1.0};  ///< normal-term weight
  DepthLoss depth_variant{DepthLoss::log_l1};
  GradLoss grad_variant{GradLoss::l1};
  bool use_normal{true};
  double epsilon{1e-6};  ///< positivity floor under logarithms, meters

  void validate() const;
  std::string describe() const;
};

/// The seven loss combinations of the loss ablation, in table order; the last
/// one is the default configuration.
std::vector<LossConfig> ablation_configs();

struct LossTerm {
  double value{0};
  ImageD gradient;  ///< d value / d prediction, zero on invalid pixels
};

struct LossValue {
  double total{0};
  double depth_term{0};
  double grad_term{0};
  double normal_term{0};
  ImageD gradient;
};

LossTerm loss_depth(const ImageD& pred, const ImageD& gt, const Mask& valid,
                    DepthLoss variant = DepthLoss::log_l1, double epsilon = 1e-6);

/// Gradient-matching term. Differences touching an invalid pixel count as 0.
LossTerm loss_grad(const ImageD& pred, const ImageD& gt, const Mask& valid,
                   GradLoss variant = GradLoss::l1, double epsilon = 1e-6);

/// Cosine term on normals n = (-gx, -gy, 1) of the raw depth maps.
LossTerm loss_normal(const ImageD& pred, const ImageD& gt, const Mask& valid);

LossValue loss_total(const ImageD& pred, const ImageD& gt, const Mask& valid,
                     const LossConfig& cfg = {});

struct GradcheckResult {
  double max_rel_error{0};
  int tested{0};
  int excluded{0};
};

/// Central finite differences of loss_total against its analytic gradient.
/// Pixels within 10 h of a kink of an absolute-value term (or of the log
/// floor) are skipped. Errors are relative to max(|fd|, |analytic|, s) with
/// s = 1e-3 * mean |analytic gradient|.
GradcheckResult gradcheck(const ImageD& pred, const ImageD& gt, const Mask& valid,
                          const LossConfig& cfg, double h = 1e-4);

}  // namespace ledsim
