#include "ledsim/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ledsim {
namespace {

double sign(double x) { return (x > 0) - (x < 0); }

// Neumaier-compensated sum of the selected entries.
double masked_sum(const ImageD& a, const Mask& m) {
  double s = 0, c = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!m.data()[i]) continue;
    const double x = a.data()[i];
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

double valid_count(const ImageD& pred, const ImageD& gt, const Mask& valid) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || valid.rows() != gt.rows() ||
      valid.cols() != gt.cols())
    throw ContractError("loss: prediction, ground truth and mask dimensions differ");
  const auto n = valid.count();
  if (n == 0) throw DomainError("loss: no valid pixels");
  return static_cast<double>(n);
}

// Edge masks: ex(i, j) iff (i, j) and (i, j+1) are both valid.
std::pair<Mask, Mask> edge_masks(const Mask& m) {
  const Eigen::Index h = m.rows(), w = m.cols();
  Mask ex = Mask::Constant(h, w, false), ey = Mask::Constant(h, w, false);
  if (w > 1) ex.leftCols(w - 1) = m.leftCols(w - 1) && m.rightCols(w - 1);
  if (h > 1) ey.topRows(h - 1) = m.topRows(h - 1) && m.bottomRows(h - 1);
  return {ex, ey};
}

std::pair<ImageD, ImageD> masked_gradients(const ImageD& a, const Mask& ex, const Mask& ey) {
  auto [gx, gy] = spatial_gradients(a);
  return {ex.select(gx, 0.0), ey.select(gy, 0.0)};
}

// Adds D_x^T px + D_y^T py to out (transpose of the forward differences).
void scatter_adjoint(const ImageD& px, const ImageD& py, ImageD& out) {
  const Eigen::Index h = out.rows(), w = out.cols();
  if (w > 1) {
    out.rightCols(w - 1) += px.leftCols(w - 1);
    out.leftCols(w - 1) -= px.leftCols(w - 1);
  }
  if (h > 1) {
    out.bottomRows(h - 1) += py.topRows(h - 1);
    out.topRows(h - 1) -= py.topRows(h - 1);
  }
}

ImageD floored_log(const ImageD& a, double eps) { return a.max(eps).log(); }

// d log(max(a, eps)) / da
ImageD floored_log_derivative(const ImageD& a, double eps) {
  return (a > eps).select(a.inverse(), 0.0);
}

struct NormalTerms {
  ImageD per_pixel;  // |1 - cos|
  ImageD dgx, dgy;   // d per_pixel / d gx_pred, d gy_pred
};

NormalTerms normal_terms(const ImageD& pred, const ImageD& gt, const Mask& valid) {
  const auto [ex, ey] = edge_masks(valid);
  const auto [gxd, gyd] = masked_gradients(pred, ex, ey);
  const auto [gxg, gyg] = masked_gradients(gt, ex, ey);
  const Eigen::Index h = pred.rows(), w = pred.cols();
  NormalTerms t{ImageD::Zero(h, w), ImageD::Zero(h, w), ImageD::Zero(h, w)};
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      if (!valid(i, j)) continue;
      if (gxd(i, j) == gxg(i, j) && gyd(i, j) == gyg(i, j)) continue;
      const Vec3d nd(-gxd(i, j), -gyd(i, j), 1.0);
      const Vec3d ng(-gxg(i, j), -gyg(i, j), 1.0);
      const double nd_norm = nd.norm();
      const Vec3d mg = ng / ng.norm();
      const double c = nd.dot(mg) / nd_norm;
      // c <= 1, so |1 - c| is smooth: its minimum at c = 1 has zero slope.
      t.per_pixel(i, j) = std::max(0.0, 1.0 - c);
      const Vec3d dc = mg / nd_norm - c * nd / (nd_norm * nd_norm);
      // d(1-c)/dgx = -dc/dn_x * dn_x/dgx = dc_x
      t.dgx(i, j) = dc.x();
      t.dgy(i, j) = dc.y();
    }
  }
  return t;
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda1 >= 0 && lambda2 >= 0)) throw ContractError("loss weights must be non-negative");
  if (!(epsilon > 0)) throw ContractError("loss epsilon must be positive");
}

std::string LossConfig::describe() const {
  std::ostringstream s;
  s << "depth=" << (depth_variant == DepthLoss::log_l1 ? "log_l1" : "l1");
  if (lambda1 > 0) s << " grad=" << (grad_variant == GradLoss::l1 ? "l1" : "log_l1");
  if (use_normal && lambda2 > 0) s << " normal";
  return s.str();
}

std::vector<LossConfig> ablation_configs() {
  auto make = [](DepthLoss depth, double l1, GradLoss grad, bool normal) {
    LossConfig c;
    c.depth_variant = depth;
    c.lambda1 = l1;
    c.grad_variant = grad;
    c.use_normal = normal;
    c.lambda2 = normal ? 1.0 : 0.0;
    return c;
  };
  return {
      make(DepthLoss::l1, 0.0, GradLoss::l1, false),
      make(DepthLoss::log_l1, 0.0, GradLoss::l1, false),
      make(DepthLoss::log_l1, 1.0, GradLoss::l1, false),
      make(DepthLoss::log_l1, 1.0, GradLoss::log_l1, false),
      make(DepthLoss::log_l1, 0.0, GradLoss::l1, true),
      make(DepthLoss::log_l1, 1.0, GradLoss::log_l1, true),
      make(DepthLoss::log_l1, 1.0, GradLoss::l1, true),
  };
}

LossTerm loss_depth(const ImageD& pred, const ImageD& gt, const Mask& valid, DepthLoss variant,
                    double epsilon) {
  const double n = valid_count(pred, gt, valid);
  ImageD r, dr;
  if (variant == DepthLoss::log_l1) {
    r = floored_log(pred, epsilon) - floored_log(gt, epsilon);
    dr = floored_log_derivative(pred, epsilon);
  } else {
    r = pred - gt;
    dr = ImageD::Ones(pred.rows(), pred.cols());
  }
  LossTerm t;
  t.value = masked_sum(r.abs(), valid) / n;
  t.gradient = valid.select(r.unaryExpr([](double x) { return sign(x); }) * dr / n, 0.0);
  return t;
}

LossTerm loss_grad(const ImageD& pred, const ImageD& gt, const Mask& valid, GradLoss variant,
                   double epsilon) {
  const double n = valid_count(pred, gt, valid);
  const bool log_space = variant == GradLoss::log_l1;
  const ImageD a = log_space ? floored_log(pred, epsilon) : pred;
  const ImageD b = log_space ? floored_log(gt, epsilon) : gt;
  const auto [ex, ey] = edge_masks(valid);
  const auto [gxa, gya] = masked_gradients(a, ex, ey);
  const auto [gxb, gyb] = masked_gradients(b, ex, ey);
  const ImageD dx = gxa - gxb, dy = gya - gyb;

  LossTerm t;
  t.value = masked_sum(dx.abs() + dy.abs(), valid) / n;
  const ImageD sx = dx.unaryExpr([](double x) { return sign(x); }) / n;
  const ImageD sy = dy.unaryExpr([](double x) { return sign(x); }) / n;
  t.gradient = ImageD::Zero(pred.rows(), pred.cols());
  scatter_adjoint(ex.select(sx, 0.0), ey.select(sy, 0.0), t.gradient);
  if (log_space) t.gradient *= floored_log_derivative(pred, epsilon);
  t.gradient = valid.select(t.gradient, 0.0);
  return t;
}

LossTerm loss_normal(const ImageD& pred, const ImageD& gt, const Mask& valid) {
  const double n = valid_count(pred, gt, valid);
  const auto [ex, ey] = edge_masks(valid);
  const NormalTerms nt = normal_terms(pred, gt, valid);
  LossTerm t;
  t.value = masked_sum(nt.per_pixel, valid) / n;
  t.gradient = ImageD::Zero(pred.rows(), pred.cols());
  scatter_adjoint(ex.select(nt.dgx / n, 0.0), ey.select(nt.dgy / n, 0.0), t.gradient);
  t.gradient = valid.select(t.gradient, 0.0);
  return t;
}

LossValue loss_total(const ImageD& pred, const ImageD& gt, const Mask& valid,
                     const LossConfig& cfg) {
  cfg.validate();
  LossValue v;
  const LossTerm depth = loss_depth(pred, gt, valid, cfg.depth_variant, cfg.epsilon);
  const LossTerm grad = loss_grad(pred, gt, valid, cfg.grad_variant, cfg.epsilon);
  v.depth_term = depth.value;
  v.grad_term = grad.value;
  v.gradient = depth.gradient + cfg.lambda1 * grad.gradient;
  if (cfg.use_normal) {
    const LossTerm normal = loss_normal(pred, gt, valid);
    v.normal_term = normal.value;
    v.gradient += cfg.lambda2 * normal.gradient;
  }
  v.total = v.depth_term + cfg.lambda1 * v.grad_term + cfg.lambda2 * v.normal_term;
  return v;
}

GradcheckResult gradcheck(const ImageD& pred, const ImageD& gt, const Mask& valid,
                          const LossConfig& cfg, double h) {
  if (!(h > 0)) throw ContractError("gradcheck: step must be positive");
  const LossValue base = loss_total(pred, gt, valid, cfg);
  const Eigen::Index H = pred.rows(), W = pred.cols();
  const double kink = 10.0 * h;

  // Kink arguments: the quantities inside |.| that depend on the prediction.
  const ImageD depth_arg = cfg.depth_variant == DepthLoss::log_l1
                               ? ImageD(floored_log(pred, cfg.epsilon) - floored_log(gt, cfg.epsilon))
                               : ImageD(pred - gt);
  const bool log_grad = cfg.grad_variant == GradLoss::log_l1;
  const auto [ex, ey] = edge_masks(valid);
  const auto [gxa, gya] = masked_gradients(log_grad ? floored_log(pred, cfg.epsilon) : pred, ex, ey);
  const auto [gxb, gyb] = masked_gradients(log_grad ? floored_log(gt, cfg.epsilon) : gt, ex, ey);
  const ImageD grad_x = gxa - gxb, grad_y = gya - gyb;

  auto near_kink = [&](Eigen::Index i, Eigen::Index j) {
    if (std::abs(depth_arg(i, j)) < kink) return true;
    if (std::abs(pred(i, j) - cfg.epsilon) < kink) return true;
    if (cfg.lambda1 > 0) {
      if (ex(i, j) && std::abs(grad_x(i, j)) < kink) return true;
      if (j > 0 && ex(i, j - 1) && std::abs(grad_x(i, j - 1)) < kink) return true;
      if (ey(i, j) && std::abs(grad_y(i, j)) < kink) return true;
      if (i > 0 && ey(i - 1, j) && std::abs(grad_y(i - 1, j)) < kink) return true;
    }
    return false;
  };

  const double scale = 1e-3 * masked_sum(base.gradient.abs(), valid) / double(valid.count());
  GradcheckResult res;
  ImageD probe = pred;
  for (Eigen::Index i = 0; i < H; ++i) {
    for (Eigen::Index j = 0; j < W; ++j) {
      if (!valid(i, j)) continue;
      if (near_kink(i, j) || pred(i, j) <= h) {
        ++res.excluded;
        continue;
      }
      const double x = pred(i, j);
      probe(i, j) = x + h;
      const double up = loss_total(probe, gt, valid, cfg).total;
      probe(i, j) = x - h;
      const double down = loss_total(probe, gt, valid, cfg).total;
      probe(i, j) = x;
      const double fd = (up - down) / (2.0 * h);
      const double an = base.gradient(i, j);
      const double denom = std::max({std::abs(fd), std::abs(an), scale});
      res.max_rel_error = std::max(res.max_rel_error, denom > 0 ? std::abs(fd - an) / denom : 0.0);
      ++res.tested;
    }
  }
  return res;
}

}  // namespace ledsim
