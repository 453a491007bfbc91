#include "ledsim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ledsim {
namespace {

void check_same_shape(const DepthMap& pred, const DepthMap& gt, const Mask& mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height() || mask.cols() != gt.width() ||
      mask.rows() != gt.height())
    throw ContractError("metrics: prediction, ground truth and mask dimensions differ");
}

void add_scaled(MetricsReport& acc, const MetricsReport& r, double w) {
  acc.rmse += w * r.rmse;
  acc.abs_rel += w * r.abs_rel;
  acc.log10 += w * r.log10;
  acc.rmse_log += w * r.rmse_log;
  acc.silog += w * r.silog;
  acc.sq_rel += w * r.sq_rel;
  acc.delta1 += w * r.delta1;
  acc.delta2 += w * r.delta2;
  acc.delta3 += w * r.delta3;
}

// Mean of per-frame reports; n_pixels is the pooled count.
struct FrameMean {
  MetricsReport sum;
  std::int64_t frames{0};

  void add(const MetricsReport& r) {
    add_scaled(sum, r, 1.0);
    sum.n_pixels += r.n_pixels;
    ++frames;
  }
  std::optional<MetricsReport> mean() const {
    if (frames == 0) return std::nullopt;
    MetricsReport m;
    add_scaled(m, sum, 1.0 / static_cast<double>(frames));
    m.n_pixels = sum.n_pixels;
    return m;
  }
};

void check_edges(std::span<const double> edges) {
  if (edges.empty()) return;
  if (edges.size() < 2) throw ContractError("bin edges need at least two values");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ContractError("bin edges must be strictly increasing");
}

// Bin index of a ground-truth value, or -1.
int bin_of(double g, std::span<const double> edges) {
  if (edges.size() < 2 || g < edges.front() || g >= edges.back()) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), g);
  return static_cast<int>(it - edges.begin()) - 1;
}

}  // namespace

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::roi: return "roi";
    case MaskKind::outside_roi: return "outside_roi";
    case MaskKind::full: return "full";
    case MaskKind::custom: return "custom";
  }
  return "?";
}

MaskKind parse_mask_kind(std::string_view name) {
  if (name == "roi") return MaskKind::roi;
  if (name == "outside" || name == "outside_roi") return MaskKind::outside_roi;
  if (name == "full") return MaskKind::full;
  throw ContractError("unknown mask kind '" + std::string(name) + "'");
}

EvalMask roi_mask(MaskKind kind, int width, int height, const RoiBounds& b) {
  if (width <= 0 || height <= 0) throw ContractError("roi_mask: size must be positive");
  if (kind == MaskKind::custom) throw ContractError("roi_mask: custom masks are built directly");
  EvalMask m{kind, Mask::Constant(height, width, true)};
  if (kind == MaskKind::full) return m;

  const double sx = width / 320.0, sy = height / 320.0;
  const int x0 = static_cast<int>(std::lround(b.x_min * sx));
  const int x1 = static_cast<int>(std::lround(b.x_max * sx));
  const int y0 = static_cast<int>(std::lround(b.y_min * sy));
  const int y1 = static_cast<int>(std::lround(b.y_max * sy));
  Mask roi = Mask::Constant(height, width, false);
  for (int y = std::max(0, y0); y <= std::min(height - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(width - 1, x1); ++x) roi(y, x) = true;
  m.mask = kind == MaskKind::roi ? roi : Mask(!roi);
  return m;
}

void MetricsAccumulator::Sum::add(double x) {
  const double t = s + x;
  if (std::abs(s) >= std::abs(x))
    c += (s - t) + x;
  else
    c += (x - t) + s;
  s = t;
}

void MetricsAccumulator::add(double d, double g) {
  if (!(d > 0) || !(g > 0)) throw DomainError("metrics: non-positive depth inside the mask");
  ++n_;
  const double diff = d - g;
  sq_err_.add(diff * diff);
  abs_rel_.add(std::abs(diff) / g);
  log10_.add(std::abs(std::log10(d) - std::log10(g)));
  sq_rel_.add(diff * diff / g);
  const double ratio = std::max(d / g, g / d);
  if (ratio < 1.25) ++delta_[0];
  if (ratio < 1.25 * 1.25) ++delta_[1];
  if (ratio < 1.25 * 1.25 * 1.25) ++delta_[2];
  const double e = std::log(d) - std::log(g);
  const double delta = e - e_mean_;
  e_mean_ += delta / static_cast<double>(n_);
  e_m2_ += delta * (e - e_mean_);
}

void MetricsAccumulator::merge(const MetricsAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double delta = o.e_mean_ - e_mean_;
  e_mean_ += delta * nb / n;
  e_m2_ += o.e_m2_ + delta * delta * na * nb / n;
  n_ += o.n_;
  for (auto [dst, src] : {std::pair{&sq_err_, &o.sq_err_}, {&abs_rel_, &o.abs_rel_},
                          {&log10_, &o.log10_}, {&sq_rel_, &o.sq_rel_}}) {
    dst->add(src->s);
    dst->add(src->c);
  }
  for (int k = 0; k < 3; ++k) delta_[k] += o.delta_[k];
}

MetricsReport MetricsAccumulator::finalize(const MetricsOptions& options) const {
  if (n_ == 0) throw NoPixelsError("metrics: no pixels to evaluate");
  const double n = static_cast<double>(n_);
  const double variance = std::max(0.0, e_m2_ / n);
  MetricsReport r;
  r.rmse = std::sqrt(sq_err_.value() / n);
  r.abs_rel = abs_rel_.value() / n;
  r.log10 = log10_.value() / n;
  r.rmse_log = std::sqrt(variance + e_mean_ * e_mean_);
  r.silog = 100.0 * std::sqrt(std::max(
                        0.0, variance + (1.0 - options.silog_variance_weight) * e_mean_ * e_mean_));
  r.sq_rel = sq_rel_.value() / n;
  r.delta1 = static_cast<double>(delta_[0]) / n;
  r.delta2 = static_cast<double>(delta_[1]) / n;
  r.delta3 = static_cast<double>(delta_[2]) / n;
  r.n_pixels = n_;
  return r;
}

MetricsAccumulator accumulate(const DepthMap& pred, const DepthMap& gt, const Mask& mask) {
  check_same_shape(pred, gt, mask);
  MetricsAccumulator acc;
  for (int v = 0; v < gt.height(); ++v)
    for (int u = 0; u < gt.width(); ++u)
      if (mask(v, u) && pred.valid(v, u) && gt.valid(v, u))
        acc.add(pred.values(v, u), gt.values(v, u));
  return acc;
}

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, const EvalMask& mask,
                              const MetricsOptions& options) {
  return accumulate(pred, gt, mask.mask).finalize(options);
}

std::vector<double> default_bin_edges() {
  std::vector<double> e;
  for (int i = 0; i <= 10; ++i) e.push_back(10.0 * i);
  return e;
}

std::vector<DistanceBin> binned_metrics(const DepthMap& pred, const DepthMap& gt,
                                        const EvalMask& mask, std::span<const double> edges,
                                        const MetricsOptions& options) {
  if (edges.size() < 2) throw ContractError("bin edges need at least two values");
  check_edges(edges);
  check_same_shape(pred, gt, mask.mask);
  std::vector<MetricsAccumulator> acc(edges.size() - 1);
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (!(mask.mask(v, u) && pred.valid(v, u) && gt.valid(v, u))) continue;
      const int b = bin_of(gt.values(v, u), edges);
      if (b >= 0) acc[static_cast<std::size_t>(b)].add(pred.values(v, u), gt.values(v, u));
    }
  }
  std::vector<DistanceBin> bins;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    DistanceBin bin{edges[b], edges[b + 1], std::nullopt};
    if (acc[b].count() > 0) bin.metrics = acc[b].finalize(options);
    bins.push_back(bin);
  }
  return bins;
}

EvaluationReport evaluate_frames(std::span<const FramePair> frames, MaskKind mask_kind,
                                 std::span<const double> bin_edges, Reduction reduction,
                                 const MetricsOptions& options, unsigned threads) {
  return evaluate_frames(
      frames.size(),
      [&](std::size_t i) { return LoadedFrame{*frames[i].pred, *frames[i].gt}; }, mask_kind,
      bin_edges, reduction, options, threads);
}

EvaluationReport evaluate_frames(std::size_t count, const FrameLoader& load, MaskKind mask_kind,
                                 std::span<const double> bin_edges, Reduction reduction,
                                 const MetricsOptions& options, unsigned threads) {
  check_edges(bin_edges);
  const std::size_t n_bins = bin_edges.size() >= 2 ? bin_edges.size() - 1 : 0;

  struct FrameAcc {
    MetricsAccumulator overall;
    std::vector<MetricsAccumulator> bins;
  };
  std::vector<FrameAcc> per_frame(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        const LoadedFrame frame = load(i);
        const DepthMap& pred = frame.pred;
        const DepthMap& gt = frame.gt;
        const EvalMask mask = roi_mask(mask_kind, gt.width(), gt.height());
        check_same_shape(pred, gt, mask.mask);
        FrameAcc& fa = per_frame[i];
        fa.bins.resize(n_bins);
        for (int v = 0; v < gt.height(); ++v) {
          for (int u = 0; u < gt.width(); ++u) {
            if (!(mask.mask(v, u) && pred.valid(v, u) && gt.valid(v, u))) continue;
            const double d = pred.values(v, u), g = gt.values(v, u);
            fa.overall.add(d, g);
            const int b = bin_of(g, bin_edges);
            if (b >= 0) fa.bins[static_cast<std::size_t>(b)].add(d, g);
          }
        }
      },
      threads);

  EvaluationReport report;
  report.mask = std::string(to_string(mask_kind));
  report.reduction = reduction == Reduction::pool ? "pool" : "frame_mean";
  report.frames = static_cast<std::int64_t>(count);

  if (reduction == Reduction::pool) {
    MetricsAccumulator total;
    std::vector<MetricsAccumulator> bins(n_bins);
    for (const auto& fa : per_frame) {
      total.merge(fa.overall);
      for (std::size_t b = 0; b < n_bins; ++b) bins[b].merge(fa.bins[b]);
    }
    report.overall = total.finalize(options);
    for (std::size_t b = 0; b < n_bins; ++b) {
      DistanceBin bin{bin_edges[b], bin_edges[b + 1], std::nullopt};
      if (bins[b].count() > 0) bin.metrics = bins[b].finalize(options);
      report.bins.push_back(bin);
    }
    return report;
  }

  FrameMean total;
  std::vector<FrameMean> bins(n_bins);
  for (const auto& fa : per_frame) {
    if (fa.overall.count() > 0) total.add(fa.overall.finalize(options));
    for (std::size_t b = 0; b < n_bins; ++b)
      if (fa.bins[b].count() > 0) bins[b].add(fa.bins[b].finalize(options));
  }
  const auto overall = total.mean();
  if (!overall) throw NoPixelsError("metrics: no pixels to evaluate in any frame");
  report.overall = *overall;
  for (std::size_t b = 0; b < n_bins; ++b)
    report.bins.push_back({bin_edges[b], bin_edges[b + 1], bins[b].mean()});
  return report;
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"rmse", r.rmse},         {"abs_rel", r.abs_rel}, {"log10", r.log10},
          {"rmse_log", r.rmse_log}, {"silog", r.silog},     {"sq_rel", r.sq_rel},
          {"delta1", r.delta1},     {"delta2", r.delta2},   {"delta3", r.delta3},
          {"n_pixels", r.n_pixels}};
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j = to_json(r.overall);
  j["mask"] = r.mask;
  j["reduction"] = r.reduction;
  j["frames"] = r.frames;
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.bins) {
    nlohmann::json jb = b.metrics ? to_json(*b.metrics) : nlohmann::json::object();
    jb["lo"] = b.lo;
    jb["hi"] = b.hi;
    jb["empty"] = !b.metrics.has_value();
    bins.push_back(jb);
  }
  j["bins"] = bins;
  return j;
}

}  // namespace ledsim
