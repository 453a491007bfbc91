#pragma once

// Depth-evaluation metrics: RMSE, Abs Rel, Log10, RMSE log, SILog, Sq Rel and
// the three threshold accuracies, under ROI / outside-ROI / full masks.

#include "ledsim/common.hpp"
#include "ledsim/depth_map.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ledsim {

enum class MaskKind { roi, outside_roi, full, custom };

std::string_view to_string(MaskKind kind);
MaskKind parse_mask_kind(std::string_view name);

/// ROI bounds at the 320x320 reference resolution, inclusive.
struct RoiBounds {
  int x_min{20};
  int x_max{270};
  int y_min{165};
  int y_max{210};
};

struct EvalMask {
  MaskKind kind{MaskKind::full};
  Mask mask;  ///< H x W, true = evaluated

  int width() const { return static_cast<int>(mask.cols()); }
  int height() const { return static_cast<int>(mask.rows()); }
};

/// Mask of the given kind at width x height. ROI bounds are scaled from the
/// 320x320 reference and rounded to the nearest pixel.
EvalMask roi_mask(MaskKind kind, int width, int height, const RoiBounds& bounds = {});

struct MetricsReport {
  double rmse{0};
  double abs_rel{0};
  double log10{0};
  double rmse_log{0};
  double silog{0};
  double sq_rel{0};
  double delta1{0};
  double delta2{0};
  double delta3{0};
  std::int64_t n_pixels{0};
};

struct MetricsOptions {
  /// silog = 100 sqrt(mean e^2 - w (mean e)^2); w = 1 is the pure standard
  /// deviation of log errors.
  double silog_variance_weight{1.0};
};

struct NoPixelsError : DomainError {
  using DomainError::DomainError;
};

/// Streaming metric accumulator. Sums are compensated and the log-error
/// moments use a mergeable mean/M2 form, so merge order does not matter
/// beyond rounding.
class MetricsAccumulator {
 public:
  void add(double pred, double gt);
  void merge(const MetricsAccumulator& other);
  std::int64_t count() const { return n_; }
  MetricsReport finalize(const MetricsOptions& options = {}) const;

 private:
  struct Sum {
    double s{0}, c{0};
    void add(double x);
    double value() const { return s + c; }
  };
  std::int64_t n_{0};
  Sum sq_err_, abs_rel_, log10_, sq_rel_;
  std::int64_t delta_[3]{0, 0, 0};
  double e_mean_{0}, e_m2_{0};
};

/// Pixels valid in both maps and inside the mask, accumulated.
MetricsAccumulator accumulate(const DepthMap& pred, const DepthMap& gt, const Mask& mask);

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, const EvalMask& mask,
                              const MetricsOptions& options = {});

struct DistanceBin {
  double lo;
  double hi;
  std::optional<MetricsReport> metrics;  ///< nullopt when no pixel falls in [lo, hi)
};

std::vector<double> default_bin_edges();

/// Per-bin metrics, pixels assigned by ground-truth depth to [lo, hi).
std::vector<DistanceBin> binned_metrics(const DepthMap& pred, const DepthMap& gt,
                                        const EvalMask& mask, std::span<const double> edges,
                                        const MetricsOptions& options = {});

enum class Reduction { pool, frame_mean };

struct FramePair {
  const DepthMap* pred;
  const DepthMap* gt;
};

struct EvaluationReport {
  MetricsReport overall;
  std::vector<DistanceBin> bins;
  std::string mask{"full"};
  std::string reduction{"pool"};
  std::int64_t frames{0};
};

/// Multi-frame evaluation. `pool` concatenates pixels of all frames;
/// `frame_mean` averages per-frame metrics (frames with no pixels skipped).
/// Frames are accumulated in parallel and reduced in index order.
EvaluationReport evaluate_frames(std::span<const FramePair> frames, MaskKind mask_kind,
                                 std::span<const double> bin_edges, Reduction reduction,
                                 const MetricsOptions& options = {}, unsigned threads = 0);

struct LoadedFrame {
  DepthMap pred;
  DepthMap gt;
};
using FrameLoader = std::function<LoadedFrame(std::size_t)>;

/// Same, loading frame i on demand so only in-flight frames are resident.
EvaluationReport evaluate_frames(std::size_t count, const FrameLoader& load, MaskKind mask_kind,
                                 std::span<const double> bin_edges, Reduction reduction,
                                 const MetricsOptions& options = {}, unsigned threads = 0);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const EvaluationReport& r);

}  // namespace ledsim
