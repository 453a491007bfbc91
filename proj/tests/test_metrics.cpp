#include "ledsim/metrics.hpp"
#include "metrics_reference.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>

using namespace ledsim;
using doctest::Approx;
using testing::random_map;
using testing::reference_metrics;

namespace {

DepthMap row_map(std::initializer_list<double> values) {
  ImageD img(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) img(0, i++) = v;
  return DepthMap::from_values(img);
}

EvalMask full_mask(const DepthMap& d) { return roi_mask(MaskKind::full, d.width(), d.height()); }

bool close(double a, double b, double rel, double abs_floor = 1e-12) {
  return std::abs(a - b) <= rel * std::max(std::abs(b), abs_floor / rel);
}

void check_close(const MetricsReport& a, const MetricsReport& b, double rel) {
  CHECK(a.n_pixels == b.n_pixels);
  CHECK(close(a.rmse, b.rmse, rel));
  CHECK(close(a.abs_rel, b.abs_rel, rel));
  CHECK(close(a.log10, b.log10, rel));
  CHECK(close(a.sq_rel, b.sq_rel, rel));
  CHECK(close(a.rmse_log, b.rmse_log, rel));
  // The variance form cancels catastrophically when the spread is tiny.
  CHECK(close(a.silog, b.silog, rel, 1e-6));
  CHECK(a.delta1 == b.delta1);
  CHECK(a.delta2 == b.delta2);
  CHECK(a.delta3 == b.delta3);
}


}  // namespace

TEST_CASE("identity prediction is perfect") {
  Rng rng(1);
  const DepthMap gt = random_map(rng, 20, 10, 0.1);
  const MetricsReport r = compute_metrics(gt, gt, full_mask(gt));
  CHECK(r.rmse == 0.0);
  CHECK(r.abs_rel == 0.0);
  CHECK(r.log10 == 0.0);
  CHECK(r.rmse_log == 0.0);
  CHECK(r.silog == 0.0);
  CHECK(r.sq_rel == 0.0);
  CHECK(r.delta1 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.n_pixels == gt.valid_count());
}

TEST_CASE("two-pixel worked example") {
  const DepthMap gt = row_map({10, 20}), pred = row_map({11, 18});
  const MetricsReport r = compute_metrics(pred, gt, full_mask(gt));
  CHECK(r.rmse == Approx(1.58114).epsilon(1e-5).scale(0));
  CHECK(r.abs_rel == Approx(0.1).epsilon(1e-12).scale(0));
  CHECK(r.sq_rel == Approx(0.15).epsilon(1e-12).scale(0));
  CHECK(r.rmse_log == Approx(0.100461).epsilon(1e-5).scale(0));
  CHECK(r.log10 == Approx(0.0435751).epsilon(1e-5).scale(0));
  CHECK(r.silog == Approx(10.0336).epsilon(1e-5).scale(0));
  CHECK(r.delta1 == 1.0);
  CHECK(r.delta2 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.n_pixels == 2);
}

TEST_CASE("uniform factor of two") {
  Rng rng(2);
  const DepthMap gt = random_map(rng, 16, 16, 0.0);
  DepthMap pred = gt;
  pred.values *= 2.0;
  const MetricsReport r = compute_metrics(pred, gt, full_mask(gt));
  CHECK(r.abs_rel == Approx(1.0).epsilon(1e-12).scale(0));
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 0.0);
  CHECK(r.delta3 == 0.0);
  CHECK(r.silog < 1e-5);
  CHECK(r.rmse_log == Approx(std::log(2.0)).epsilon(1e-12).scale(0));
}

TEST_CASE("metrics match a per-pixel reference on random maps") {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const int w = rng.uniform_int(1, 64), h = rng.uniform_int(1, 64);
    const DepthMap gt = random_map(rng, w, h, 0.05);
    const DepthMap pred = random_map(rng, w, h, 0.05);
    const EvalMask m = full_mask(gt);
    if (reference_metrics(pred, gt, m.mask).n_pixels == 0) continue;
    check_close(compute_metrics(pred, gt, m), reference_metrics(pred, gt, m.mask), 1e-9);
  }
}

TEST_CASE("scale and unit behaviour") {
  Rng rng(4);
  const DepthMap gt = random_map(rng, 30, 20, 0.0);
  DepthMap pred = gt;
  for (Eigen::Index i = 0; i < pred.values.size(); ++i) pred.values.data()[i] *= std::exp(0.2 * rng.normal());
  const MetricsReport base = compute_metrics(pred, gt, full_mask(gt));
  for (double c : {0.01, 3.7, 250.0}) {
    DepthMap ps = pred, gs = gt;
    ps.values *= c;
    gs.values *= c;
    const MetricsReport r = compute_metrics(ps, gs, full_mask(gs));
    CHECK(close(r.silog, base.silog, 1e-9));
    CHECK(close(r.rmse, c * base.rmse, 1e-9));
    CHECK(close(r.sq_rel, c * base.sq_rel, 1e-9));
    CHECK(close(r.abs_rel, base.abs_rel, 1e-9));
    CHECK(close(r.rmse_log, base.rmse_log, 1e-9));
    CHECK(close(r.log10, base.log10, 1e-9));
    CHECK(r.delta1 == base.delta1);
  }
  CHECK(base.delta1 <= base.delta2);
  CHECK(base.delta2 <= base.delta3);
  CHECK(base.delta3 <= 1.0);
}

TEST_CASE("silog variance weight is configurable") {
  const DepthMap gt = row_map({10, 20}), pred = row_map({11, 18});
  const MetricsReport r = compute_metrics(pred, gt, full_mask(gt), {0.0});
  CHECK(r.silog == Approx(100 * r.rmse_log).epsilon(1e-12).scale(0));
}

TEST_CASE("error cases") {
  const DepthMap gt = row_map({10, 20});
  CHECK_THROWS_AS(compute_metrics(row_map({1, 2, 3}), gt, full_mask(gt)), ContractError);
  CHECK_THROWS_AS(compute_metrics(row_map({0, 0}), gt, full_mask(gt)), NoPixelsError);
  DepthMap bad = row_map({1, 2});
  bad.values(0, 0) = -1.0;  // valid flag left set
  CHECK_THROWS_AS(compute_metrics(bad, gt, full_mask(gt)), DomainError);
  CHECK_THROWS_AS(roi_mask(MaskKind::full, 0, 5), ContractError);
  CHECK_THROWS_AS(parse_mask_kind("everything"), ContractError);
}

TEST_CASE("roi masks at the reference resolution") {
  const EvalMask roi = roi_mask(MaskKind::roi, 320, 320);
  const EvalMask out = roi_mask(MaskKind::outside_roi, 320, 320);
  const EvalMask full = roi_mask(MaskKind::full, 320, 320);
  CHECK(roi.mask.count() == 11546);
  CHECK(out.mask.count() == 90854);
  CHECK(full.mask.count() == 320 * 320);
  CHECK((roi.mask != out.mask).all());
  CHECK(roi.mask(165, 20));
  CHECK(roi.mask(210, 270));
  CHECK_FALSE(roi.mask(164, 20));
  CHECK_FALSE(roi.mask(165, 271));
  CHECK(parse_mask_kind("outside_roi") == MaskKind::outside_roi);
}

TEST_CASE("roi masks scale with the resolution") {
  const EvalMask roi = roi_mask(MaskKind::roi, 640, 640);
  CHECK(roi.mask(330, 40));
  CHECK(roi.mask(420, 540));
  CHECK_FALSE(roi.mask(329, 40));
  CHECK_FALSE(roi.mask(421, 540));
  const EvalMask out = roi_mask(MaskKind::outside_roi, 640, 480);
  CHECK(out.mask.count() + roi_mask(MaskKind::roi, 640, 480).mask.count() == 640 * 480);
}

TEST_CASE("mask pixel counts add up") {
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const DepthMap gt = random_map(rng, 320, 320, 0.2), pred = random_map(rng, 320, 320, 0.2);
    const auto n = [&](MaskKind kind) { return compute_metrics(pred, gt, roi_mask(kind, 320, 320)).n_pixels; };
    CHECK(n(MaskKind::roi) + n(MaskKind::outside_roi) == n(MaskKind::full));
  }
}

TEST_CASE("distance bins") {
  SUBCASE("constant depth fills one bin") {
    const DepthMap gt = DepthMap::from_values(ImageD::Constant(4, 4, 15.0));
    const auto bins = binned_metrics(gt, gt, full_mask(gt), default_bin_edges());
    REQUIRE(bins.size() == 10);
    for (const auto& b : bins) {
      CHECK(b.metrics.has_value() == (b.lo == 10.0));
      if (b.metrics) CHECK(b.metrics->rmse == 0.0);
    }
  }
  SUBCASE("ramp with a constant offset") {
    ImageD g(1, 991);
    for (int i = 0; i < 991; ++i) g(0, i) = 1.0 + 0.1 * i;
    const DepthMap gt = DepthMap::from_values(g);
    const DepthMap pred = DepthMap::from_values(g.array() + 1.0);
    const auto bins = binned_metrics(pred, gt, full_mask(gt), default_bin_edges());
    double prev = kInf;
    int populated = 0;
    for (const auto& b : bins) {
      if (!b.metrics) continue;
      ++populated;
      CHECK(b.metrics->rmse == Approx(1.0).epsilon(1e-12).scale(0));
      CHECK(b.metrics->abs_rel < prev);
      prev = b.metrics->abs_rel;
    }
    CHECK(populated == 10);
  }
  SUBCASE("edges are half-open") {
    const DepthMap gt = row_map({10.0, 20.0});
    const std::vector<double> edges{0, 10, 20, 30};
    const auto bins = binned_metrics(gt, gt, full_mask(gt), edges);
    CHECK_FALSE(bins[0].metrics.has_value());
    CHECK(bins[1].metrics->n_pixels == 1);
    CHECK(bins[2].metrics->n_pixels == 1);
  }
  SUBCASE("edge validation") {
    const DepthMap gt = row_map({10.0});
    const std::vector<double> one{5}, down{5, 3};
    CHECK_THROWS_AS(binned_metrics(gt, gt, full_mask(gt), one), ContractError);
    CHECK_THROWS_AS(binned_metrics(gt, gt, full_mask(gt), down), ContractError);
  }
}

TEST_CASE("multi-frame reductions") {
  const DepthMap g1 = row_map({10, 20}), p1 = row_map({11, 18});
  const DepthMap g2 = row_map({5, 5, 5, 5}), p2 = row_map({5, 5, 5, 5});
  const std::vector<FramePair> frames{{&p1, &g1}, {&p2, &g2}};
  const auto pooled = evaluate_frames(frames, MaskKind::full, default_bin_edges(), Reduction::pool);
  CHECK(pooled.overall.n_pixels == 6);
  CHECK(pooled.overall.abs_rel == Approx(0.2 / 6).epsilon(1e-12).scale(0));
  CHECK(pooled.frames == 2);
  const auto meaned = evaluate_frames(frames, MaskKind::full, default_bin_edges(), Reduction::frame_mean);
  CHECK(meaned.overall.abs_rel == Approx(0.05).epsilon(1e-12).scale(0));
  CHECK(meaned.reduction != pooled.reduction);

  const auto loaded = evaluate_frames(
      2, [&](std::size_t i) { return i == 0 ? LoadedFrame{p1, g1} : LoadedFrame{p2, g2}; }, MaskKind::full,
      default_bin_edges(), Reduction::pool);
  CHECK(loaded.overall.abs_rel == pooled.overall.abs_rel);
  CHECK(loaded.overall.rmse == pooled.overall.rmse);
}

TEST_CASE("accumulator merge order does not matter") {
  Rng rng(6);
  const DepthMap gt = random_map(rng, 64, 64, 0.0), pred = random_map(rng, 64, 64, 0.0);
  const Mask all = Mask::Constant(64, 64, true);
  const MetricsReport whole = accumulate(pred, gt, all).finalize();
  MetricsAccumulator parts;
  for (int band = 3; band >= 0; --band) {
    Mask m = Mask::Constant(64, 64, false);
    m.middleRows(band * 16, 16).setConstant(true);
    parts.merge(accumulate(pred, gt, m));
  }
  const MetricsReport merged = parts.finalize();
  CHECK(close(merged.rmse, whole.rmse, 1e-12));
  CHECK(close(merged.silog, whole.silog, 1e-12));
  CHECK(close(merged.abs_rel, whole.abs_rel, 1e-12));
}

TEST_CASE("report json has the fixed field names") {
  const DepthMap gt = row_map({10, 20}), pred = row_map({11, 18});
  const auto j = to_json(compute_metrics(pred, gt, full_mask(gt)));
  for (const char* key : {"rmse", "abs_rel", "log10", "rmse_log", "silog", "sq_rel", "delta1", "delta2",
                          "delta3", "n_pixels"})
    CHECK(j.contains(key));
}
