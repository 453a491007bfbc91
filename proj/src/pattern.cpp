#include "ledsim/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ledsim {
namespace {

double square_wave(double x, double cell) {
  const auto k = static_cast<long long>(std::floor(x / cell));
  return (k % 2 == 0) ? 1.0 : -1.0;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::checkerboard: return "checkerboard";
    case PatternKind::hlines: return "hlines";
    case PatternKind::vlines: return "vlines";
    case PatternKind::high_beam: return "high_beam";
  }
  return "?";
}

PatternKind parse_pattern_kind(std::string_view name) {
  if (name == "checkerboard" || name == "led") return PatternKind::checkerboard;
  if (name == "hlines" || name == "hl") return PatternKind::hlines;
  if (name == "vlines" || name == "vl") return PatternKind::vlines;
  if (name == "high_beam" || name == "hb") return PatternKind::high_beam;
  throw ContractError("unknown pattern kind '" + std::string(name) + "'");
}

double blurred_square_wave(double x, double cell, double sigma) {
  if (!(sigma > 0)) return square_wave(x, cell);
  const double reach = 8.0 * sigma;
  const auto k_lo = static_cast<long long>(std::floor((x - reach) / cell));
  const auto k_hi = static_cast<long long>(std::floor((x + reach) / cell));
  double sum = 0.0;
  for (long long k = k_lo; k <= k_hi; ++k) {
    const double a = k * cell, b = (k + 1) * cell;
    const double mass = normal_cdf((x - a) / sigma) - normal_cdf((x - b) / sigma);
    sum += (k % 2 == 0 ? 1.0 : -1.0) * mass;
  }
  return sum;
}

double Pattern::value_at(double azimuth_deg, double elevation_deg) const {
  double v = 1.0;
  switch (kind) {
    case PatternKind::high_beam: return 1.0;
    case PatternKind::checkerboard:
      v = 0.5 * (1.0 + square_wave(azimuth_deg, cell_deg) * square_wave(elevation_deg, cell_deg));
      break;
    case PatternKind::vlines: v = 0.5 * (1.0 + square_wave(azimuth_deg, cell_deg)); break;
    case PatternKind::hlines: v = 0.5 * (1.0 + square_wave(elevation_deg, cell_deg)); break;
  }
  return phase == Phase::even_on ? v : 1.0 - v;
}

Pattern make_pattern(PatternKind kind, double cell_deg, const ProjectorModel& proj, Phase phase) {
  proj.validate();
  Pattern p;
  p.kind = kind;
  p.cell_deg = cell_deg;
  p.phase = phase;
  p.hfov_deg = proj.hfov_deg;
  p.vfov_deg = proj.vfov_deg;
  if (kind != PatternKind::high_beam) {
    if (!(cell_deg > 0)) throw ContractError("pattern cell size must be positive");
    const double min_cell = std::max(proj.pitch_h_deg(), proj.pitch_v_deg());
    if (cell_deg < min_cell) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "%g deg cells cannot be represented on a %dx%d grid; minimum cell is %.5f deg",
                    cell_deg, proj.cols, proj.rows, min_cell);
      throw ContractError(msg);
    }
  }
  p.control.resize(proj.rows, proj.cols);
  for (int r = 0; r < proj.rows; ++r) {
    for (int c = 0; c < proj.cols; ++c) {
      const auto a = projector_pixel_angles(c, r, proj);
      p.control(r, c) = p.value_at(a.azimuth_deg, a.elevation_deg);
    }
  }
  return p;
}

double Photometry::sigma_deg(double azimuth_deg, double elevation_deg) const {
  const double field = std::max(std::abs(azimuth_deg) / (0.5 * base.hfov_deg),
                                std::abs(elevation_deg) / (0.5 * base.vfov_deg));
  return params.psf_sigma0_deg + params.psf_sigma_slope_deg * field;
}

double Photometry::vignette(double azimuth_deg, double elevation_deg) const {
  if (params.vignette_exponent == 0.0) return 1.0;
  const double ta = std::tan(deg2rad(azimuth_deg)), te = std::tan(deg2rad(elevation_deg));
  const double cos_field = 1.0 / std::sqrt(1.0 + ta * ta + te * te);
  return std::pow(cos_field, params.vignette_exponent);
}

Photometry apply_photometry(const Pattern& pattern, const PhotometryParams& params) {
  if (!(params.psf_sigma0_deg >= 0 && params.psf_sigma_slope_deg >= 0))
    throw ContractError("photometry blur parameters must be non-negative");
  if (!(params.vignette_exponent >= 0))
    throw ContractError("photometry vignette exponent must be non-negative");
  return {pattern, params};
}

double sample_intensity(const Photometry& ph, double azimuth_deg, double elevation_deg) {
  const Pattern& p = ph.base;
  if (!(std::abs(azimuth_deg) <= 0.5 * p.hfov_deg && std::abs(elevation_deg) <= 0.5 * p.vfov_deg))
    return 0.0;

  const double sigma = ph.sigma_deg(azimuth_deg, elevation_deg);
  double v = 1.0;
  if (p.kind != PatternKind::high_beam) {
    const double sa = blurred_square_wave(azimuth_deg, p.cell_deg, sigma);
    const double se = blurred_square_wave(elevation_deg, p.cell_deg, sigma);
    switch (p.kind) {
      case PatternKind::checkerboard: v = 0.5 * (1.0 + sa * se); break;
      case PatternKind::vlines: v = 0.5 * (1.0 + sa); break;
      case PatternKind::hlines: v = 0.5 * (1.0 + se); break;
      case PatternKind::high_beam: break;
    }
    if (p.phase == Phase::odd_on) v = 1.0 - v;
  }
  return std::clamp(ph.vignette(azimuth_deg, elevation_deg) * v, 0.0, 1.0);
}

}  // namespace ledsim
