#pragma once

// Headlight illumination patterns defined in angle space, their rasterization
// to the projector control matrix, and a lens-aberration photometry model.

#include "ledsim/common.hpp"
#include "ledsim/geometry.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace ledsim {

enum class PatternKind { checkerboard, hlines, vlines, high_beam };

/// Which parity is lit: even_on lights cells whose parity sum is even.
enum class Phase { even_on, odd_on };

std::string_view to_string(PatternKind kind);
PatternKind parse_pattern_kind(std::string_view name);

struct Pattern {
  PatternKind kind{PatternKind::checkerboard};
  double cell_deg{0.5};
  Phase phase{Phase::even_on};
  double hfov_deg{35.0};
  double vfov_deg{7.0};
  /// rows x cols intensities in [0, 1]; row 0 is the lowest elevation.
  Image<double> control;

  /// Unblurred analytic pattern value at an angle (ignores the frustum).
  double value_at(double azimuth_deg, double elevation_deg) const;
};

/// Rasterizes `kind` onto the projector grid by sampling the analytic pattern
/// at pixel centers. Throws ContractError when a checkerboard or line cell is
/// smaller than the grid pitch.
Pattern make_pattern(PatternKind kind, double cell_deg, const ProjectorModel& proj,
                     Phase phase = Phase::even_on);

struct PhotometryParams {
  double psf_sigma0_deg{0.05};
  double psf_sigma_slope_deg{0.10};
  double vignette_exponent{4.0};

  static PhotometryParams identity() { return {0.0, 0.0, 0.0}; }
};

/// Realized light distribution: field-dependent Gaussian blur of the analytic
/// pattern, then cos^n vignetting, clamped to [0, 1] and cut at the frustum.
struct Photometry {
  Pattern base;
  PhotometryParams params;

  double sigma_deg(double azimuth_deg, double elevation_deg) const;
  double vignette(double azimuth_deg, double elevation_deg) const;
};

Photometry apply_photometry(const Pattern& pattern, const PhotometryParams& params = {});

/// I(azimuth, elevation) in [0, 1]; exactly 0 outside the frustum.
double sample_intensity(const Photometry& ph, double azimuth_deg, double elevation_deg);

/// Square wave (+1 on even cells, -1 on odd) convolved with a Gaussian of
/// standard deviation sigma; sigma = 0 gives the raw wave.
double blurred_square_wave(double x, double cell, double sigma);

}  // namespace ledsim
