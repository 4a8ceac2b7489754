#pragma once

#include "dcgn/types.hpp"

#include <array>

namespace dcgn {

enum class RegionLayout { Blob, Stripes, Voronoi };

using Rgb = std::array<double, 3>;

/// Piecewise-constant class layout with Gaussian per-class colours.
struct SyntheticSpec {
  int width = 64;
  int height = 64;
  int k = 3;
  RegionLayout layout = RegionLayout::Blob;
  std::vector<Rgb> class_means;  // one per class; empty selects default_class_means(k)
  std::vector<Rgb> class_stds;   // one per class; empty means 0.05 everywhere
  double outlier_fraction = 0.0;
  Rgb outlier_mean{1.0, 1.0, 1.0};
  Rgb outlier_std{0.02, 0.02, 0.02};
  int outlier_class = -1;  // restrict outliers to one ground-truth class; -1 for any

  /// Fills defaults for empty colour lists and throws InvalidInput on a bad spec.
  SyntheticSpec resolved() const;
};

/// Evenly spread grey levels from 0.2 to 0.8, replicated across channels.
std::vector<Rgb> default_class_means(int k);

std::string to_string(RegionLayout layout);
RegionLayout parse_region_layout(const std::string& text);

/// Class of every pixel. Blob: class 0 background with seeded discs of the
/// other classes. Stripes: k equal vertical bands. Voronoi: 2k seeded sites,
/// site i belongs to class i mod k.
SegmentationMask region_layout(const SyntheticSpec& spec, std::uint64_t seed);

/// Draws every pixel from its class Gaussian, clamps to [0,1] and redraws a
/// seeded outlier_fraction of pixels from the outlier Gaussian while keeping
/// their ground-truth class.
LabeledImage generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace dcgn
