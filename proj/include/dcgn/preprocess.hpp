#pragma once

#include "dcgn/types.hpp"

#include <array>
#include <cstdint>

namespace dcgn {

inline constexpr double kHueDelta = 0.12;
inline constexpr double kSaturationLow = 0.5;
inline constexpr double kSaturationHigh = 1.5;
inline constexpr double kFlipProbability = 0.5;

/// Per channel (X - min) / (max - min); constant channels become zero.
ImageTensor minmax_normalize(const ImageTensor& img);

/// HSV with every component in [0,1]; hue of a grey pixel is 0.
std::array<double, 3> rgb_to_hsv(double r, double g, double b);
std::array<double, 3> hsv_to_rgb(double h, double s, double v);

struct AugmentParams {
  double hue_offset = 0.0;
  double saturation_factor = 1.0;
  bool flip_up_down = false;
  bool flip_left_right = false;
};

/// Draws hue offset in [-kHueDelta, kHueDelta], saturation factor in
/// [kSaturationLow, kSaturationHigh] and each flip with kFlipProbability.
AugmentParams draw_augment_params(std::uint64_t seed);

/// Colour changes apply to 3-channel images only; flips apply to any image.
/// The output is clamped to [0,1].
ImageTensor apply_augment(const ImageTensor& img, const AugmentParams& params);

ImageTensor augment(const ImageTensor& img, std::uint64_t seed);

}  // namespace dcgn
