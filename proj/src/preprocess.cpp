#include "dcgn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dcgn {

ImageTensor minmax_normalize(const ImageTensor& img) {
  ImageTensor out = img;
  const int c_count = img.channels();
  const auto data = img.data();
  for (int c = 0; c < c_count; ++c) {
    double lo = data[static_cast<std::size_t>(c)];
    double hi = lo;
    for (std::size_t i = static_cast<std::size_t>(c); i < data.size(); i += c_count) {
      lo = std::min(lo, data[i]);
      hi = std::max(hi, data[i]);
    }
    const double range = hi - lo;
    auto dst = out.data();
    for (std::size_t i = static_cast<std::size_t>(c); i < data.size(); i += c_count) {
      dst[i] = range > 0.0 ? (data[i] - lo) / range : 0.0;
    }
  }
  return out;
}

std::array<double, 3> rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = (g - b) / delta;
    } else if (mx == g) {
      h = 2.0 + (b - r) / delta;
    } else {
      h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double scaled = h * 6.0;
  const int sector = static_cast<int>(scaled) % 6;
  const double f = scaled - std::floor(scaled);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0:
      return {v, t, p};
    case 1:
      return {q, v, p};
    case 2:
      return {p, v, t};
    case 3:
      return {p, q, v};
    case 4:
      return {t, p, v};
    default:
      return {v, p, q};
  }
}

AugmentParams draw_augment_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hue(-kHueDelta, kHueDelta);
  std::uniform_real_distribution<double> sat(kSaturationLow, kSaturationHigh);
  std::bernoulli_distribution flip(kFlipProbability);
  AugmentParams p;
  p.hue_offset = hue(rng);
  p.saturation_factor = sat(rng);
  p.flip_up_down = flip(rng);
  p.flip_left_right = flip(rng);
  return p;
}

ImageTensor apply_augment(const ImageTensor& img, const AugmentParams& params) {
  const int w = img.width();
  const int h = img.height();
  const int cc = img.channels();
  ImageTensor out = ImageTensor::zeros(w, h, cc);
  const bool colour = cc == 3 && (params.hue_offset != 0.0 || params.saturation_factor != 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = params.flip_left_right ? w - 1 - x : x;
      const int sy = params.flip_up_down ? h - 1 - y : y;
      if (colour) {
        auto [hh, ss, vv] = rgb_to_hsv(img(sx, sy, 0), img(sx, sy, 1), img(sx, sy, 2));
        hh += params.hue_offset;
        ss = std::clamp(ss * params.saturation_factor, 0.0, 1.0);
        const auto rgb = hsv_to_rgb(hh, ss, vv);
        for (int c = 0; c < 3; ++c) out(x, y, c) = std::clamp(rgb[static_cast<std::size_t>(c)], 0.0, 1.0);
      } else {
        for (int c = 0; c < cc; ++c) out(x, y, c) = std::clamp(img(sx, sy, c), 0.0, 1.0);
      }
    }
  }
  return out;
}

ImageTensor augment(const ImageTensor& img, std::uint64_t seed) {
  return apply_augment(img, draw_augment_params(seed));
}

}  // namespace dcgn
