#include "dcgn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace dcgn {

namespace {

constexpr double kDefaultClassStd = 0.05;
constexpr int kBlobsPerClass = 3;
constexpr double kBlobRadiusLow = 0.08;
constexpr double kBlobRadiusHigh = 0.2;

bool valid_rgb(const Rgb& v, double lo, double hi, bool strict_low) {
  return std::all_of(v.begin(), v.end(), [&](double x) {
    return std::isfinite(x) && (strict_low ? x > lo : x >= lo) && x <= hi;
  });
}

}  // namespace

std::vector<Rgb> default_class_means(int k) {
  std::vector<Rgb> out;
  for (int c = 0; c < k; ++c) {
    const double v = k == 1 ? 0.5 : 0.2 + 0.6 * c / (k - 1);
    out.push_back({v, v, v});
  }
  return out;
}

SyntheticSpec SyntheticSpec::resolved() const {
  SyntheticSpec s = *this;
  if (s.width < 1 || s.height < 1) throw InvalidInput("synthetic size must be positive");
  if (s.k < 1) throw InvalidInput("synthetic k must be positive");
  if (s.class_means.empty()) s.class_means = default_class_means(s.k);
  if (s.class_stds.empty()) {
    s.class_stds.assign(static_cast<std::size_t>(s.k), Rgb{kDefaultClassStd, kDefaultClassStd, kDefaultClassStd});
  }
  if (static_cast<int>(s.class_means.size()) != s.k || static_cast<int>(s.class_stds.size()) != s.k) {
    throw InvalidInput("synthetic spec needs one mean and one std per class");
  }
  for (const auto& m : s.class_means) {
    if (!valid_rgb(m, 0.0, 1.0, false)) throw InvalidInput("class means must lie in [0,1]");
  }
  for (const auto& sd : s.class_stds) {
    if (!valid_rgb(sd, 0.0, std::numeric_limits<double>::max(), false)) {
      throw InvalidInput("class stds must be finite and non-negative");
    }
  }
  if (!(s.outlier_fraction >= 0.0 && s.outlier_fraction < 1.0)) {
    throw InvalidInput("outlier_fraction must lie in [0,1)");
  }
  if (!valid_rgb(s.outlier_mean, 0.0, 1.0, false)) throw InvalidInput("outlier mean must lie in [0,1]");
  if (!valid_rgb(s.outlier_std, 0.0, std::numeric_limits<double>::max(), false)) {
    throw InvalidInput("outlier std must be finite and non-negative");
  }
  if (s.outlier_class < -1 || s.outlier_class >= s.k) throw InvalidInput("outlier_class out of range");
  return s;
}

std::string to_string(RegionLayout layout) {
  switch (layout) {
    case RegionLayout::Blob:
      return "blob";
    case RegionLayout::Stripes:
      return "stripes";
    case RegionLayout::Voronoi:
      return "voronoi";
  }
  return "blob";
}

RegionLayout parse_region_layout(const std::string& text) {
  if (text == "blob") return RegionLayout::Blob;
  if (text == "stripes") return RegionLayout::Stripes;
  if (text == "voronoi") return RegionLayout::Voronoi;
  throw InvalidInput("unknown layout '" + text + "'");
}

SegmentationMask region_layout(const SyntheticSpec& spec, std::uint64_t seed) {
  const int w = spec.width;
  const int h = spec.height;
  const int k = spec.k;
  SegmentationMask mask{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, 0)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, w);
  std::uniform_real_distribution<double> uy(0.0, h);

  switch (spec.layout) {
    case RegionLayout::Stripes:
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          mask.labels[static_cast<std::size_t>(y) * w + x] =
              static_cast<int>(static_cast<long long>(x) * k / w);
        }
      }
      break;
    case RegionLayout::Blob: {
      const double scale = std::min(w, h);
      std::uniform_real_distribution<double> radius(kBlobRadiusLow * scale, kBlobRadiusHigh * scale);
      for (int c = 1; c < k; ++c) {
        for (int b = 0; b < kBlobsPerClass; ++b) {
          const double cx = ux(rng);
          const double cy = uy(rng);
          const double r = radius(rng);
          for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
              const double dx = x + 0.5 - cx;
              const double dy = y + 0.5 - cy;
              if (dx * dx + dy * dy <= r * r) mask.labels[static_cast<std::size_t>(y) * w + x] = c;
            }
          }
        }
      }
      break;
    }
    case RegionLayout::Voronoi: {
      std::vector<std::array<double, 2>> sites;
      for (int i = 0; i < 2 * k; ++i) sites.push_back({ux(rng), uy(rng)});
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double best = std::numeric_limits<double>::infinity();
          int arg = 0;
          for (int i = 0; i < 2 * k; ++i) {
            const double dx = x + 0.5 - sites[static_cast<std::size_t>(i)][0];
            const double dy = y + 0.5 - sites[static_cast<std::size_t>(i)][1];
            const double d2 = dx * dx + dy * dy;
            if (d2 < best) {
              best = d2;
              arg = i;
            }
          }
          mask.labels[static_cast<std::size_t>(y) * w + x] = arg % k;
        }
      }
      break;
    }
  }
  return mask;
}

LabeledImage generate_synthetic(const SyntheticSpec& raw, std::uint64_t seed) {
  const SyntheticSpec spec = raw.resolved();
  std::mt19937_64 rng(seed);
  SegmentationMask truth = region_layout(spec, rng());

  ImageTensor img = ImageTensor::zeros(spec.width, spec.height, 3);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&](int x, int y, const Rgb& mean, const Rgb& sd) {
    for (int c = 0; c < 3; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      img(x, y, c) = std::clamp(mean[cs] + sd[cs] * unit(rng), 0.0, 1.0);
    }
  };
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const auto label = static_cast<std::size_t>(truth.at(x, y));
      draw(x, y, spec.class_means[label], spec.class_stds[label]);
    }
  }

  if (spec.outlier_fraction > 0.0) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (spec.outlier_class < 0 || truth.labels[i] == spec.outlier_class) candidates.push_back(i);
    }
    const auto count = static_cast<std::size_t>(
        std::llround(spec.outlier_fraction * static_cast<double>(truth.size())));
    const std::size_t take = std::min(count, candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
      std::swap(candidates[i], candidates[pick(rng)]);
      const std::size_t p = candidates[i];
      draw(static_cast<int>(p % static_cast<std::size_t>(spec.width)),
           static_cast<int>(p / static_cast<std::size_t>(spec.width)), spec.outlier_mean,
           spec.outlier_std);
    }
  }
  return LabeledImage{std::move(img), std::move(truth), std::nullopt};
}

}  // namespace dcgn
