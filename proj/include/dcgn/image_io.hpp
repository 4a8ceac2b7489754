#pragma once

#include "dcgn/types.hpp"

#include <array>
#include <filesystem>

namespace dcgn {

/// Reads any PNG as RGB in [0,1]. Grey images are replicated to three
/// channels, alpha is dropped, palettes are expanded.
ImageTensor read_rgb_png(const std::filesystem::path& path);

/// Writes 8-bit RGB (3 channels) or 8-bit grey (1 channel); values are
/// clamped to [0,1] and rounded.
void write_rgb_png(const std::filesystem::path& path, const ImageTensor& img);

/// 8-bit grey PNG holding class indices.
SegmentationMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const SegmentationMask& mask);

/// 16-bit grey PNG holding instance ids, 0 = background.
InstanceMask read_instance_png(const std::filesystem::path& path);
void write_instance_png(const std::filesystem::path& path, const InstanceMask& mask);

/// Fixed colour per class index.
std::array<std::uint8_t, 3> palette_colour(int class_id);

/// Blends the class palette over the image with the given opacity.
void write_overlay_png(const std::filesystem::path& path, const ImageTensor& img,
                       const SegmentationMask& mask, double opacity = 0.5);

}  // namespace dcgn
