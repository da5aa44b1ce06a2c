#pragma once

#include "skelpt/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace skelpt {

/// Row-major 8-bit RGB framebuffer.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // 3 * width * height

    Image(int w, int h, uint8_t r, uint8_t g, uint8_t b);
    void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
    void fill_disc(double cx, double cy, double radius, uint8_t r, uint8_t g, uint8_t b);
};

/// Truecolor, non-interlaced, filter 0 on every scanline.
void write_png(const Image& img, const std::filesystem::path& file);

/// Two orthographic panels (left: xy top view, right: xz side view) on a dark
/// background: input cloud in gray, reference sheet samples in orange, and
/// predicted skeletal points as white dots on top. Either skeleton argument
/// may be null to omit that layer.
void render_skeleton_overlay(const PointCloud& cloud, const PointSet* reference_skel,
                             const PointSet* predicted_skel, const std::filesystem::path& file);

}  // namespace skelpt
