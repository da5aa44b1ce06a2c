#include "skelpt/viz.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace skelpt {

namespace {

void put_u32be(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32be(out, static_cast<uint32_t>(data.size()));
    const size_t crc_start = out.size();
    out.append(type, 4);
    out.append(data);
    const auto* p = reinterpret_cast<const Bytef*>(out.data() + crc_start);
    const uLong crc = crc32(0L, p, static_cast<uInt>(4 + data.size()));
    put_u32be(out, static_cast<uint32_t>(crc));
}

}  // namespace

Image::Image(int w, int h, uint8_t r, uint8_t g, uint8_t b)
    : width(w), height(h), rgb(static_cast<size_t>(3) * w * h) {
    for (size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }
}

void Image::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = 3 * (static_cast<size_t>(y) * width + x);
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

void Image::fill_disc(double cx, double cy, double radius, uint8_t r, uint8_t g, uint8_t b) {
    const int x0 = static_cast<int>(std::floor(cx - radius));
    const int x1 = static_cast<int>(std::ceil(cx + radius));
    const int y0 = static_cast<int>(std::floor(cy - radius));
    const int y1 = static_cast<int>(std::ceil(cy + radius));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            if (dx * dx + dy * dy <= radius * radius) set(x, y, r, g, b);
        }
    }
}

void write_png(const Image& img, const std::filesystem::path& file) {
    // Raw stream: every scanline prefixed with filter byte 0.
    std::string raw;
    raw.reserve(static_cast<size_t>(img.height) * (1 + 3 * static_cast<size_t>(img.width)));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back('\0');
        raw.append(reinterpret_cast<const char*>(img.rgb.data() + 3 * static_cast<size_t>(y) *
                                                                      img.width),
                   3 * static_cast<size_t>(img.width));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string idat(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(idat.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK) {
        throw std::runtime_error("png compression failed for " + file.string());
    }
    idat.resize(bound);

    std::string ihdr;
    put_u32be(ihdr, static_cast<uint32_t>(img.width));
    put_u32be(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // adaptive filtering
    ihdr.push_back(0);   // no interlace

    std::string png("\x89PNG\r\n\x1a\n", 8);
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", idat);
    append_chunk(png, "IEND", "");

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write png " + file.string());
    }
    out.write(png.data(), static_cast<std::streamsize>(png.size()));
    if (!out) {
        throw std::runtime_error("short write to png " + file.string());
    }
}

namespace {

struct Panel {
    int x0, y0, size;   // pixel square
    int ax, ay;         // the two point coordinates shown (0=x, 1=y, 2=z)
    double cx, cy, half;  // data-space window

    double px(double v) const { return x0 + (v - cx) / half * (size / 2.0) + size / 2.0; }
    double py(double v) const { return y0 - (v - cy) / half * (size / 2.0) + size / 2.0; }

    void scatter(Image& img, const PointSet& pts, double radius, uint8_t r, uint8_t g,
                 uint8_t b) const {
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            img.fill_disc(px(pts(i, ax)), py(pts(i, ay)), radius, r, g, b);
        }
    }
};

}  // namespace

void render_skeleton_overlay(const PointCloud& cloud, const PointSet* reference_skel,
                             const PointSet* predicted_skel, const std::filesystem::path& file) {
    // Common isotropic window: the bounding cube of everything drawn, padded.
    Vec3 lo = Vec3::Constant(-1.0);
    Vec3 hi = Vec3::Constant(1.0);
    bool first = true;
    const auto extend = [&](const PointSet* pts) {
        if (pts == nullptr || pts->rows() == 0) return;
        const Vec3 pmin = pts->colwise().minCoeff();
        const Vec3 pmax = pts->colwise().maxCoeff();
        if (first) {
            lo = pmin;
            hi = pmax;
            first = false;
        } else {
            lo = lo.cwiseMin(pmin);
            hi = hi.cwiseMax(pmax);
        }
    };
    extend(&cloud);
    extend(reference_skel);
    extend(predicted_skel);
    const Vec3 center = 0.5 * (lo + hi);
    const double half = std::max(1e-6, 0.55 * (hi - lo).maxCoeff());

    const int panel = 420;
    const int margin = 16;
    Image img(2 * panel + 3 * margin, panel + 2 * margin, 24, 26, 34);

    const Panel views[2] = {
        {margin, margin, panel, 0, 1, center.x(), center.y(), half},
        {2 * margin + panel, margin, panel, 0, 2, center.x(), center.z(), half},
    };
    for (const Panel& view : views) {
        view.scatter(img, cloud, 1.4, 120, 122, 132);
        if (reference_skel != nullptr) {
            view.scatter(img, *reference_skel, 2.0, 226, 148, 59);
        }
        if (predicted_skel != nullptr) {
            view.scatter(img, *predicted_skel, 2.4, 255, 255, 255);
        }
    }
    write_png(img, file);
}

}  // namespace skelpt
