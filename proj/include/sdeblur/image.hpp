#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdeblur/parallel.hpp"

namespace sdeblur {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Real-valued pixel grid with 1 or 3 channels, planar layout
/// (channel plane, then row-major), values nominally in [0,1].
struct PlanarImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    PlanarImage() = default;
    PlanarImage(int w, int h, int c = 1, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw Error("invalid image dimensions");
    }

    size_t plane_size() const { return static_cast<size_t>(width) * height; }

    double& at(int x, int y, int c = 0) {
        return data[plane_size() * c + static_cast<size_t>(y) * width + x];
    }
    double at(int x, int y, int c = 0) const {
        return data[plane_size() * c + static_cast<size_t>(y) * width + x];
    }
    // replicate boundary
    double at_r(int x, int y, int c = 0) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y, c);
    }

    bool same_shape(const PlanarImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<size_t>(w) * h, fill) {}

    uint8_t& at(int x, int y) { return bits[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x]; }

    size_t count() const {
        size_t n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }
    bool empty_mask() const { return count() == 0; }
    bool full_mask() const { return count() == bits.size(); }
};

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
    long long area() const { return static_cast<long long>(w) * h; }
    bool operator==(const Rect&) const = default;
};

/// Per-pixel (dx, dy) pair with the same dimensions as the source image.
struct GradientField {
    PlanarImage dx;
    PlanarImage dy;
};

inline BinaryMask complement(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (size_t i = 0; i < m.bits.size(); ++i) out.bits[i] = m.bits[i] ? 0 : 1;
    return out;
}

inline double image_mean(const PlanarImage& img) {
    double s = 0.0;
    for (double v : img.data) s += v;
    return img.data.empty() ? 0.0 : s / static_cast<double>(img.data.size());
}

inline double image_max(const PlanarImage& img) {
    double m = img.data.empty() ? 0.0 : img.data[0];
    for (double v : img.data) m = std::max(m, v);
    return m;
}

inline void clamp01(PlanarImage& img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

inline PlanarImage extract_channel(const PlanarImage& img, int c) {
    PlanarImage out(img.width, img.height, 1);
    std::copy_n(img.data.begin() + img.plane_size() * c, img.plane_size(),
                out.data.begin());
    return out;
}

inline PlanarImage crop(const PlanarImage& img, const Rect& r) {
    if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0 ||
        r.x + r.w > img.width || r.y + r.h > img.height)
        throw Error("crop rectangle out of bounds");
    PlanarImage out(r.w, r.h, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                out.at(x, y, c) = img.at(r.x + x, r.y + y, c);
    return out;
}

/// Bilinear resize (corner-aligned). Resizing to the same dimensions
/// returns the image unchanged.
inline PlanarImage resize(const PlanarImage& img, int new_w, int new_h) {
    if (new_w <= 0 || new_h <= 0) throw Error("resize target must be positive");
    if (new_w == img.width && new_h == img.height) return img;
    PlanarImage out(new_w, new_h, img.channels);
    double fx = new_w > 1 ? static_cast<double>(img.width - 1) / (new_w - 1) : 0.0;
    double fy = new_h > 1 ? static_cast<double>(img.height - 1) / (new_h - 1) : 0.0;
    for (int c = 0; c < img.channels; ++c) {
        parallel_rows(new_h, [&, c](int y0, int y1) {
            for (int y = y0; y < y1; ++y) {
                double sy = y * fy;
                int iy = std::min(static_cast<int>(sy), img.height - 1);
                double ty = sy - iy;
                int iy1 = std::min(iy + 1, img.height - 1);
                for (int x = 0; x < new_w; ++x) {
                    double sx = x * fx;
                    int ix = std::min(static_cast<int>(sx), img.width - 1);
                    double tx = sx - ix;
                    int ix1 = std::min(ix + 1, img.width - 1);
                    double top = img.at(ix, iy, c) * (1 - tx) + img.at(ix1, iy, c) * tx;
                    double bot = img.at(ix, iy1, c) * (1 - tx) + img.at(ix1, iy1, c) * tx;
                    out.at(x, y, c) = top * (1 - ty) + bot * ty;
                }
            }
        });
    }
    return out;
}

inline PlanarImage rgb_to_gray(const PlanarImage& img) {
    if (img.channels == 1) return img;
    PlanarImage out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                           0.114 * img.at(x, y, 2);
    return out;
}

namespace detail {
inline double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}
inline double lab_f(double t) {
    constexpr double kEps = 216.0 / 24389.0;
    constexpr double kKappa = 24389.0 / 27.0;
    return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}
}  // namespace detail

/// sRGB -> CIELAB under the D65 white point. L in [0,100], a/b roughly
/// [-128,128]; a neutral input (R=G=B) maps to a=b=0.
inline PlanarImage rgb_to_lab(const PlanarImage& img) {
    if (img.channels != 3) throw Error("rgb_to_lab expects a 3-channel image");
    // D65 reference white
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    PlanarImage out(img.width, img.height, 3);
    parallel_rows(img.height, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < img.width; ++x) {
                double r = detail::srgb_to_linear(img.at(x, y, 0));
                double g = detail::srgb_to_linear(img.at(x, y, 1));
                double b = detail::srgb_to_linear(img.at(x, y, 2));
                double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
                double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
                double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
                double fx = detail::lab_f(X / xn);
                double fy = detail::lab_f(Y / yn);
                double fz = detail::lab_f(Z / zn);
                out.at(x, y, 0) = 116.0 * fy - 16.0;
                out.at(x, y, 1) = 500.0 * (fx - fy);
                out.at(x, y, 2) = 200.0 * (fy - fz);
            }
        }
    });
    return out;
}

}  // namespace sdeblur
