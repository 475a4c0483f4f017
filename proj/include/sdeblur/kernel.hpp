#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdeblur/image.hpp"

namespace sdeblur {

/// Square, odd-sized blur kernel (PSF). After normalize() all weights are
/// non-negative and sum to 1.
struct BlurKernel {
    int size = 0;
    std::vector<double> w;

    BlurKernel() = default;
    explicit BlurKernel(int s, double fill = 0.0)
        : size(s), w(static_cast<size_t>(s) * s, fill) {
        if (s < 1 || s % 2 == 0) throw Error("kernel size must be odd and >= 1");
    }

    double& at(int x, int y) { return w[static_cast<size_t>(y) * size + x]; }
    double at(int x, int y) const { return w[static_cast<size_t>(y) * size + x]; }
    int center() const { return size / 2; }

    double sum() const {
        double s = 0.0;
        for (double v : w) s += v;
        return s;
    }
    double max_weight() const {
        double m = 0.0;
        for (double v : w) m = std::max(m, v);
        return m;
    }

    void normalize() {
        for (double& v : w) v = std::max(v, 0.0);
        double s = sum();
        if (s <= 0.0) throw Error("degenerate kernel: all weights zero");
        for (double& v : w) v /= s;
    }
};

inline BlurKernel delta_kernel(int size) {
    BlurKernel k(size);
    k.at(k.center(), k.center()) = 1.0;
    return k;
}

/// Centroid of the weight mass in kernel coordinates.
inline std::pair<double, double> kernel_centroid(const BlurKernel& k) {
    double s = 0.0, cx = 0.0, cy = 0.0;
    for (int y = 0; y < k.size; ++y)
        for (int x = 0; x < k.size; ++x) {
            s += k.at(x, y);
            cx += k.at(x, y) * x;
            cy += k.at(x, y) * y;
        }
    if (s <= 0.0) throw Error("degenerate kernel: all weights zero");
    return {cx / s, cy / s};
}

/// Circularly shifts the kernel so its centroid lands on the center cell
/// (rounded). Removes the translation ambiguity of blind estimation.
inline BlurKernel align_kernel(const BlurKernel& k) {
    auto [cx, cy] = kernel_centroid(k);
    int sx = static_cast<int>(std::lround(cx)) - k.center();
    int sy = static_cast<int>(std::lround(cy)) - k.center();
    BlurKernel out(k.size);
    for (int y = 0; y < k.size; ++y)
        for (int x = 0; x < k.size; ++x) {
            int nx = ((x - sx) % k.size + k.size) % k.size;
            int ny = ((y - sy) % k.size + k.size) % k.size;
            out.at(nx, ny) = k.at(x, y);
        }
    return out;
}

inline BlurKernel embed_kernel_centered(const BlurKernel& k, int size) {
    if (size < k.size) throw Error("embed target smaller than kernel");
    BlurKernel out(size);
    int off = (size - k.size) / 2;
    for (int y = 0; y < k.size; ++y)
        for (int x = 0; x < k.size; ++x) out.at(x + off, y + off) = k.at(x, y);
    return out;
}

/// Zero-mean normalized cross-correlation of two kernels at zero offset,
/// after embedding into a common size. 1 for identical shapes.
inline double kernel_ncc(const BlurKernel& a, const BlurKernel& b) {
    int size = std::max(a.size, b.size);
    BlurKernel ea = embed_kernel_centered(a, size);
    BlurKernel eb = embed_kernel_centered(b, size);
    double n = static_cast<double>(size) * size;
    double ma = ea.sum() / n, mb = eb.sum() / n;
    double num = 0.0, da = 0.0, db = 0.0;
    for (size_t i = 0; i < ea.w.size(); ++i) {
        double va = ea.w[i] - ma, vb = eb.w[i] - mb;
        num += va * vb;
        da += va * va;
        db += vb * vb;
    }
    if (da <= 0.0 || db <= 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

/// Bilinear kernel rescale followed by renormalization.
inline BlurKernel resize_kernel(const BlurKernel& k, int new_size) {
    if (new_size == k.size) return k;
    PlanarImage img(k.size, k.size, 1);
    img.data = k.w;
    PlanarImage r = resize(img, new_size, new_size);
    BlurKernel out(new_size);
    out.w = r.data;
    out.normalize();
    return out;
}

}  // namespace sdeblur
