#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "sdeblur/convolve.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"

namespace sdeblur {

namespace detail {

/// Seeded generator with platform-pinned output: raw mt19937_64 words mapped
/// to doubles, normals via Box-Muller (std::normal_distribution is not
/// bit-portable across standard libraries).
struct Rng {
    std::mt19937_64 g;
    bool has_spare = false;
    double spare = 0.0;

    explicit Rng(uint64_t seed) : g(seed) {}

    double uniform() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }  // [0,1)

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * std::numbers::pi * u2;
        spare = r * std::sin(t);
        has_spare = true;
        return r * std::cos(t);
    }
};

}  // namespace detail

inline double rmse(const PlanarImage& a, const PlanarImage& b,
                   const BinaryMask* mask = nullptr) {
    if (!a.same_shape(b)) throw Error("image dimensions do not match");
    if (mask && (mask->width != a.width || mask->height != a.height))
        throw Error("mask dimensions do not match image");
    double s = 0.0;
    size_t n = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                if (mask && !mask->at(x, y)) continue;
                double d = a.at(x, y, c) - b.at(x, y, c);
                s += d * d;
                ++n;
            }
    if (n == 0) throw Error("mask selects no pixels");
    return std::sqrt(s / static_cast<double>(n));
}

struct SynthSpec {
    enum class Family { line, gaussian, disk };
    Family family = Family::line;
    int size = 15;           // kernel grid side (odd)
    double length = 15.0;    // line family
    double angle_deg = 0.0;  // line family
    double sigma = 2.0;      // gaussian family
    double radius = 3.0;     // disk family
    double noise_sigma = 0.0;
    uint64_t seed = 1;
};

inline BlurKernel synth_kernel(const SynthSpec& spec) {
    BlurKernel k(spec.size);
    double c = k.center();
    switch (spec.family) {
        case SynthSpec::Family::line: {
            if (spec.length <= 0) throw Error("line length must be positive");
            double a = spec.angle_deg * std::numbers::pi / 180.0;
            double dx = std::cos(a), dy = std::sin(a);
            // length counts covered pixels, so a length-1 line is a delta
            double extent = spec.length - 1.0;
            int steps = std::max(1, static_cast<int>(std::ceil(extent * 8)));
            for (int i = 0; i <= steps; ++i) {
                double t = extent * (static_cast<double>(i) / steps - 0.5);
                double px = c + t * dx, py = c + t * dy;
                int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
                double fx = px - x0, fy = py - y0;
                // bilinear splat, silently clipped at the grid border
                auto put = [&](int x, int y, double w) {
                    if (x >= 0 && x < k.size && y >= 0 && y < k.size) k.at(x, y) += w;
                };
                put(x0, y0, (1 - fx) * (1 - fy));
                put(x0 + 1, y0, fx * (1 - fy));
                put(x0, y0 + 1, (1 - fx) * fy);
                put(x0 + 1, y0 + 1, fx * fy);
            }
            break;
        }
        case SynthSpec::Family::gaussian: {
            if (spec.sigma <= 0) throw Error("sigma must be positive");
            for (int y = 0; y < k.size; ++y)
                for (int x = 0; x < k.size; ++x) {
                    double r2 = (x - c) * (x - c) + (y - c) * (y - c);
                    k.at(x, y) = std::exp(-r2 / (2.0 * spec.sigma * spec.sigma));
                }
            break;
        }
        case SynthSpec::Family::disk: {
            if (spec.radius <= 0) throw Error("radius must be positive");
            // 4x4 supersampled coverage for a softly antialiased rim
            for (int y = 0; y < k.size; ++y)
                for (int x = 0; x < k.size; ++x) {
                    int hit = 0;
                    for (int sy = 0; sy < 4; ++sy)
                        for (int sx = 0; sx < 4; ++sx) {
                            double px = x + (sx + 0.5) / 4.0 - 0.5 - c;
                            double py = y + (sy + 0.5) / 4.0 - 0.5 - c;
                            if (px * px + py * py <= spec.radius * spec.radius) ++hit;
                        }
                    k.at(x, y) = hit / 16.0;
                }
            break;
        }
    }
    k.normalize();
    return k;
}

/// Forward synthesis: blur with the requested kernel, add seeded Gaussian
/// noise, clamp back to [0,1].
inline PlanarImage synth_blur(const PlanarImage& sharp, const SynthSpec& spec) {
    PlanarImage out = convolve(sharp, synth_kernel(spec));
    if (spec.noise_sigma > 0) {
        detail::Rng rng(spec.seed);
        for (double& v : out.data) v += spec.noise_sigma * rng.normal();
    }
    clamp01(out);
    return out;
}

/// Deterministic synthetic test card: a smooth wash plus seeded rectangles,
/// disks and thin lines, giving high-contrast edges at many orientations so
/// blur-induced error is dominated by structure rather than noise.
inline PlanarImage make_test_image(int w, int h, int channels, uint64_t seed) {
    detail::Rng rng(seed);
    PlanarImage img(w, h, channels);
    double ax = rng.uniform(1.0, 3.0), ay = rng.uniform(1.0, 3.0);
    double px = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double py = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int c = 0; c < channels; ++c) {
        double off = 0.1 * c;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(x, y, c) =
                    0.45 + 0.2 * std::sin(2.0 * std::numbers::pi * ax * x / w + px + off) *
                               std::sin(2.0 * std::numbers::pi * ay * y / h + py + off);
    }
    int figures = std::max(12, w * h / 1024);
    for (int f = 0; f < figures; ++f) {
        int kind = rng.uniform_int(0, 2);
        // alternate dark and bright figures so neighbors form strong steps
        double lo = rng.uniform(0.02, 0.2), hi = rng.uniform(0.8, 0.98);
        double base = f % 2 == 0 ? lo : hi;
        double vals[3] = {base, std::clamp(base + rng.uniform(-0.1, 0.1), 0.0, 1.0),
                          std::clamp(base + rng.uniform(-0.1, 0.1), 0.0, 1.0)};
        if (kind == 0) {  // rectangle
            int rw = rng.uniform_int(w / 16 + 2, w / 4 + 2);
            int rh = rng.uniform_int(h / 16 + 2, h / 4 + 2);
            int rx = rng.uniform_int(0, std::max(0, w - rw - 1));
            int ry = rng.uniform_int(0, std::max(0, h - rh - 1));
            for (int c = 0; c < channels; ++c)
                for (int y = ry; y < std::min(h, ry + rh); ++y)
                    for (int x = rx; x < std::min(w, rx + rw); ++x)
                        img.at(x, y, c) = vals[c % 3];
        } else if (kind == 1) {  // disk
            double r = rng.uniform(2.0, w / 10.0 + 3.0);
            double cx = rng.uniform(0.0, w - 1.0), cy = rng.uniform(0.0, h - 1.0);
            int x0 = std::max(0, static_cast<int>(cx - r - 1));
            int x1 = std::min(w - 1, static_cast<int>(cx + r + 1));
            int y0 = std::max(0, static_cast<int>(cy - r - 1));
            int y1 = std::min(h - 1, static_cast<int>(cy + r + 1));
            for (int c = 0; c < channels; ++c)
                for (int y = y0; y <= y1; ++y)
                    for (int x = x0; x <= x1; ++x)
                        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
                            img.at(x, y, c) = vals[c % 3];
        } else {  // thin line segment
            double x0 = rng.uniform(0.0, w - 1.0), y0 = rng.uniform(0.0, h - 1.0);
            double ang = rng.uniform(0.0, std::numbers::pi);
            double len = rng.uniform(w / 8.0, w / 2.0);
            int steps = static_cast<int>(len * 2);
            for (int i = 0; i <= steps; ++i) {
                int x = static_cast<int>(std::lround(x0 + std::cos(ang) * len * i / steps));
                int y = static_cast<int>(std::lround(y0 + std::sin(ang) * len * i / steps));
                if (x < 0 || x >= w || y < 0 || y >= h) continue;
                for (int c = 0; c < channels; ++c) img.at(x, y, c) = vals[c % 3];
            }
        }
    }
    clamp01(img);
    return img;
}

/// One benchmark row: forward-synthesis ground truth versus a deblur result.
struct BenchRecord {
    std::string id;
    int width = 0;
    int height = 0;
    int kernel_size = 0;
    double rmse_blurry = 0.0;
    double rmse_deblurred = 0.0;
    double kernel_ncc = 0.0;
    double seconds = 0.0;
};

}  // namespace sdeblur
