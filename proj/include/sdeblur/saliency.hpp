#pragma once

#include <utility>

#include "sdeblur/convolve.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"

namespace sdeblur {

namespace detail {

/// Separable 5-tap binomial low-pass, replicate boundary.
inline PlanarImage binomial5_blur(const PlanarImage& img) {
    static constexpr double tap[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    PlanarImage tmp(img.width, img.height, img.channels);
    PlanarImage out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        parallel_rows(img.height, [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y)
                for (int x = 0; x < img.width; ++x) {
                    double s = 0;
                    for (int t = -2; t <= 2; ++t) s += tap[t + 2] * img.at_r(x + t, y, c);
                    tmp.at(x, y, c) = s;
                }
        });
        parallel_rows(img.height, [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y)
                for (int x = 0; x < img.width; ++x) {
                    double s = 0;
                    for (int t = -2; t <= 2; ++t) s += tap[t + 2] * tmp.at_r(x, y + t, c);
                    out.at(x, y, c) = s;
                }
        });
    }
    return out;
}

}  // namespace detail

/// Frequency-tuned saliency: Lab distance between the global mean and a
/// low-passed image, rescaled to [0,1] by the maximum.
inline PlanarImage saliency_map(const PlanarImage& image) {
    PlanarImage lab = rgb_to_lab(image);
    PlanarImage blur = detail::binomial5_blur(lab);
    double mean[3] = {0, 0, 0};
    for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int y = 0; y < lab.height; ++y)
            for (int x = 0; x < lab.width; ++x) s += lab.at(x, y, c);
        mean[c] = s / (static_cast<double>(lab.width) * lab.height);
    }
    PlanarImage s(image.width, image.height, 1);
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
            double d2 = 0;
            for (int c = 0; c < 3; ++c) {
                double d = mean[c] - blur.at(x, y, c);
                d2 += d * d;
            }
            s.at(x, y) = std::sqrt(d2);
        }
    double mx = image_max(s);
    if (mx > 0)
        for (double& v : s.data) v /= mx;
    return s;
}

/// Dilation by a pixelized disk: offsets with dx^2 + dy^2 <= (radius + 0.5)^2.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) throw Error("dilate radius must be non-negative");
    std::vector<std::pair<int, int>> disk;
    double r2 = (radius + 0.5) * (radius + 0.5);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= r2) disk.emplace_back(dx, dy);
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (auto [dx, dy] : disk) {
                int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < mask.width && ny >= 0 && ny < mask.height)
                    out.at(nx, ny) = 1;
            }
        }
    return out;
}

inline BinaryMask binarize_and_dilate(const PlanarImage& s, double threshold_scale,
                                      int dilate_radius) {
    if (s.channels != 1) throw Error("binarize_and_dilate expects a single channel");
    if (threshold_scale <= 0) throw Error("threshold_scale must be positive");
    BinaryMask mask(s.width, s.height);
    if (image_max(s) <= 0) return mask;  // all-zero map stays empty
    double thr = threshold_scale * image_mean(s);
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) mask.at(x, y) = s.at(x, y) >= thr ? 1 : 0;
    return dilate(mask, dilate_radius);
}

/// Maximum-area axis-aligned rectangle of 0-bits with both sides >= min_side.
/// Ties break on smaller y, then x, then height.
inline Rect largest_background_rectangle(const BinaryMask& mask, int min_side = 1) {
    if (min_side < 1) min_side = 1;
    Rect best{0, 0, 0, 0};
    auto consider = [&](const Rect& r) {
        if (r.w < min_side || r.h < min_side) return;
        if (best.area() == 0 || r.area() > best.area() ||
            (r.area() == best.area() &&
             std::tie(r.y, r.x, r.h) < std::tie(best.y, best.x, best.h)))
            best = r;
    };
    std::vector<int> height(mask.width, 0);
    std::vector<std::pair<int, int>> stack;  // (start column, bar height), heights increasing
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x)
            height[x] = mask.at(x, y) ? 0 : height[x] + 1;
        // histogram-stack sweep with a trailing sentinel column of height 0
        stack.clear();
        for (int x = 0; x <= mask.width; ++x) {
            int h = x < mask.width ? height[x] : 0;
            int start = x;
            while (!stack.empty() && stack.back().second >= h) {
                auto [s, bh] = stack.back();
                stack.pop_back();
                consider(Rect{s, y - bh + 1, x - s, bh});
                start = s;
            }
            if (h > 0 && (stack.empty() || stack.back().second < h))
                stack.emplace_back(start, h);
        }
    }
    if (best.area() == 0) throw Error("background too small");
    return best;
}

inline std::pair<PlanarImage, PlanarImage> separate(const PlanarImage& image,
                                                    const BinaryMask& mask) {
    if (mask.width != image.width || mask.height != image.height)
        throw Error("mask dimensions do not match image");
    PlanarImage fg(image.width, image.height, image.channels);
    PlanarImage bg(image.width, image.height, image.channels);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x) {
                double v = image.at(x, y, c);
                if (mask.at(x, y))
                    fg.at(x, y, c) = v;
                else
                    bg.at(x, y, c) = v;
            }
    return {std::move(fg), std::move(bg)};
}

/// mask * (kernel (*) image) + (1 - mask) * image. Bit-selected so unmasked
/// pixels pass through exactly.
inline PlanarImage fuse_compensate(const PlanarImage& image, const BinaryMask& mask,
                                   const BlurKernel& kernel) {
    if (mask.width != image.width || mask.height != image.height)
        throw Error("mask dimensions do not match image");
    if (mask.count() == 0) return image;
    PlanarImage blurred = convolve(image, kernel);
    PlanarImage out = image;
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                if (mask.at(x, y)) out.at(x, y, c) = blurred.at(x, y, c);
    return out;
}

/// mask * original + (1 - mask) * deblurred, bit-selected.
inline PlanarImage fuse_final(const PlanarImage& original, const PlanarImage& deblurred,
                              const BinaryMask& mask) {
    if (!original.same_shape(deblurred)) throw Error("image dimensions do not match");
    if (mask.width != original.width || mask.height != original.height)
        throw Error("mask dimensions do not match image");
    PlanarImage out = deblurred;
    for (int c = 0; c < original.channels; ++c)
        for (int y = 0; y < original.height; ++y)
            for (int x = 0; x < original.width; ++x)
                if (mask.at(x, y)) out.at(x, y, c) = original.at(x, y, c);
    return out;
}

/// One blurry region of a multi-region image: its mask, the complement that
/// drives compensate fusion, and the masked-out region pixels.
struct RegionPlan {
    BinaryMask mask;
    BinaryMask fusion_mask;  // complement: pixels to pre-blur before deconvolution
    PlanarImage region_image;
};

inline std::vector<RegionPlan> multi_region_plan(const PlanarImage& image,
                                                 const std::vector<BinaryMask>& masks) {
    std::vector<int> coverage(static_cast<size_t>(image.width) * image.height, 0);
    for (const BinaryMask& m : masks) {
        if (m.width != image.width || m.height != image.height)
            throw Error("mask dimensions do not match image");
        for (size_t i = 0; i < m.bits.size(); ++i)
            if (m.bits[i] && ++coverage[i] > 1) throw Error("masks overlap");
    }
    std::vector<RegionPlan> plans;
    plans.reserve(masks.size());
    for (const BinaryMask& m : masks)
        plans.push_back({m, complement(m), separate(image, m).first});
    return plans;
}

/// Fused image for one region: blur everything outside the region so the
/// whole frame shares that region's kernel.
inline PlanarImage region_fused(const PlanarImage& image, const RegionPlan& plan,
                                const BlurKernel& kernel) {
    return fuse_compensate(image, plan.fusion_mask, kernel);
}

/// Final composition: each region takes its own deblurred result, everything
/// else keeps the original pixels exactly.
inline PlanarImage multi_region_compose(const PlanarImage& image,
                                        const std::vector<BinaryMask>& masks,
                                        const std::vector<PlanarImage>& deblurred) {
    if (masks.size() != deblurred.size()) throw Error("mask/result count mismatch");
    PlanarImage out = image;
    for (size_t i = 0; i < masks.size(); ++i) {
        const BinaryMask& m = masks[i];
        if (m.width != image.width || m.height != image.height)
            throw Error("mask dimensions do not match image");
        if (!deblurred[i].same_shape(image)) throw Error("image dimensions do not match");
        for (int c = 0; c < image.channels; ++c)
            for (int y = 0; y < image.height; ++y)
                for (int x = 0; x < image.width; ++x)
                    if (m.at(x, y)) out.at(x, y, c) = deblurred[i].at(x, y, c);
    }
    return out;
}

}  // namespace sdeblur
